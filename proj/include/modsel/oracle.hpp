#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "modsel/errors.hpp"
#include "modsel/types.hpp"

namespace modsel {

// Exact loss objects computed against the known conditional mean of a
// synthetic dataset.
struct ImseReport {
  std::string model_id;
  double L_full = 0.0;                 // (1/T) sum (mu_i - mu_hat_i)^2
  std::optional<double> L_loo;         // leave-out variant
  std::optional<double> L_poos;        // track variant with its own divisor
  std::optional<double> ratio_loo_full;
  Index poos_start = 0;
};

inline double imse_full(const Eigen::VectorXd& mu_true, const Eigen::VectorXd& mu_hat) {
  if (mu_true.size() != mu_hat.size() || mu_true.size() == 0) {
    throw DimensionMismatchError("imse_full: vectors must match and be nonempty");
  }
  return (mu_true - mu_hat).squaredNorm() / static_cast<double>(mu_true.size());
}

inline double imse_loo(const Eigen::VectorXd& mu_true, const Eigen::VectorXd& mu_loo) {
  return imse_full(mu_true, mu_loo);
}

// Mean squared mu-gap over the evaluation range, divisor T - start.
inline double imse_poos(const Eigen::VectorXd& mu_true, const PredictionTrack& track) {
  const Index T = mu_true.size();
  if (track.start_index < 0 || track.start_index >= T ||
      track.preds.size() != T - track.start_index) {
    throw DimensionMismatchError("imse_poos: track does not align with mu_true");
  }
  return (mu_true.tail(T - track.start_index) - track.preds).squaredNorm() /
         static_cast<double>(T - track.start_index);
}

struct OptimalityRatio {
  double value = 1.0;
  // True when the set minimum is below 1e-300; value is then 1 if the
  // selected model is also at zero, +inf otherwise.
  bool zero_denominator = false;
};

// L(selected) / min over the candidate set; >= 1 by construction.
inline OptimalityRatio optimality_ratio(const std::map<std::string, double>& imse_by_model,
                                        const std::string& selected) {
  if (imse_by_model.empty()) throw EmptyError("optimality_ratio: empty map");
  const auto it = imse_by_model.find(selected);
  if (it == imse_by_model.end()) {
    throw BadArgsError("optimality_ratio: selected model '" + selected + "' not in map");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, v] : imse_by_model) best = std::min(best, v);
  OptimalityRatio out;
  if (best < 1e-300) {
    out.zero_denominator = true;
    out.value = it->second < 1e-300 ? 1.0 : std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = it->second / best;
  return out;
}

enum class DecompositionVariant { Loo, Full, Poos };

// The squared-residual decomposition
//   (y_i - mu_out_i)^2 = eps_i^2 + 2 (mu_i - mu_out_i) eps_i + (mu_i - mu_out_i)^2
// holds exactly in real arithmetic; max_abs_identity_error is its floating
// point residual. The cross terms are the decomposition's averaged middle
// pieces, (1/n) sum 2 mu_i eps_i and (1/n) sum 2 mu_out_i eps_i.
struct DecompositionCheck {
  double max_abs_identity_error = 0.0;
  double cross_term_mu_eps = 0.0;
  double cross_term_muhat_eps = 0.0;
  DecompositionVariant variant = DecompositionVariant::Loo;
};

// mu_out covers rows start_index..T-1 (start_index 0 for loo/full variants;
// a track's start for the poos variant).
inline DecompositionCheck decomposition_check(const Dataset& data, const Eigen::VectorXd& mu_out,
                                              DecompositionVariant variant,
                                              Index start_index = 0) {
  if (!data.has_truth()) throw MissingTruthError("decomposition_check: dataset lacks mu_true");
  const Index T = data.rows();
  if (start_index < 0 || start_index >= T || mu_out.size() != T - start_index) {
    throw DimensionMismatchError("decomposition_check: mu_out does not align with data");
  }
  const Eigen::VectorXd& mu = *data.mu_true;
  const Eigen::VectorXd& eps = *data.eps_true;
  DecompositionCheck out;
  out.variant = variant;
  const double n = static_cast<double>(T - start_index);
  for (Index i = start_index; i < T; ++i) {
    const double m = mu_out[i - start_index];
    const double gap = mu[i] - m;
    const double resid_out = data.y[i] - m;
    const double lhs = resid_out * resid_out;
    const double rhs = eps[i] * eps[i] + 2.0 * gap * eps[i] + gap * gap;
    out.max_abs_identity_error = std::max(out.max_abs_identity_error, std::abs(lhs - rhs));
    out.cross_term_mu_eps += 2.0 * mu[i] * eps[i];
    out.cross_term_muhat_eps += 2.0 * m * eps[i];
  }
  out.cross_term_mu_eps /= n;
  out.cross_term_muhat_eps /= n;
  return out;
}

}  // namespace modsel
