#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <vector>

#include "modsel/estimators.hpp"
#include "modsel/rng.hpp"
#include "modsel/types.hpp"

namespace testsupport {

using namespace modsel;

inline Dataset dataset_from_y(std::initializer_list<double> ys) {
  Dataset d;
  d.y.resize(static_cast<Index>(ys.size()));
  Index i = 0;
  for (double v : ys) d.y[i++] = v;
  d.X = Eigen::MatrixXd::Ones(d.y.size(), 1);
  return d;
}

inline ModelSpec ols_cols(std::vector<Index> cols) {
  ModelSpec m;
  m.id = "ols";
  m.estimator = EstimatorKind::OlsSubset;
  m.columns = std::move(cols);
  return m;
}

inline ModelSpec ols_all(const Dataset& d) {
  std::vector<Index> cols;
  for (Index j = 0; j < d.cols(); ++j) cols.push_back(j);
  return ols_cols(std::move(cols));
}

// Random linear instance: X = [1, N(0,1) columns], true beta ~ U(-1, 1),
// Gaussian noise.
inline Dataset random_instance(SplitMix64& rng, Index T, Index p_extra, double noise_sd = 1.0) {
  Dataset d;
  d.X.resize(T, p_extra + 1);
  d.X.col(0).setOnes();
  for (Index i = 0; i < T; ++i) {
    for (Index j = 0; j < p_extra; ++j) d.X(i, j + 1) = rng.next_gaussian();
  }
  Eigen::VectorXd beta(p_extra + 1);
  for (Index j = 0; j <= p_extra; ++j) beta[j] = 2.0 * rng.next_double() - 1.0;
  Eigen::VectorXd mu = d.X * beta;
  Eigen::VectorXd eps(T);
  for (Index i = 0; i < T; ++i) eps[i] = noise_sd * rng.next_gaussian();
  d.mu_true = mu;
  d.eps_true = eps;
  d.y = mu + eps;
  return d;
}

// Independent batch refit on rows [lo, hi) minus `deleted` (sorted), via QR
// on the design itself; ridge via the augmented system [X; sqrt(l) I].
inline Eigen::VectorXd batch_beta(const Dataset& d, const ModelSpec& spec, Index lo, Index hi,
                                  const std::vector<Index>& deleted = {}) {
  std::vector<Index> rows;
  auto it = deleted.begin();
  for (Index r = lo; r < hi; ++r) {
    while (it != deleted.end() && *it < r) ++it;
    if (it != deleted.end() && *it == r) continue;
    rows.push_back(r);
  }
  const Index p = spec.pdim();
  const bool ridge = spec.estimator == EstimatorKind::Ridge && spec.ridge_lambda > 0.0;
  const Index n = static_cast<Index>(rows.size()) + (ridge ? p : 0);
  Eigen::MatrixXd A(n, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (Index r = 0; r < static_cast<Index>(rows.size()); ++r) {
    for (Index j = 0; j < p; ++j) A(r, j) = d.X(rows[static_cast<std::size_t>(r)], spec.columns[static_cast<std::size_t>(j)]);
    b[r] = d.y[rows[static_cast<std::size_t>(r)]];
  }
  if (ridge) {
    A.bottomRows(p) = std::sqrt(spec.ridge_lambda) * Eigen::MatrixXd::Identity(p, p);
  }
  return A.colPivHouseholderQr().solve(b);
}

inline double predict_row(const Dataset& d, const ModelSpec& spec, Index row,
                          const Eigen::VectorXd& beta) {
  double v = 0.0;
  for (Index j = 0; j < spec.pdim(); ++j) {
    v += d.X(row, spec.columns[static_cast<std::size_t>(j)]) * beta[j];
  }
  return v;
}

// Direct locally weighted refit for tvp models: solve sqrt(w)-scaled design
// rows by QR, excluding `deleted` (sorted), over rows [lo, hi).
inline double tvp_local_mu_direct(const Dataset& d, const ModelSpec& spec, Index center,
                                  const std::vector<Index>& deleted = {}, Index lo = 0,
                                  Index hi = -1) {
  const Index T = d.rows();
  if (hi < 0) hi = T;
  const Index p = spec.pdim();
  const double radius = spec.bandwidth * static_cast<double>(T);
  std::vector<Index> rows;
  std::vector<double> weights;
  auto it = deleted.begin();
  for (Index j = lo; j < hi; ++j) {
    while (it != deleted.end() && *it < j) ++it;
    if (it != deleted.end() && *it == j) continue;
    if (spec.side == KernelSide::OneSidedPast && j >= center) continue;
    const double w =
        detail::kernel_weight(spec.kernel, static_cast<double>(j - center) / radius);
    if (w == 0.0) continue;
    rows.push_back(j);
    weights.push_back(w);
  }
  Eigen::MatrixXd A(static_cast<Index>(rows.size()), p);
  Eigen::VectorXd b(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double sw = std::sqrt(weights[r]);
    for (Index j = 0; j < p; ++j) {
      A(static_cast<Index>(r), j) = sw * d.X(rows[r], spec.columns[static_cast<std::size_t>(j)]);
    }
    b[static_cast<Index>(r)] = sw * d.y[rows[r]];
  }
  const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(b);
  return predict_row(d, spec, center, beta);
}

}  // namespace testsupport
