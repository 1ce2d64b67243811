#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "modsel/errors.hpp"

namespace modsel {

using Index = Eigen::Index;

enum class EstimatorKind { OlsSubset, Ridge, TvpKernel };
enum class KernelKind { Epanechnikov, Uniform, Gaussian };
enum class KernelSide { TwoSided, OneSidedPast };
enum class LossKind { Squared, Absolute };
enum class TrackScheme { Rolling, Recursive };

// Observed sample plus, for synthetic data, the true conditional means and
// true residuals that make exact loss computations possible.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::optional<Eigen::VectorXd> mu_true;
  std::optional<Eigen::VectorXd> eps_true;
  std::string meta;

  Index rows() const { return y.size(); }
  Index cols() const { return X.cols(); }
  bool has_truth() const { return mu_true.has_value(); }

  // Shape checks plus, when truth is present, y = mu_true + eps_true.
  void validate() const {
    if (y.size() < 1 || X.rows() != y.size()) {
      throw DimensionMismatchError("Dataset: length(y) must equal rows(X) and be >= 1");
    }
    if (mu_true.has_value() != eps_true.has_value()) {
      throw DataError("Dataset: mu_true and eps_true must be present together");
    }
    if (mu_true) {
      if (mu_true->size() != y.size() || eps_true->size() != y.size()) {
        throw DimensionMismatchError("Dataset: truth vectors must have length T");
      }
      for (Index i = 0; i < y.size(); ++i) {
        const double gap = y[i] - (*mu_true)[i] - (*eps_true)[i];
        if (std::abs(gap) > 1e-10 * (1.0 + std::abs(y[i]))) {
          throw DataError("Dataset: y != mu_true + eps_true at row " + std::to_string(i));
        }
      }
    }
  }
};

// One candidate model: a column subset, a ridge level, or a kernel bandwidth.
struct ModelSpec {
  std::string id;
  EstimatorKind estimator = EstimatorKind::OlsSubset;
  std::vector<Index> columns;
  double ridge_lambda = 0.0;    // ridge only
  double bandwidth = 0.0;       // tvp-kernel only, fraction of the sample size
  KernelKind kernel = KernelKind::Epanechnikov;
  KernelSide side = KernelSide::TwoSided;

  Index pdim() const { return static_cast<Index>(columns.size()); }

  void validate(const Dataset& data) const {
    if (columns.empty()) throw DimensionMismatchError("ModelSpec '" + id + "': empty column set");
    for (Index c : columns) {
      if (c < 0 || c >= data.cols()) {
        throw DimensionMismatchError("ModelSpec '" + id + "': column " + std::to_string(c) +
                                     " out of bounds");
      }
    }
    if (pdim() >= data.rows()) {
      throw DimensionMismatchError("ModelSpec '" + id + "': p must be smaller than T");
    }
    if (estimator == EstimatorKind::Ridge && !(ridge_lambda >= 0.0)) {
      throw BadArgsError("ModelSpec '" + id + "': ridge_lambda must be nonnegative");
    }
    if (estimator == EstimatorKind::TvpKernel &&
        !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
      throw BadBandwidthError("ModelSpec '" + id + "': bandwidth must be positive and finite");
    }
  }
};

// Output of a full-sample fit.
// For constant-coefficient fits `beta` holds the p-vector; for tvp-kernel
// fits `beta_path` holds one coefficient row per observation.
struct FitResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_path;   // T x p, tvp-kernel only (otherwise 0 x 0)
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverage;    // hat-matrix diagonal, ols-subset only
  Index rank = 0;
  double edf = 0.0;            // trace of the smoother matrix (rank for OLS)
};

// One-step-ahead predictions from a rolling or recursive scheme.
// `start_index` is the 0-based index of the first predicted row, so
// preds[j] predicts row start_index + j using only rows before it.
struct PredictionTrack {
  Index start_index = 0;
  Eigen::VectorXd preds;
  TrackScheme scheme = TrackScheme::Rolling;
  Index window = 0;            // R for rolling, t0 for recursive
};

}  // namespace modsel
