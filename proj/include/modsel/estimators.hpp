#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modsel/errors.hpp"
#include "modsel/linalg.hpp"
#include "modsel/rng.hpp"
#include "modsel/types.hpp"

namespace modsel {

namespace detail {

inline double kernel_weight(KernelKind k, double u) {
  switch (k) {
    case KernelKind::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelKind::Uniform:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
    case KernelKind::Gaussian:
      return std::exp(-0.5 * u * u);
  }
  return 0.0;
}

// Locally weighted least-squares coefficients at center i: weights
// K((j - i) / (b T)) over rows j in [lo, hi), optionally excluding a sorted
// deletion set. One-sided-past keeps only j < i. T is the full sample size,
// so the bandwidth fraction means the same thing on slices.
inline Eigen::VectorXd tvp_local_beta(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                                      const ModelSpec& spec, Index T, Index i, Index lo, Index hi,
                                      std::span<const Index> deleted, const std::string& what) {
  const Index p = Xs.cols();
  const double radius = spec.bandwidth * static_cast<double>(T);
  Index jlo = lo;
  Index jhi = hi;
  if (spec.kernel != KernelKind::Gaussian) {
    jlo = std::max<Index>(lo, i - static_cast<Index>(std::floor(radius)));
    jhi = std::min<Index>(hi, i + static_cast<Index>(std::floor(radius)) + 1);
  }
  if (spec.side == KernelSide::OneSidedPast) jhi = std::min<Index>(jhi, i);

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  auto del = deleted.begin();
  for (Index j = jlo; j < jhi; ++j) {
    while (del != deleted.end() && *del < j) ++del;
    if (del != deleted.end() && *del == j) continue;
    const double w =
        kernel_weight(spec.kernel, (static_cast<double>(j - i)) / radius);
    if (w == 0.0) continue;
    G.noalias() += w * Xs.row(j).transpose() * Xs.row(j);
    c.noalias() += w * Xs.row(j).transpose() * y[j];
  }
  return solve_gram(G, c, what);
}

}  // namespace detail

// --- Schedule defaults ---------------------------------------------------

// Block half-width h = floor(T^(1/3)); h/T -> 0.
inline Index default_hblock_h(Index T) {
  return static_cast<Index>(std::floor(std::cbrt(static_cast<double>(T))));
}

// Rolling window R = floor(T^(2/3)); R -> inf, T - R -> inf.
inline Index default_rolling_window(Index T) {
  return static_cast<Index>(std::floor(std::pow(static_cast<double>(T), 2.0 / 3.0)));
}

// Recursive start t0 = max(p_max + 10, floor(sqrt(T))): keeps the +10
// identification buffer while still growing with T.
inline Index default_recursive_start(Index p_max, Index T) {
  return std::max<Index>(p_max + 10,
                         static_cast<Index>(std::floor(std::sqrt(static_cast<double>(T)))));
}

// --- Full-sample fits -----------------------------------------------------

namespace detail {

inline FitResult fit_linear_core(const Dataset& data, const ModelSpec& spec) {
  const Eigen::MatrixXd Xs = gather_columns(data.X, spec.columns);
  const Index T = data.rows();
  const Index p = Xs.cols();
  FitResult out;
  if (spec.estimator == EstimatorKind::Ridge && spec.ridge_lambda > 0.0) {
    Eigen::MatrixXd G = Xs.transpose() * Xs +
                        spec.ridge_lambda * Eigen::MatrixXd::Identity(p, p);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p, p);
    qr.setThreshold(kRankTol);
    qr.compute(G);
    if (qr.rank() < p) throw RankDeficientError("fit_ridge: penalized system singular");
    out.beta = qr.solve(Xs.transpose() * data.y);
    out.rank = p;
    // edf = tr(X (X'X + lambda I)^-1 X')
    const Eigen::MatrixXd Z = qr.solve(Xs.transpose());
    out.edf = (Xs.array() * Z.transpose().array()).sum();
  } else {
    DesignQr d(Xs);
    if (d.rank() < p) {
      throw RankDeficientError("fit_ols: numerical rank " + std::to_string(d.rank()) +
                               " < p = " + std::to_string(p));
    }
    out.beta = d.solve(data.y);
    out.rank = p;
    out.leverage = d.leverage(T);
    out.edf = static_cast<double>(p);
  }
  out.mu_hat = Xs * out.beta;
  out.residuals = data.y - out.mu_hat;
  return out;
}

}  // namespace detail

inline FitResult fit_ols(const Dataset& data, const ModelSpec& spec) {
  if (spec.estimator != EstimatorKind::OlsSubset) {
    throw BadArgsError("fit_ols: spec.estimator must be ols-subset");
  }
  spec.validate(data);
  return detail::fit_linear_core(data, spec);
}

inline FitResult fit_ridge(const Dataset& data, const ModelSpec& spec) {
  if (spec.estimator != EstimatorKind::Ridge) {
    throw BadArgsError("fit_ridge: spec.estimator must be ridge");
  }
  spec.validate(data);
  return detail::fit_linear_core(data, spec);
}

inline FitResult fit_tvp_kernel(const Dataset& data, const ModelSpec& spec) {
  if (spec.estimator != EstimatorKind::TvpKernel) {
    throw BadArgsError("fit_tvp_kernel: spec.estimator must be tvp-kernel");
  }
  spec.validate(data);
  const Eigen::MatrixXd Xs = detail::gather_columns(data.X, spec.columns);
  const Index T = data.rows();
  const Index p = Xs.cols();
  FitResult out;
  out.beta_path.resize(T, p);
  out.mu_hat.resize(T);
  for (Index i = 0; i < T; ++i) {
    const Eigen::VectorXd bi =
        detail::tvp_local_beta(Xs, data.y, spec, T, i, 0, T, {}, "fit_tvp_kernel");
    out.beta_path.row(i) = bi.transpose();
    out.mu_hat[i] = Xs.row(i).dot(bi);
  }
  out.residuals = data.y - out.mu_hat;
  out.rank = p;
  out.edf = static_cast<double>(p);
  return out;
}

inline FitResult fit(const Dataset& data, const ModelSpec& spec) {
  switch (spec.estimator) {
    case EstimatorKind::OlsSubset:
      return fit_ols(data, spec);
    case EstimatorKind::Ridge:
      return fit_ridge(data, spec);
    case EstimatorKind::TvpKernel:
      return fit_tvp_kernel(data, spec);
  }
  throw BadArgsError("fit: unknown estimator");
}

// --- Deleted-residual paths ------------------------------------------------

// h-block residuals: entry i refits with rows [i-h, i+h] deleted (truncated
// at the sample edges) and predicts row i. h = 0 is exactly leave-one-out.
inline Eigen::VectorXd hblock_residuals(const Dataset& data, const ModelSpec& spec, Index h) {
  spec.validate(data);
  if (h < 0) throw BadArgsError("hblock_residuals: h must be nonnegative");
  const Index T = data.rows();
  const Index p = spec.pdim();
  if (T - (2 * h + 1) <= p) {
    throw BlockTooLargeError("hblock_residuals: T - (2h+1) must exceed p");
  }
  Eigen::VectorXd out(T);
  if (spec.estimator == EstimatorKind::TvpKernel) {
    const Eigen::MatrixXd Xs = detail::gather_columns(data.X, spec.columns);
    std::vector<Index> del;
    for (Index i = 0; i < T; ++i) {
      del.clear();
      for (Index r = std::max<Index>(0, i - h); r <= std::min<Index>(T - 1, i + h); ++r) {
        del.push_back(r);
      }
      const Eigen::VectorXd bi =
          detail::tvp_local_beta(Xs, data.y, spec, T, i, 0, T, del, "hblock_residuals");
      out[i] = data.y[i] - Xs.row(i).dot(bi);
    }
    return out;
  }
  const double lambda = spec.estimator == EstimatorKind::Ridge ? spec.ridge_lambda : 0.0;
  detail::GramSystem sys(detail::gather_columns(data.X, spec.columns), data.y, lambda);
  for (Index i = 0; i < T; ++i) {
    const Index lo = std::max<Index>(0, i - h);
    const Index hi = std::min<Index>(T - 1, i + h) + 1;
    const Eigen::VectorXd beta = sys.solve_deleting(lo, hi, "hblock_residuals");
    out[i] = data.y[i] - sys.design().row(i).dot(beta);
  }
  return out;
}

// Leave-one-out residuals by refitting with row i deleted (the h = 0 block).
inline Eigen::VectorXd loo_residuals_refit(const Dataset& data, const ModelSpec& spec) {
  if (spec.estimator == EstimatorKind::TvpKernel) {
    throw BadArgsError("loo_residuals_refit: use tvp_loo_residuals for tvp-kernel models");
  }
  return hblock_residuals(data, spec, 0);
}

// Hat-matrix shortcut: eps_i / (1 - leverage_i). Exact for least squares.
inline Eigen::VectorXd loo_residuals_fast(const FitResult& fit) {
  if (fit.leverage.size() == 0) {
    throw BadArgsError("loo_residuals_fast: fit has no leverage values (ols-subset only)");
  }
  for (Index i = 0; i < fit.leverage.size(); ++i) {
    if (fit.leverage[i] >= 1.0 - 1e-12) {
      throw LeverageOneError("loo_residuals_fast: leverage 1 at row " + std::to_string(i));
    }
  }
  return fit.residuals.array() / (1.0 - fit.leverage.array());
}

// Leave-one-out residuals for a tvp-kernel model: observation i is removed
// from its own local fit. One-sided-past fits never see row i, so there the
// LOO residual equals the plain residual.
inline Eigen::VectorXd tvp_loo_residuals(const Dataset& data, const ModelSpec& spec) {
  if (spec.estimator != EstimatorKind::TvpKernel) {
    throw BadArgsError("tvp_loo_residuals: spec.estimator must be tvp-kernel");
  }
  spec.validate(data);
  const Eigen::MatrixXd Xs = detail::gather_columns(data.X, spec.columns);
  const Index T = data.rows();
  Eigen::VectorXd out(T);
  for (Index i = 0; i < T; ++i) {
    const Index del[1] = {i};
    const Eigen::VectorXd bi =
        detail::tvp_local_beta(Xs, data.y, spec, T, i, 0, T, del, "tvp_loo_residuals");
    out[i] = data.y[i] - Xs.row(i).dot(bi);
  }
  return out;
}

// Leave-one-out residuals with the appropriate path for the estimator kind.
inline Eigen::VectorXd loo_residuals(const Dataset& data, const ModelSpec& spec) {
  switch (spec.estimator) {
    case EstimatorKind::OlsSubset:
      return loo_residuals_fast(fit_ols(data, spec));
    case EstimatorKind::Ridge:
      return loo_residuals_refit(data, spec);
    case EstimatorKind::TvpKernel:
      return tvp_loo_residuals(data, spec);
  }
  throw BadArgsError("loo_residuals: unknown estimator");
}

// k-fold residuals over contiguous, in-order folds whose sizes differ by at
// most one. Shuffling is opt-in (i.i.d. data only) via shuffle_seed.
inline Eigen::VectorXd kfold_residuals(const Dataset& data, const ModelSpec& spec, Index k,
                                       std::optional<std::uint64_t> shuffle_seed = std::nullopt) {
  spec.validate(data);
  const Index T = data.rows();
  if (k < 2 || k > T) throw BadKError("kfold_residuals: need 2 <= k <= T");

  std::vector<Index> order(static_cast<std::size_t>(T));
  for (Index i = 0; i < T; ++i) order[static_cast<std::size_t>(i)] = i;
  if (shuffle_seed) {
    SplitMix64 rng(*shuffle_seed);
    for (Index i = T - 1; i > 0; --i) {
      const Index j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
  }

  const Eigen::MatrixXd Xs = detail::gather_columns(data.X, spec.columns);
  Eigen::VectorXd out(T);
  std::vector<Index> fold;
  if (spec.estimator == EstimatorKind::TvpKernel) {
    for (Index f = 0; f < k; ++f) {
      const Index lo = f * T / k;
      const Index hi = (f + 1) * T / k;
      fold.assign(order.begin() + lo, order.begin() + hi);
      std::sort(fold.begin(), fold.end());
      for (Index r : fold) {
        const Eigen::VectorXd bi =
            detail::tvp_local_beta(Xs, data.y, spec, T, r, 0, T, fold, "kfold_residuals");
        out[r] = data.y[r] - Xs.row(r).dot(bi);
      }
    }
    return out;
  }
  const double lambda = spec.estimator == EstimatorKind::Ridge ? spec.ridge_lambda : 0.0;
  detail::GramSystem sys(Xs, data.y, lambda);
  for (Index f = 0; f < k; ++f) {
    const Index lo = f * T / k;
    const Index hi = (f + 1) * T / k;
    fold.assign(order.begin() + lo, order.begin() + hi);
    std::sort(fold.begin(), fold.end());
    const Eigen::VectorXd beta = sys.solve_deleting(fold, "kfold_residuals");
    for (Index r : fold) out[r] = data.y[r] - sys.design().row(r).dot(beta);
  }
  return out;
}

// --- Pseudo-out-of-sample tracks -------------------------------------------

namespace detail {

inline PredictionTrack poos_track(const Dataset& data, const ModelSpec& spec, Index start,
                                  TrackScheme scheme, Index window, const std::string& what) {
  spec.validate(data);
  const Index T = data.rows();
  const Index p = spec.pdim();
  if (start <= p || start >= T) {
    throw WindowTooSmallError(what + ": need p < start < T (start = " + std::to_string(start) +
                              ", p = " + std::to_string(p) + ")");
  }
  const Eigen::MatrixXd Xs = gather_columns(data.X, spec.columns);
  PredictionTrack track;
  track.start_index = start;
  track.scheme = scheme;
  track.window = window;
  track.preds.resize(T - start);

  if (spec.estimator == EstimatorKind::TvpKernel) {
    for (Index i = start; i < T; ++i) {
      const Index lo = scheme == TrackScheme::Rolling ? i - window : 0;
      const Eigen::VectorXd bi = tvp_local_beta(Xs, data.y, spec, T, i, lo, i, {}, what);
      track.preds[i - start] = Xs.row(i).dot(bi);
    }
    return track;
  }

  const double lambda = spec.estimator == EstimatorKind::Ridge ? spec.ridge_lambda : 0.0;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
  if (lambda > 0.0) G = lambda * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  const Index first_train = scheme == TrackScheme::Rolling ? start - window : 0;
  for (Index j = first_train; j < start; ++j) {
    G.noalias() += Xs.row(j).transpose() * Xs.row(j);
    c.noalias() += Xs.row(j).transpose() * data.y[j];
  }
  for (Index i = start; i < T; ++i) {
    const Eigen::VectorXd beta = solve_gram(G, c, what);
    track.preds[i - start] = Xs.row(i).dot(beta);
    if (i + 1 < T) {
      G.noalias() += Xs.row(i).transpose() * Xs.row(i);
      c.noalias() += Xs.row(i).transpose() * data.y[i];
      if (scheme == TrackScheme::Rolling) {
        const Index drop = i - window;
        G.noalias() -= Xs.row(drop).transpose() * Xs.row(drop);
        c.noalias() -= Xs.row(drop).transpose() * data.y[drop];
      }
    }
  }
  return track;
}

}  // namespace detail

// One-step predictions for i = R..T-1, each fit on rows [i-R, i).
inline PredictionTrack rolling_track(const Dataset& data, const ModelSpec& spec, Index R) {
  if (R <= spec.pdim() || R >= data.rows()) {
    throw WindowTooSmallError("rolling_track: need p < R < T");
  }
  return detail::poos_track(data, spec, R, TrackScheme::Rolling, R, "rolling_track");
}

// One-step predictions for i = t0..T-1, each fit on rows [0, i).
inline PredictionTrack recursive_track(const Dataset& data, const ModelSpec& spec, Index t0) {
  if (t0 <= spec.pdim() || t0 >= data.rows()) {
    throw WindowTooSmallError("recursive_track: need p < t0 < T");
  }
  return detail::poos_track(data, spec, t0, TrackScheme::Recursive, t0, "recursive_track");
}

}  // namespace modsel
