#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "modsel/errors.hpp"
#include "modsel/estimators.hpp"
#include "modsel/rng.hpp"
#include "modsel/types.hpp"

namespace modsel {

enum class DgpFamily {
  IidLinear,
  HeteroLinear,
  Ar1ErrorLinear,
  ArLags,
  TvpSmooth,
  NonlinearTruth,
};

struct TvpPath {
  enum class Kind { Sine, Constant, Linear };
  Kind kind = Kind::Sine;
  double amplitude = 1.0;
};

// Synthetic-data recipe. beta_true means: coefficients of the stochastic
// regressors (iid/hetero/ar1 families), or (intercept, lag coefficients)
// for ar-lags. All randomness comes from `seed` through one SplitMix64
// stream consumed in simulation order.
struct DgpSpec {
  DgpFamily family = DgpFamily::IidLinear;
  Index T = 100;
  std::vector<double> beta_true = {1.0, 0.5, 0.0};
  double noise_sd = 1.0;
  double ar_rho = 0.0;        // ar1-error-linear
  Index n_lagged_y = 0;       // ar1-error-linear: lagged-y columns appended to X
  Index n_lags = 0;           // ar-lags: lag columns in X (>= AR order)
  TvpPath tvp_path;
  double truth_scale = 1.0;   // nonlinear-truth: mu = scale * exp(x)
  Index poly_degree = 5;      // nonlinear-truth: X carries powers 0..poly_degree
  std::uint64_t seed = 0;

  void validate() const {
    if (T < 20) throw BadSpecError("DgpSpec: T must be >= 20");
    if (!(noise_sd > 0.0)) throw BadSpecError("DgpSpec: noise_sd must be positive");
    if (family == DgpFamily::Ar1ErrorLinear && !(std::abs(ar_rho) < 1.0)) {
      throw BadSpecError("DgpSpec: |ar_rho| < 1 required");
    }
    if (family == DgpFamily::ArLags) {
      if (beta_true.size() < 2) throw BadSpecError("DgpSpec: ar-lags needs (intercept, lags...)");
      double s = 0.0;
      for (std::size_t j = 1; j < beta_true.size(); ++j) s += std::abs(beta_true[j]);
      if (!(s < 1.0)) throw BadSpecError("DgpSpec: ar-lags lag coefficients must sum to < 1 in absolute value");
    }
    if ((family == DgpFamily::IidLinear || family == DgpFamily::HeteroLinear ||
         family == DgpFamily::Ar1ErrorLinear) &&
        beta_true.empty()) {
      throw BadSpecError("DgpSpec: beta_true must be nonempty");
    }
    if (family == DgpFamily::NonlinearTruth && poly_degree < 1) {
      throw BadSpecError("DgpSpec: poly_degree must be >= 1");
    }
    if (n_lagged_y < 0 || n_lags < 0) throw BadSpecError("DgpSpec: lag counts must be >= 0");
  }

  std::string family_name() const {
    switch (family) {
      case DgpFamily::IidLinear: return "iid-linear";
      case DgpFamily::HeteroLinear: return "hetero-linear";
      case DgpFamily::Ar1ErrorLinear: return "ar1-error-linear";
      case DgpFamily::ArLags: return "ar-lags";
      case DgpFamily::TvpSmooth: return "tvp-smooth";
      case DgpFamily::NonlinearTruth: return "nonlinear-truth";
    }
    return "?";
  }
};

namespace detail {

inline double tvp_path_value(const TvpPath& path, Index i, Index T) {
  const double t = static_cast<double>(i) / static_cast<double>(T);
  switch (path.kind) {
    case TvpPath::Kind::Sine:
      return path.amplitude * std::sin(2.0 * std::numbers::pi * t);
    case TvpPath::Kind::Constant:
      return path.amplitude;
    case TvpPath::Kind::Linear:
      return path.amplitude * t;
  }
  return 0.0;
}

}  // namespace detail

// Draws a Dataset with mu_true and eps_true populated; y = mu_true + eps_true
// holds exactly by construction. For time-series families mu_true is the
// one-step conditional mean given the past and eps_true is the innovation,
// so every past-measurable regressor satisfies the exogeneity moment
// conditions.
inline Dataset generate(const DgpSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const Index T = spec.T;
  Dataset d;
  d.meta = "family=" + spec.family_name() + ";T=" + std::to_string(T) +
           ";seed=" + std::to_string(spec.seed);

  switch (spec.family) {
    case DgpFamily::IidLinear:
    case DgpFamily::HeteroLinear: {
      const Index m = static_cast<Index>(spec.beta_true.size());
      Eigen::MatrixXd X(T, m + 1);
      X.col(0).setOnes();
      for (Index i = 0; i < T; ++i) {
        for (Index j = 0; j < m; ++j) X(i, j + 1) = rng.next_gaussian();
      }
      Eigen::VectorXd mu(T), eps(T);
      const Eigen::Map<const Eigen::VectorXd> beta(spec.beta_true.data(), m);
      for (Index i = 0; i < T; ++i) {
        mu[i] = X.row(i).tail(m).dot(beta);
        const double sd = spec.family == DgpFamily::HeteroLinear
                              ? spec.noise_sd * (0.5 + std::abs(X(i, 1)))
                              : spec.noise_sd;
        eps[i] = sd * rng.next_gaussian();
      }
      d.X = std::move(X);
      d.mu_true = mu;
      d.eps_true = eps;
      d.y = mu + eps;
      break;
    }

    case DgpFamily::Ar1ErrorLinear: {
      // y_i = z_i' beta + u_i with u AR(1); mu_true is the conditional mean
      // z_i' beta + rho u_{i-1} and eps_true the innovation. Stationary
      // scaling: sd(u) = noise_sd. Extra rows are simulated up front so the
      // optional lagged-y columns hold real history.
      const Index m = static_cast<Index>(spec.beta_true.size());
      const Index L = spec.n_lagged_y;
      const Index total = T + L;
      const double rho = spec.ar_rho;
      const double innov_sd = spec.noise_sd * std::sqrt(1.0 - rho * rho);
      const Eigen::Map<const Eigen::VectorXd> beta(spec.beta_true.data(), m);

      Eigen::MatrixXd Z(total, m);
      for (Index i = 0; i < total; ++i) {
        for (Index j = 0; j < m; ++j) Z(i, j) = rng.next_gaussian();
      }
      Eigen::VectorXd yfull(total), mufull(total), epsfull(total);
      double u_prev = spec.noise_sd * rng.next_gaussian();  // stationary start
      for (Index i = 0; i < total; ++i) {
        const double eta = innov_sd * rng.next_gaussian();
        mufull[i] = Z.row(i).dot(beta) + rho * u_prev;
        epsfull[i] = eta;
        yfull[i] = mufull[i] + eta;
        u_prev = rho * u_prev + eta;
      }
      Eigen::MatrixXd X(T, 1 + m + L);
      X.col(0).setOnes();
      for (Index i = 0; i < T; ++i) {
        X.row(i).segment(1, m) = Z.row(L + i);
        for (Index l = 1; l <= L; ++l) X(i, m + l) = yfull[L + i - l];
      }
      d.X = std::move(X);
      d.y = yfull.tail(T);
      d.mu_true = Eigen::VectorXd(mufull.tail(T));
      d.eps_true = Eigen::VectorXd(epsfull.tail(T));
      break;
    }

    case DgpFamily::ArLags: {
      // y_i = c + sum_j phi_j y_{i-j} + eta_i; X = [1, y lags]. Row i only
      // ever sees y values with smaller index (past exogeneity by
      // construction).
      const Index q = static_cast<Index>(spec.beta_true.size()) - 1;
      const Index L = std::max(spec.n_lags, q);
      const Index burn = 200 + L;
      const double c0 = spec.beta_true[0];
      d.y.resize(T);
      d.mu_true = Eigen::VectorXd(T);
      d.eps_true = Eigen::VectorXd(T);
      d.X.resize(T, 1 + L);
      d.X.col(0).setOnes();
      std::vector<double> hist(static_cast<std::size_t>(burn + T), 0.0);
      for (Index i = 0; i < burn + T; ++i) {
        double m = c0;
        for (Index j = 1; j <= q; ++j) {
          if (i - j >= 0) m += spec.beta_true[static_cast<std::size_t>(j)] *
                               hist[static_cast<std::size_t>(i - j)];
        }
        const double eta = spec.noise_sd * rng.next_gaussian();
        hist[static_cast<std::size_t>(i)] = m + eta;
        if (i >= burn) {
          const Index r = i - burn;
          d.y[r] = m + eta;
          (*d.mu_true)[r] = m;
          (*d.eps_true)[r] = eta;
          for (Index l = 1; l <= L; ++l) {
            d.X(r, l) = hist[static_cast<std::size_t>(i - l)];
          }
        }
      }
      break;
    }

    case DgpFamily::TvpSmooth: {
      Eigen::MatrixXd X = Eigen::MatrixXd::Ones(T, 1);
      Eigen::VectorXd mu(T), eps(T);
      for (Index i = 0; i < T; ++i) {
        mu[i] = detail::tvp_path_value(spec.tvp_path, i, T);
        eps[i] = spec.noise_sd * rng.next_gaussian();
      }
      d.X = std::move(X);
      d.mu_true = mu;
      d.eps_true = eps;
      d.y = mu + eps;
      break;
    }

    case DgpFamily::NonlinearTruth: {
      Eigen::MatrixXd X(T, spec.poly_degree + 1);
      Eigen::VectorXd mu(T), eps(T);
      for (Index i = 0; i < T; ++i) {
        const double x = rng.next_gaussian();
        double pw = 1.0;
        for (Index j = 0; j <= spec.poly_degree; ++j) {
          X(i, j) = pw;
          pw *= x;
        }
        mu[i] = spec.truth_scale * std::exp(x);
        eps[i] = spec.noise_sd * rng.next_gaussian();
      }
      d.X = std::move(X);
      d.mu_true = mu;
      d.eps_true = eps;
      d.y = mu + eps;
      break;
    }
  }
  d.validate();
  return d;
}

// --- Candidate sets ---------------------------------------------------------

struct CandidateSetSpec {
  enum class Kind { NestedPolynomial, SubsetLattice, RidgeGrid, BandwidthGrid };
  Kind kind = Kind::SubsetLattice;

  Index max_deg = 3;                 // nested-polynomial
  bool max_deg_cbrt = false;         // nested-polynomial: max_deg = floor(T^(1/3))
  Index pmax = 3;                    // subset-lattice: lattice width
  Index first_col = 1;               // subset-lattice: first lattice column
  std::vector<double> lambdas;       // ridge-grid
  std::vector<Index> ridge_columns;  // ridge-grid columns (empty = all)
  std::vector<double> bandwidths;    // bandwidth-grid
  KernelKind kernel = KernelKind::Epanechnikov;
  KernelSide side = KernelSide::TwoSided;
};

namespace detail {

inline std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string columns_id(const std::vector<Index>& cols) {
  std::string s = "ols[";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += "+";
    s += "x" + std::to_string(cols[i]);
  }
  return s + "]";
}

}  // namespace detail

// Deterministic, ordered candidate list. Subset lattices enumerate subsets
// by (size, lexicographic) and always include column 0 as the intercept.
inline std::vector<ModelSpec> candidate_set(const CandidateSetSpec& cs, const Dataset& data) {
  std::vector<ModelSpec> out;
  switch (cs.kind) {
    case CandidateSetSpec::Kind::NestedPolynomial: {
      const Index max_deg =
          cs.max_deg_cbrt ? default_hblock_h(data.rows()) : cs.max_deg;  // floor(T^(1/3))
      if (max_deg < 0 || max_deg + 1 > data.cols()) {
        throw BadGridError("candidate_set: nested-polynomial needs columns 0..max_deg in X");
      }
      if (max_deg + 1 >= data.rows()) throw BadGridError("candidate_set: p must stay below T");
      for (Index k = 0; k <= max_deg; ++k) {
        ModelSpec m;
        m.estimator = EstimatorKind::OlsSubset;
        for (Index j = 0; j <= k; ++j) m.columns.push_back(j);
        m.id = "poly[deg=" + std::to_string(k) + "]";
        out.push_back(std::move(m));
      }
      break;
    }
    case CandidateSetSpec::Kind::SubsetLattice: {
      if (cs.pmax < 1 || cs.first_col < 0 || cs.first_col + cs.pmax > data.cols()) {
        throw BadGridError("candidate_set: subset-lattice columns out of bounds");
      }
      if (cs.pmax + 1 >= data.rows()) throw BadGridError("candidate_set: p must stay below T");
      std::vector<std::vector<Index>> subsets;
      const auto n = static_cast<std::uint64_t>(cs.pmax);
      for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        std::vector<Index> s;
        for (std::uint64_t b = 0; b < n; ++b) {
          if (mask & (1ULL << b)) s.push_back(cs.first_col + static_cast<Index>(b));
        }
        subsets.push_back(std::move(s));
      }
      std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
      });
      for (auto& s : subsets) {
        ModelSpec m;
        m.estimator = EstimatorKind::OlsSubset;
        m.columns.push_back(0);
        for (Index c : s) m.columns.push_back(c);
        m.id = detail::columns_id(m.columns);
        out.push_back(std::move(m));
      }
      break;
    }
    case CandidateSetSpec::Kind::RidgeGrid: {
      if (cs.lambdas.empty()) throw BadGridError("candidate_set: empty ridge grid");
      std::vector<Index> cols = cs.ridge_columns;
      if (cols.empty()) {
        for (Index j = 0; j < data.cols(); ++j) cols.push_back(j);
      }
      for (double lam : cs.lambdas) {
        if (!(lam >= 0.0)) throw BadGridError("candidate_set: ridge lambda must be >= 0");
        ModelSpec m;
        m.estimator = EstimatorKind::Ridge;
        m.columns = cols;
        m.ridge_lambda = lam;
        m.id = "ridge[l=" + detail::format_g(lam) + "]";
        out.push_back(std::move(m));
      }
      break;
    }
    case CandidateSetSpec::Kind::BandwidthGrid: {
      if (cs.bandwidths.empty()) throw BadGridError("candidate_set: empty bandwidth grid");
      for (double b : cs.bandwidths) {
        ModelSpec m;
        m.estimator = EstimatorKind::TvpKernel;
        for (Index j = 0; j < data.cols(); ++j) m.columns.push_back(j);
        m.bandwidth = b;
        m.kernel = cs.kernel;
        m.side = cs.side;
        m.id = "tvp[b=" + detail::format_g(b) + "]";
        // Dry-run: surface bad bandwidths at construction time.
        try {
          (void)fit_tvp_kernel(data, m);
        } catch (const Error& e) {
          throw BadGridError("candidate_set: bandwidth " + detail::format_g(b) +
                             " fails a dry-run fit: " + e.what());
        }
        out.push_back(std::move(m));
      }
      break;
    }
  }
  return out;
}

}  // namespace modsel
