// Acceptance suite: one checkable criterion per case, each printing a single
// PASS/FAIL line. Run `acceptance` for all criteria or `acceptance <n>` for
// one. Exit status is the number of failing criteria.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "modsel/config.hpp"
#include "modsel/harness.hpp"

using namespace modsel;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20250801;
constexpr int kThreads = 2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Dataset random_instance(SplitMix64& rng, Index T, Index p_extra, double noise_sd = 1.0) {
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

ModelSpec ols_first(Index p) {
  ModelSpec m;
  m.estimator = EstimatorKind::OlsSubset;
  for (Index j = 0; j < p; ++j) m.columns.push_back(j);
  m.id = "m" + std::to_string(p);
  return m;
}

Eigen::VectorXd batch_beta(const Dataset& d, const ModelSpec& spec, Index lo, Index hi) {
  const Index p = spec.pdim();
  Eigen::MatrixXd A(hi - lo, p);
  Eigen::VectorXd b(hi - lo);
  for (Index r = lo; r < hi; ++r) {
    for (Index j = 0; j < p; ++j) A(r - lo, j) = d.X(r, spec.columns[static_cast<std::size_t>(j)]);
    b[r - lo] = d.y[r];
  }
  return A.colPivHouseholderQr().solve(b);
}

DgpSpec baseline_dgp() {
  DgpSpec s;
  s.family = DgpFamily::IidLinear;
  s.beta_true = {1.0, 0.5, 0.0};
  s.noise_sd = 1.0;
  return s;
}

CandidateSetSpec lattice3(Index first_col = 1) {
  CandidateSetSpec c;
  c.kind = CandidateSetSpec::Kind::SubsetLattice;
  c.pmax = 3;
  c.first_col = first_col;
  return c;
}

std::map<std::string, std::vector<double>> medians_by_criterion(const MCSummary& summary,
                                                                const std::vector<Index>& grid,
                                                                bool imse_dev = false) {
  std::map<std::string, std::vector<double>> out;
  for (Index T : grid) {
    for (const auto& row : summary.rows) {
      if (row.T != T) continue;
      const std::optional<double>& v = imse_dev ? row.med_imse_ratio_dev : row.ratio_q50;
      if (v) out[row.criterion].push_back(*v);
    }
  }
  return out;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

// 1. Squared-residual decomposition identity on 1,000 random instances.
Outcome criterion_1() {
  SplitMix64 rng(kSeed);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Index T = 20 + static_cast<Index>(rng.next_u64() % 481);  // up to 500
    const Index p = static_cast<Index>(rng.next_u64() % 9);
    const Dataset d = random_instance(rng, T, std::min<Index>(p, T / 4));
    const ModelSpec m = ols_first(d.cols());
    const Eigen::VectorXd mu_loo = d.y - loo_residuals_fast(fit_ols(d, m));
    const DecompositionCheck dc = decomposition_check(d, mu_loo, DecompositionVariant::Loo);
    worst = std::max(worst, dc.max_abs_identity_error);
  }
  return {worst <= 1e-10, "max identity error " + fmt(worst) + " over 1000 instances"};
}

// 2. Fast leave-one-out equals the refit path.
Outcome criterion_2() {
  SplitMix64 rng(kSeed + 1);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index T = 20 + static_cast<Index>(rng.next_u64() % 181);  // up to 200
    const Index p = static_cast<Index>(rng.next_u64() % 10);        // up to 9 extra + intercept
    const Dataset d = random_instance(rng, T, std::min<Index>(p, T / 4));
    const ModelSpec m = ols_first(d.cols());
    const Eigen::VectorXd fast = loo_residuals_fast(fit_ols(d, m));
    const Eigen::VectorXd refit = loo_residuals_refit(d, m);
    worst = std::max(worst, (fast - refit).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, "max |fast - refit| " + fmt(worst) + " over 100 instances"};
}

// 3. Rolling and recursive tracks equal independent batch refits.
Outcome criterion_3() {
  SplitMix64 rng(kSeed + 2);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index T = 60 + static_cast<Index>(rng.next_u64() % 201);
    const Index p_extra = static_cast<Index>(rng.next_u64() % 5);
    const Dataset d = random_instance(rng, T, p_extra);
    const ModelSpec m = ols_first(d.cols());
    const Index R = m.pdim() + 3 + static_cast<Index>(rng.next_u64() % (T / 3));
    const PredictionTrack roll = rolling_track(d, m, R);
    const PredictionTrack rec = recursive_track(d, m, R);
    for (Index i = roll.start_index; i < T; ++i) {
      const Eigen::VectorXd bb = batch_beta(d, m, i - R, i);
      double pred = 0.0;
      for (Index j = 0; j < m.pdim(); ++j) {
        pred += d.X(i, m.columns[static_cast<std::size_t>(j)]) * bb[j];
      }
      worst = std::max(worst, std::abs(roll.preds[i - roll.start_index] - pred));
    }
    for (Index i = rec.start_index; i < T; ++i) {
      const Eigen::VectorXd bb = batch_beta(d, m, 0, i);
      double pred = 0.0;
      for (Index j = 0; j < m.pdim(); ++j) {
        pred += d.X(i, m.columns[static_cast<std::size_t>(j)]) * bb[j];
      }
      worst = std::max(worst, std::abs(rec.preds[i - rec.start_index] - pred));
    }
  }
  return {worst <= 1e-8, "max |incremental - batch| " + fmt(worst) + " over 50 instances"};
}

// 4. Optimality-ratio convergence on the baseline DGP for six criteria.
Outcome criterion_4() {
  ExperimentConfig cfg;
  cfg.dgp = baseline_dgp();
  cfg.T_grid = {100, 400, 1600};
  cfg.replications = 200;
  cfg.candidates = lattice3();
  CriterionSpec loo;
  loo.family = CriterionFamily::LooCv;
  CriterionSpec hb;
  hb.family = CriterionFamily::HblockCv;
  hb.h.kind = Schedule::Kind::CbrtT;
  CriterionSpec aic;
  aic.family = CriterionFamily::Ic;
  aic.penalty = PenaltyKind::aic();
  CriterionSpec bic;
  bic.family = CriterionFamily::Ic;
  bic.penalty = PenaltyKind::bic();
  CriterionSpec roll;
  roll.family = CriterionFamily::Rolling;
  roll.R.kind = Schedule::Kind::TwoThirdsT;
  CriterionSpec rec;
  rec.family = CriterionFamily::Recursive;
  rec.t0.kind = Schedule::Kind::PmaxPlus;
  rec.t0.value = 10;
  cfg.criteria = {loo, hb, aic, bic, roll, rec};
  cfg.base_seed = kSeed;
  cfg.threads = kThreads;

  const MCResult res = monte_carlo(cfg);
  const auto med = medians_by_criterion(res.summary, cfg.T_grid);
  bool pass = true;
  std::string detail;
  for (const auto& [label, ms] : med) {
    const bool ok = ms.size() == 3 && nonincreasing(ms) && ms.back() <= 1.10;
    pass = pass && ok;
    detail += label + "=" + fmt(ms.front()) + "/" + fmt(ms[1]) + "/" + fmt(ms.back()) +
              (ok ? " " : "(FAIL) ");
  }
  return {pass, "median ratios over T={100,400,1600}: " + detail};
}

// 5. Dependent data: AR(1) errors with lagged-dependent-variable candidates.
Outcome criterion_5() {
  ExperimentConfig cfg;
  cfg.dgp = baseline_dgp();
  cfg.dgp.family = DgpFamily::Ar1ErrorLinear;
  cfg.dgp.ar_rho = 0.5;
  cfg.dgp.n_lagged_y = 3;
  cfg.T_grid = {100, 400, 1600};
  cfg.replications = 200;
  cfg.candidates = lattice3(4);  // lattice over the three lagged-y columns
  CriterionSpec hb;
  hb.family = CriterionFamily::HblockCv;
  hb.h.kind = Schedule::Kind::CbrtT;
  CriterionSpec rec;
  rec.family = CriterionFamily::Recursive;
  rec.t0.kind = Schedule::Kind::PmaxPlus;
  rec.t0.value = 10;
  cfg.criteria = {hb, rec};
  cfg.base_seed = kSeed + 5;
  cfg.threads = kThreads;

  const MCResult res = monte_carlo(cfg);
  const auto med = medians_by_criterion(res.summary, cfg.T_grid);
  bool pass = true;
  std::string detail;
  for (const auto& [label, ms] : med) {
    const bool ok = ms.size() == 3 && nonincreasing(ms) && ms.back() <= 1.15;
    pass = pass && ok;
    detail += label + "=" + fmt(ms.front()) + "/" + fmt(ms[1]) + "/" + fmt(ms.back()) +
              (ok ? " " : "(FAIL) ");
  }
  return {pass, "median ratios over T={100,400,1600}: " + detail};
}

// 6. Cross-term decay rate: log-log slope in [-0.7, -0.3].
Outcome criterion_6() {
  ExperimentConfig cfg;
  cfg.dgp = baseline_dgp();
  cfg.T_grid = {200, 800, 3200};
  cfg.replications = 200;
  cfg.candidates = lattice3();
  CriterionSpec loo;
  loo.family = CriterionFamily::LooCv;
  cfg.criteria = {loo};
  cfg.base_seed = kSeed + 6;
  cfg.reference_candidate = "ols[x0+x1+x2]";
  cfg.threads = kThreads;
  const double slope = cross_term_slope(cfg);
  return {slope >= -0.7 && slope <= -0.3, "slope " + fmt(slope) + " (want [-0.7, -0.3])"};
}

// 7. Leave-out loss tracks the full-sample loss: median |L_loo/L - 1|
// nonincreasing in T.
Outcome criterion_7() {
  ExperimentConfig cfg;
  cfg.dgp = baseline_dgp();
  cfg.T_grid = {100, 400, 1600};
  cfg.replications = 200;
  cfg.candidates = lattice3();
  CriterionSpec loo;
  loo.family = CriterionFamily::LooCv;
  cfg.criteria = {loo};
  cfg.base_seed = kSeed + 7;
  cfg.reference_candidate = "ols[x0+x1+x2]";
  cfg.threads = kThreads;
  const MCResult res = monte_carlo(cfg);
  const auto med = medians_by_criterion(res.summary, cfg.T_grid, /*imse_dev=*/true);
  const auto& ms = med.at("loo-cv");
  const bool ok = ms.size() == 3 && nonincreasing(ms);
  return {ok, "median |L_loo/L - 1| = " + fmt(ms[0]) + "/" + fmt(ms[1]) + "/" + fmt(ms[2])};
}

// 8. Time-varying parameters: bandwidth selection by LOO CV plus the
// within-block infill diagnostic.
Outcome criterion_8() {
  ExperimentConfig cfg;
  cfg.dgp.family = DgpFamily::TvpSmooth;
  cfg.dgp.noise_sd = 1.0;
  cfg.T_grid = {1600};
  cfg.replications = 100;
  cfg.candidates.kind = CandidateSetSpec::Kind::BandwidthGrid;
  cfg.candidates.bandwidths = {0.025, 0.05, 0.1, 0.2, 0.4};
  CriterionSpec loo;
  loo.family = CriterionFamily::LooCv;
  cfg.criteria = {loo};
  cfg.base_seed = kSeed + 8;
  cfg.threads = kThreads;
  const MCResult res = monte_carlo(cfg);
  const double med_ratio = *res.summary.rows.front().ratio_q50;
  const bool ratio_ok = med_ratio <= 1.25;

  std::vector<double> spread_400, spread_1600;
  for (int rep = 0; rep < 100; ++rep) {
    for (const Index T : {Index{400}, Index{1600}}) {
      DgpSpec s;
      s.family = DgpFamily::TvpSmooth;
      s.T = T;
      s.noise_sd = 1.0;
      s.seed = derive_stream(kSeed + 80,
                             {static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(rep)});
      const Dataset d = generate(s);
      ModelSpec m;
      m.estimator = EstimatorKind::TvpKernel;
      m.columns = {0};
      m.bandwidth = 0.1;
      m.id = "tvp";
      const double spread = tvp_block_diagnostic(d, m, default_hblock_h(T));
      (T == 400 ? spread_400 : spread_1600).push_back(spread);
    }
  }
  const double s400 = median(spread_400);
  const double s1600 = median(spread_1600);
  const bool spread_ok = s1600 <= s400;
  return {ratio_ok && spread_ok, "median ratio " + fmt(med_ratio) + " (want <= 1.25); block spread " +
                                     fmt(s400) + " -> " + fmt(s1600) + " (want nonincreasing)"};
}

// 9. Information-criterion invariances.
Outcome criterion_9() {
  SplitMix64 rng(kSeed + 9);
  const std::vector<PenaltyKind> catalog = {PenaltyKind::aic(), PenaltyKind::bic(),
                                            PenaltyKind::hqic(), PenaltyKind::ric(),
                                            PenaltyKind::fixed(1.5)};
  // (a) argmin invariant under y scaling.
  for (int rep = 0; rep < 100; ++rep) {
    const Index T = 60 + static_cast<Index>(rng.next_u64() % 140);
    const Dataset d = random_instance(rng, T, 3);
    std::vector<ModelSpec> candidates;
    for (Index p = 1; p <= 4; ++p) candidates.push_back(ols_first(p));
    for (const auto& pen : catalog) {
      std::optional<std::string> base_pick;
      for (double c : {0.1, 1.0, 10.0}) {
        Dataset scaled = d;
        scaled.y *= c;
        scaled.mu_true.reset();
        scaled.eps_true.reset();
        std::vector<CriterionScore> scores;
        for (const auto& m : candidates) {
          CriterionScore s = ic_score(fit_ols(scaled, m).residuals,
                                      static_cast<double>(m.pdim()), T, pen);
          s.model_id = m.id;
          s.pdim = m.pdim();
          scores.push_back(s);
        }
        const std::string pick = select(scores);
        if (!base_pick) base_pick = pick;
        if (pick != *base_pick) {
          return {false, "argmin changed under y-scaling (penalty " + pen.label() + ")"};
        }
      }
    }
  }
  // (b) equal-dimension ordering equals MSE ordering.
  for (int rep = 0; rep < 100; ++rep) {
    const Index T = 60 + static_cast<Index>(rng.next_u64() % 140);
    const Dataset d = random_instance(rng, T, 3);
    ModelSpec a = ols_first(2);
    ModelSpec b;
    b.estimator = EstimatorKind::OlsSubset;
    b.columns = {0, 2};
    b.id = "alt";
    const Eigen::VectorXd ra = fit_ols(d, a).residuals;
    const Eigen::VectorXd rb = fit_ols(d, b).residuals;
    const double mse_a = ra.squaredNorm() / static_cast<double>(T);
    const double mse_b = rb.squaredNorm() / static_cast<double>(T);
    for (const auto& pen : catalog) {
      const double ia = ic_score(ra, 2.0, T, pen).total;
      const double ib = ic_score(rb, 2.0, T, pen).total;
      if ((ia < ib) != (mse_a < mse_b)) {
        return {false, "IC ordering disagreed with MSE ordering (penalty " + pen.label() + ")"};
      }
    }
  }
  // (c) penalty part vanishes along T.
  for (const auto& pen : {PenaltyKind::aic(), PenaltyKind::bic(), PenaltyKind::hqic()}) {
    double prev = std::numeric_limits<double>::infinity();
    for (Index T : {Index{100}, Index{1000}, Index{1000000}}) {
      const double part = penalty_value(pen, T, 3) * 3.0 / static_cast<double>(T);
      if (!(part < prev)) return {false, "penalty part not decreasing for " + pen.label()};
      prev = part;
    }
  }
  return {true, "scaling, ordering, and penalty-vanishing checks all hold"};
}

// 10. Byte-identical simulate reruns, including under a different --threads hint.
Outcome criterion_10() {
  const char* cli = std::getenv("MODSEL_CLI");
  if (cli == nullptr) return {false, "MODSEL_CLI not set"};
  const fs::path dir = fs::current_path() / "tmp_acceptance_10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({
      "base_seed": 20250801,
      "dgp": {"family": "iid-linear", "beta_true": [1.0, 0.5, 0.0], "noise_sd": 1.0},
      "candidates": {"kind": "subset-lattice", "pmax": 3},
      "criteria": [{"family": "loo-cv"}, {"family": "ic", "penalty": "bic"}],
      "T_grid": [100, 200],
      "replications": 20,
      "reference_candidate": "ols[x0+x1+x2]"
    })";
  }
  auto run = [&](const std::string& out, const std::string& extra) {
    const std::string cmd = std::string(cli) + " simulate --config " + (dir / "cfg.json").string() +
                            " --out " + (dir / out).string() + extra + " > /dev/null";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  if (run("a", "") != 0) return {false, "first simulate run failed"};
  if (run("b", "") != 0) return {false, "second simulate run failed"};
  if (run("c", " --threads 2") != 0) return {false, "threaded simulate run failed"};
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  for (const char* name : {"replications.csv", "summary.csv"}) {
    const std::string a = slurp(dir / "a" / name);
    if (a.empty()) return {false, std::string(name) + " missing or empty"};
    if (a != slurp(dir / "b" / name)) return {false, std::string(name) + " differs across reruns"};
    if (a != slurp(dir / "c" / name)) return {false, std::string(name) + " differs under --threads"};
  }
  return {true, "replications.csv and summary.csv byte-identical across reruns and threads"};
}

const char* kNames[10] = {
    "decomposition identity <= 1e-10",
    "loo fast == refit within 1e-8",
    "incremental tracks == batch refits within 1e-8",
    "optimality-ratio convergence, baseline DGP (six criteria)",
    "optimality-ratio convergence, dependent data",
    "cross-term log-log slope in [-0.7, -0.3]",
    "leave-out IMSE ratio |L_loo/L - 1| nonincreasing",
    "tvp bandwidth selection and infill block spread",
    "information-criterion invariances",
    "byte-identical simulate reruns",
};

Outcome run_criterion(int n) {
  switch (n) {
    case 1: return criterion_1();
    case 2: return criterion_2();
    case 3: return criterion_3();
    case 4: return criterion_4();
    case 5: return criterion_5();
    case 6: return criterion_6();
    case 7: return criterion_7();
    case 8: return criterion_8();
    case 9: return criterion_9();
    case 10: return criterion_10();
    default: return {false, "unknown criterion"};
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> to_run;
  if (argc > 1) {
    to_run.push_back(std::atoi(argv[1]));
  } else {
    for (int i = 1; i <= 10; ++i) to_run.push_back(i);
  }
  int failures = 0;
  for (int n : to_run) {
    const auto start = std::chrono::steady_clock::now();
    Outcome oc;
    try {
      oc = run_criterion(n);
    } catch (const std::exception& e) {
      oc = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (oc.pass ? "[PASS] " : "[FAIL] ") << "criterion " << n << ": " << kNames[n - 1]
              << " -- " << oc.detail << " (" << fmt(secs) << " s)" << std::endl;
    if (!oc.pass) ++failures;
  }
  return failures;
}
