#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "modsel/criteria.hpp"
#include "modsel/dgp.hpp"
#include "modsel/errors.hpp"
#include "modsel/estimators.hpp"
#include "modsel/oracle.hpp"
#include "modsel/stats.hpp"
#include "modsel/types.hpp"

namespace modsel {

enum class CriterionFamily { LooCv, HblockCv, KfoldCv, Ic, Rolling, Recursive };

inline std::string family_name(CriterionFamily f) {
  switch (f) {
    case CriterionFamily::LooCv: return "loo-cv";
    case CriterionFamily::HblockCv: return "hblock-cv";
    case CriterionFamily::KfoldCv: return "kfold-cv";
    case CriterionFamily::Ic: return "ic";
    case CriterionFamily::Rolling: return "rolling";
    case CriterionFamily::Recursive: return "recursive";
  }
  return "?";
}

// A window/block parameter expressed as a function of T (and p_max), so one
// criterion spec can be reused across a whole T grid.
struct Schedule {
  enum class Kind { Auto, Fixed, CbrtT, TwoThirdsT, SqrtT, Fraction, PmaxPlus };
  Kind kind = Kind::Auto;
  double value = 0.0;  // Fixed: the value; Fraction: the fraction; PmaxPlus: the offset

  static Schedule fixed(Index v) { return {Kind::Fixed, static_cast<double>(v)}; }

  std::string label() const {
    switch (kind) {
      case Kind::Auto: return "auto";
      case Kind::Fixed: return std::to_string(static_cast<long long>(value));
      case Kind::CbrtT: return "cbrt";
      case Kind::TwoThirdsT: return "twothirds";
      case Kind::SqrtT: return "sqrt";
      case Kind::Fraction: return "frac:" + detail::format_g(value);
      case Kind::PmaxPlus: return "pmax+" + std::to_string(static_cast<long long>(value));
    }
    return "?";
  }
};

// Fully resolved criterion for one sample size.
struct ResolvedCriterion {
  CriterionFamily family = CriterionFamily::LooCv;
  Index h = 0;
  Index k = 0;
  Index R = 0;
  Index t0 = 0;
  PenaltyKind penalty;
  LossKind loss = LossKind::Squared;
  bool kfold_shuffle = false;
  std::uint64_t kfold_shuffle_seed = 0;
  std::string label = "loo-cv";

  static ResolvedCriterion loo() { return {}; }
  static ResolvedCriterion hblock(Index h) {
    ResolvedCriterion c;
    c.family = CriterionFamily::HblockCv;
    c.h = h;
    c.label = "hblock-cv[h=" + std::to_string(h) + "]";
    return c;
  }
  static ResolvedCriterion kfold(Index k) {
    ResolvedCriterion c;
    c.family = CriterionFamily::KfoldCv;
    c.k = k;
    c.label = "kfold-cv[k=" + std::to_string(k) + "]";
    return c;
  }
  static ResolvedCriterion ic(PenaltyKind p) {
    ResolvedCriterion c;
    c.family = CriterionFamily::Ic;
    c.penalty = p;
    c.label = "ic[" + p.label() + "]";
    return c;
  }
  static ResolvedCriterion rolling(Index R) {
    ResolvedCriterion c;
    c.family = CriterionFamily::Rolling;
    c.R = R;
    c.label = "rolling[R=" + std::to_string(R) + "]";
    return c;
  }
  static ResolvedCriterion recursive(Index t0) {
    ResolvedCriterion c;
    c.family = CriterionFamily::Recursive;
    c.t0 = t0;
    c.label = "recursive[t0=" + std::to_string(t0) + "]";
    return c;
  }
};

// Schedule-form criterion, resolved per T. The label is stable across a T
// grid so rows group correctly.
struct CriterionSpec {
  CriterionFamily family = CriterionFamily::LooCv;
  Schedule h, k, R, t0;
  PenaltyKind penalty;
  LossKind loss = LossKind::Squared;
  bool kfold_shuffle = false;
  std::uint64_t kfold_shuffle_seed = 0;

  std::string label() const {
    switch (family) {
      case CriterionFamily::LooCv: return "loo-cv";
      case CriterionFamily::HblockCv: return "hblock-cv[h=" + h.label() + "]";
      case CriterionFamily::KfoldCv: return "kfold-cv[k=" + k.label() + "]";
      case CriterionFamily::Ic: return "ic[" + penalty.label() + "]";
      case CriterionFamily::Rolling: return "rolling[R=" + R.label() + "]";
      case CriterionFamily::Recursive: return "recursive[t0=" + t0.label() + "]";
    }
    return "?";
  }

  ResolvedCriterion resolve(Index T, Index p_max) const {
    ResolvedCriterion c;
    c.family = family;
    c.penalty = penalty;
    c.loss = loss;
    c.kfold_shuffle = kfold_shuffle;
    c.kfold_shuffle_seed = kfold_shuffle_seed;
    c.label = label();
    auto resolve_one = [&](const Schedule& s, Index auto_value) -> Index {
      switch (s.kind) {
        case Schedule::Kind::Auto: return auto_value;
        case Schedule::Kind::Fixed: return static_cast<Index>(s.value);
        case Schedule::Kind::CbrtT: return default_hblock_h(T);
        case Schedule::Kind::TwoThirdsT: return default_rolling_window(T);
        case Schedule::Kind::SqrtT:
          return static_cast<Index>(std::floor(std::sqrt(static_cast<double>(T))));
        case Schedule::Kind::Fraction:
          return static_cast<Index>(std::floor(s.value * static_cast<double>(T)));
        case Schedule::Kind::PmaxPlus: return p_max + static_cast<Index>(s.value);
      }
      return auto_value;
    };
    switch (family) {
      case CriterionFamily::HblockCv: c.h = resolve_one(h, default_hblock_h(T)); break;
      case CriterionFamily::KfoldCv: c.k = resolve_one(k, std::min<Index>(10, T)); break;
      case CriterionFamily::Rolling: c.R = resolve_one(R, default_rolling_window(T)); break;
      case CriterionFamily::Recursive:
        c.t0 = resolve_one(t0, default_recursive_start(p_max, T));
        break;
      default: break;
    }
    return c;
  }
};

struct ExperimentConfig {
  DgpSpec dgp;  // T and seed are overridden per grid point / replication
  std::vector<Index> T_grid;
  int replications = 1;
  CandidateSetSpec candidates;
  std::vector<CriterionSpec> criteria;
  std::uint64_t base_seed = 0;
  std::string reference_candidate;  // id of the candidate used for diagnostics
  int threads = 1;
  bool use_edf_pdim = false;

  void validate() const {
    if (T_grid.empty()) throw ConfigError("ExperimentConfig: T_grid is empty");
    for (std::size_t i = 1; i < T_grid.size(); ++i) {
      if (T_grid[i] <= T_grid[i - 1]) {
        throw ConfigError("ExperimentConfig: T_grid must be strictly increasing");
      }
    }
    if (replications < 1) throw ConfigError("ExperimentConfig: replications must be >= 1");
    if (criteria.empty()) throw ConfigError("ExperimentConfig: criteria list is empty");
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      for (std::size_t j = i + 1; j < criteria.size(); ++j) {
        if (criteria[i].label() == criteria[j].label()) {
          throw ConfigError("ExperimentConfig: duplicate criterion '" + criteria[i].label() + "'");
        }
      }
    }
    if (threads < 1) throw ConfigError("ExperimentConfig: threads must be >= 1");
  }
};

// --- Single-dataset selection ----------------------------------------------

struct CandidateOutcome {
  std::string model_id;
  Index pdim = 0;
  bool excluded = false;
  std::string exclude_reason;
  CriterionScore score;
  std::optional<ImseReport> imse;
};

struct SelectionReport {
  ResolvedCriterion criterion;
  std::vector<CandidateOutcome> candidates;
  std::string selected_id;
  Index selected_pdim = 0;
  int n_excluded = 0;
  bool has_ratio = false;
  OptimalityRatio ratio;
  // Diagnostics for the reference candidate: decomposition cross terms and
  // the relative gap |L_out/L - 1| between its leave-out and full losses.
  std::optional<double> cross_mu;
  std::optional<double> cross_muhat;
  std::optional<double> imse_ratio_dev;
};

namespace detail {

struct ScoredCandidate {
  CriterionScore score;
  FitResult full_fit;
  Eigen::VectorXd mu_out;  // out-of-sample mean path for rows out_start..T-1
  Index out_start = 0;
  bool has_mu_out = false;
  std::optional<PredictionTrack> track;
};

inline ScoredCandidate score_candidate(const Dataset& data, const ModelSpec& spec,
                                       const ResolvedCriterion& crit, bool use_edf_pdim) {
  ScoredCandidate out;
  out.full_fit = fit(data, spec);
  const Index T = data.rows();
  switch (crit.family) {
    case CriterionFamily::LooCv:
    case CriterionFamily::HblockCv:
    case CriterionFamily::KfoldCv: {
      Eigen::VectorXd resid;
      if (crit.family == CriterionFamily::LooCv) {
        resid = spec.estimator == EstimatorKind::OlsSubset
                    ? loo_residuals_fast(out.full_fit)
                    : loo_residuals(data, spec);
      } else if (crit.family == CriterionFamily::HblockCv) {
        resid = hblock_residuals(data, spec, crit.h);
      } else {
        resid = kfold_residuals(data, spec, crit.k,
                                crit.kfold_shuffle
                                    ? std::optional<std::uint64_t>(crit.kfold_shuffle_seed)
                                    : std::nullopt);
      }
      out.score.loss_part = cv_score(resid, crit.loss);
      out.score.penalty_part = 0.0;
      out.score.total = out.score.loss_part;
      out.mu_out = data.y - resid;
      out.has_mu_out = true;
      break;
    }
    case CriterionFamily::Ic: {
      const double pdim = use_edf_pdim ? out.full_fit.edf : static_cast<double>(spec.pdim());
      out.score = ic_score(out.full_fit.residuals, pdim, T, crit.penalty);
      out.mu_out = out.full_fit.mu_hat;
      out.has_mu_out = true;
      break;
    }
    case CriterionFamily::Rolling:
    case CriterionFamily::Recursive: {
      const PredictionTrack track = crit.family == CriterionFamily::Rolling
                                        ? rolling_track(data, spec, crit.R)
                                        : recursive_track(data, spec, crit.t0);
      out.score = poos_score(track, data.y, crit.loss);
      out.mu_out = track.preds;
      out.out_start = track.start_index;
      out.has_mu_out = true;
      out.track = track;
      break;
    }
  }
  out.score.model_id = spec.id;
  out.score.criterion = crit.label;
  out.score.pdim = spec.pdim();
  return out;
}

}  // namespace detail

// Scores every candidate under one criterion, selects the argmin, and (when
// truth is available) reports exact IMSEs and the optimality ratio. A
// candidate that fails with a rank problem is excluded with a logged reason
// and selection proceeds over the rest.
inline SelectionReport run_selection(const Dataset& data, const std::vector<ModelSpec>& candidates,
                                     const ResolvedCriterion& crit, bool use_edf_pdim = false,
                                     const std::string& reference_candidate = "") {
  data.validate();
  SelectionReport report;
  report.criterion = crit;
  std::vector<CriterionScore> included;
  std::map<std::string, double> imse_by_model;

  std::optional<Eigen::VectorXd> ref_mu_out;
  Index ref_out_start = 0;
  double ref_L_full = 0.0;
  double ref_L_out = 0.0;
  bool has_ref_L_out = false;

  for (const ModelSpec& spec : candidates) {
    CandidateOutcome oc;
    oc.model_id = spec.id;
    oc.pdim = spec.pdim();
    try {
      detail::ScoredCandidate sc = detail::score_candidate(data, spec, crit, use_edf_pdim);
      oc.score = sc.score;
      if (data.has_truth()) {
        ImseReport ir;
        ir.model_id = spec.id;
        ir.L_full = imse_full(*data.mu_true, sc.full_fit.mu_hat);
        if (sc.has_mu_out && sc.out_start == 0 && crit.family != CriterionFamily::Ic) {
          ir.L_loo = imse_loo(*data.mu_true, sc.mu_out);
          if (ir.L_full > 0.0) ir.ratio_loo_full = *ir.L_loo / ir.L_full;
        }
        if (sc.track) {
          ir.L_poos = imse_poos(*data.mu_true, *sc.track);
          ir.poos_start = sc.track->start_index;
        }
        imse_by_model[spec.id] = ir.L_full;
        if (spec.id == reference_candidate) {
          ref_mu_out = sc.mu_out;
          ref_out_start = sc.out_start;
          ref_L_full = ir.L_full;
          if (crit.family != CriterionFamily::Ic) {
            if (sc.track && ir.L_poos) {
              ref_L_out = *ir.L_poos;
              has_ref_L_out = true;
            } else if (!sc.track && ir.L_loo) {
              ref_L_out = *ir.L_loo;
              has_ref_L_out = true;
            }
          }
        }
        oc.imse = std::move(ir);
      }
      included.push_back(oc.score);
    } catch (const RankDeficientError& e) {
      oc.excluded = true;
      oc.exclude_reason = e.what();
    } catch (const LeverageOneError& e) {
      oc.excluded = true;
      oc.exclude_reason = e.what();
    }
    if (oc.excluded) ++report.n_excluded;
    report.candidates.push_back(std::move(oc));
  }

  if (included.empty()) {
    throw EmptyError("run_selection: every candidate was excluded");
  }
  const std::size_t best = select_index(included);
  report.selected_id = included[best].model_id;
  report.selected_pdim = included[best].pdim;

  if (data.has_truth()) {
    report.has_ratio = true;
    report.ratio = optimality_ratio(imse_by_model, report.selected_id);
    if (ref_mu_out) {
      const DecompositionVariant variant = crit.family == CriterionFamily::Ic
                                               ? DecompositionVariant::Full
                                               : (ref_out_start > 0 ? DecompositionVariant::Poos
                                                                    : DecompositionVariant::Loo);
      const DecompositionCheck dc =
          decomposition_check(data, *ref_mu_out, variant, ref_out_start);
      report.cross_mu = dc.cross_term_mu_eps;
      report.cross_muhat = dc.cross_term_muhat_eps;
      if (has_ref_L_out && ref_L_full > 0.0) {
        report.imse_ratio_dev = std::abs(ref_L_out / ref_L_full - 1.0);
      }
    }
  }
  return report;
}

// --- Monte Carlo -------------------------------------------------------------

struct ReplicationRow {
  Index T = 0;
  std::string criterion;
  int replication = 0;
  bool failed = false;
  std::string fail_reason;
  std::string selected_id;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  int n_excluded = 0;
  std::optional<double> cross_mu;
  std::optional<double> cross_muhat;
  std::optional<double> imse_ratio_dev;
};

struct SummaryRow {
  Index T = 0;
  std::string criterion;
  int n_ok = 0;
  int n_failed = 0;
  std::optional<double> ratio_q25, ratio_q50, ratio_q75, ratio_q90, ratio_mean;
  std::optional<double> med_abs_cross_mu, med_abs_cross_muhat, med_imse_ratio_dev;
  std::vector<std::pair<std::string, int>> selection_histogram;  // includes "(failed)"
};

struct MCSummary {
  std::vector<SummaryRow> rows;
};

struct MCResult {
  std::vector<ReplicationRow> rows;  // ordered by (T, criterion, replication)
  MCSummary summary;
  std::vector<std::string> candidate_ids;
  std::vector<std::string> criterion_labels;
  double wall_seconds = 0.0;  // informational; never written into the CSVs
};

// Pure re-aggregation of persisted rows; cmd_simulate and the resume oracle
// both go through here.
inline MCSummary aggregate(const std::vector<ReplicationRow>& rows,
                           const std::vector<std::string>& candidate_ids,
                           const std::vector<std::string>& criterion_labels,
                           const std::vector<Index>& T_grid) {
  MCSummary out;
  for (Index T : T_grid) {
    for (const std::string& label : criterion_labels) {
      SummaryRow s;
      s.T = T;
      s.criterion = label;
      std::vector<double> ratios, cmu, cmuhat, imse_dev;
      std::map<std::string, int> freq;
      for (const auto& r : rows) {
        if (r.T != T || r.criterion != label) continue;
        if (r.failed) {
          ++s.n_failed;
          ++freq["(failed)"];
          continue;
        }
        ++s.n_ok;
        ++freq[r.selected_id];
        ratios.push_back(r.ratio);
        if (r.cross_mu) cmu.push_back(std::abs(*r.cross_mu));
        if (r.cross_muhat) cmuhat.push_back(std::abs(*r.cross_muhat));
        if (r.imse_ratio_dev) imse_dev.push_back(*r.imse_ratio_dev);
      }
      if (!ratios.empty()) {
        s.ratio_q25 = quantile_type8(ratios, 0.25);
        s.ratio_q50 = quantile_type8(ratios, 0.50);
        s.ratio_q75 = quantile_type8(ratios, 0.75);
        s.ratio_q90 = quantile_type8(ratios, 0.90);
        s.ratio_mean = mean(ratios);
      }
      if (!cmu.empty()) s.med_abs_cross_mu = median(cmu);
      if (!cmuhat.empty()) s.med_abs_cross_muhat = median(cmuhat);
      if (!imse_dev.empty()) s.med_imse_ratio_dev = median(imse_dev);
      for (const std::string& id : candidate_ids) {
        s.selection_histogram.emplace_back(id, freq.count(id) ? freq[id] : 0);
      }
      s.selection_histogram.emplace_back("(failed)", s.n_failed);
      out.rows.push_back(std::move(s));
    }
  }
  return out;
}

// Runs the full (T grid x criteria x replications) experiment. Replication r
// at sample size T always uses the stream derive_stream(base_seed, {T, r}),
// so results are independent of the thread schedule.
inline MCResult monte_carlo(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_begin = std::chrono::steady_clock::now();
  MCResult result;
  for (const auto& c : cfg.criteria) result.criterion_labels.push_back(c.label());

  // Candidate ids (and the reference id) are structural, not data dependent;
  // probe them once on a small draw.
  {
    DgpSpec probe = cfg.dgp;
    probe.T = cfg.T_grid.front();
    probe.seed = derive_stream(cfg.base_seed, {static_cast<std::uint64_t>(probe.T), 0});
    const Dataset d = generate(probe);
    for (const auto& m : candidate_set(cfg.candidates, d)) result.candidate_ids.push_back(m.id);
    if (!cfg.reference_candidate.empty()) {
      bool found = false;
      for (const auto& id : result.candidate_ids) found = found || id == cfg.reference_candidate;
      if (!found) {
        throw ConfigError("monte_carlo: reference_candidate '" + cfg.reference_candidate +
                          "' is not in the candidate set");
      }
    }
  }

  const std::size_t n_T = cfg.T_grid.size();
  const std::size_t n_crit = cfg.criteria.size();
  const auto reps = static_cast<std::size_t>(cfg.replications);
  result.rows.resize(n_T * n_crit * reps);

  // One work unit = one (T, replication) pair; it fills one row per criterion.
  const std::size_t n_units = n_T * reps;
  std::atomic<std::size_t> next_unit{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t unit = next_unit.fetch_add(1);
      if (unit >= n_units) return;
      const std::size_t ti = unit / reps;
      const std::size_t rep = unit % reps;
      const Index T = cfg.T_grid[ti];

      auto row_at = [&](std::size_t ci) -> ReplicationRow& {
        return result.rows[(ti * n_crit + ci) * reps + rep];
      };
      for (std::size_t ci = 0; ci < n_crit; ++ci) {
        ReplicationRow& r = row_at(ci);
        r.T = T;
        r.criterion = result.criterion_labels[ci];
        r.replication = static_cast<int>(rep);
      }
      try {
        DgpSpec dspec = cfg.dgp;
        dspec.T = T;
        dspec.seed = derive_stream(cfg.base_seed,
                                   {static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(rep)});
        const Dataset data = generate(dspec);
        const std::vector<ModelSpec> candidates = candidate_set(cfg.candidates, data);
        Index p_max = 0;
        for (const auto& m : candidates) p_max = std::max(p_max, m.pdim());
        for (std::size_t ci = 0; ci < n_crit; ++ci) {
          ReplicationRow& r = row_at(ci);
          try {
            const ResolvedCriterion crit = cfg.criteria[ci].resolve(T, p_max);
            const SelectionReport rep_out = run_selection(data, candidates, crit,
                                                          cfg.use_edf_pdim,
                                                          cfg.reference_candidate);
            r.selected_id = rep_out.selected_id;
            r.ratio = rep_out.ratio.value;
            r.n_excluded = rep_out.n_excluded;
            r.cross_mu = rep_out.cross_mu;
            r.cross_muhat = rep_out.cross_muhat;
            r.imse_ratio_dev = rep_out.imse_ratio_dev;
          } catch (const Error& e) {
            r.failed = true;
            r.fail_reason = e.what();
          }
        }
      } catch (const Error& e) {
        for (std::size_t ci = 0; ci < n_crit; ++ci) {
          ReplicationRow& r = row_at(ci);
          r.failed = true;
          r.fail_reason = e.what();
        }
      }
    }
  };

  const int n_threads = std::max(1, cfg.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.summary = aggregate(result.rows, result.candidate_ids, result.criterion_labels,
                             cfg.T_grid);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return result;
}

// Slope of ln(median |cross term|) against ln T for one criterion label.
inline double cross_term_slope_from_summary(const MCSummary& summary,
                                            const std::string& criterion_label) {
  std::vector<double> ln_T, ln_med;
  for (const auto& row : summary.rows) {
    if (row.criterion != criterion_label) continue;
    if (!row.med_abs_cross_muhat) continue;
    if (*row.med_abs_cross_muhat < 1e-300) {
      throw DegenerateGridError("cross_term_slope: zero median cross term at T = " +
                                std::to_string(row.T));
    }
    ln_T.push_back(std::log(static_cast<double>(row.T)));
    ln_med.push_back(std::log(*row.med_abs_cross_muhat));
  }
  if (ln_T.size() < 3) {
    throw DegenerateGridError("cross_term_slope: need >= 3 grid points with cross terms");
  }
  return ols_slope(ln_T, ln_med);
}

// Monte Carlo rate check for the leave-out cross term (1/T) sum 2 mu~ eps.
// Uses the first criterion in the config; the config must name a reference
// candidate.
inline double cross_term_slope(const ExperimentConfig& cfg) {
  if (cfg.T_grid.size() < 3) throw DegenerateGridError("cross_term_slope: T_grid must have >= 3 points");
  if (cfg.reference_candidate.empty()) {
    throw ConfigError("cross_term_slope: config must set reference_candidate");
  }
  const MCResult res = monte_carlo(cfg);
  return cross_term_slope_from_summary(res.summary, cfg.criteria.front().label());
}

// Infill diagnostic for time-varying coefficients: fit the tvp model, cut
// the sample into contiguous blocks of length ell (last may be short), and
// report the largest within-block pairwise coefficient distance. For a
// smooth coefficient path this spread should shrink as the sample densifies
// with ell growing slowly.
inline double tvp_block_diagnostic(const Dataset& data, const ModelSpec& spec, Index ell) {
  if (ell < 1 || ell > data.rows()) {
    throw BadArgsError("tvp_block_diagnostic: need 1 <= ell <= T");
  }
  const FitResult f = fit_tvp_kernel(data, spec);
  const Index T = data.rows();
  double spread = 0.0;
  for (Index lo = 0; lo < T; lo += ell) {
    const Index hi = std::min(T, lo + ell);
    for (Index i = lo; i < hi; ++i) {
      for (Index r = i + 1; r < hi; ++r) {
        spread = std::max(spread, (f.beta_path.row(i) - f.beta_path.row(r)).norm());
      }
    }
  }
  return spread;
}

}  // namespace modsel
