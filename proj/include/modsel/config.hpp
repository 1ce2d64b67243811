#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "modsel/csv.hpp"
#include "modsel/errors.hpp"
#include "modsel/harness.hpp"

namespace modsel {

// External dataset: CSV with a header row; one named response column,
// optional named truth columns, every other column a regressor.
struct DataSourceSpec {
  std::string path;
  std::string response;
  std::string mu_true_col;   // empty = absent
  std::string eps_true_col;  // empty = absent
  bool add_intercept = true;
};

struct RunConfig {
  std::uint64_t base_seed = 0;
  bool has_dgp = false;
  DgpSpec dgp;
  std::optional<DataSourceSpec> data;
  CandidateSetSpec candidates;
  std::vector<CriterionSpec> criteria;
  LossKind loss = LossKind::Squared;
  std::vector<Index> T_grid;
  int replications = 1;
  std::string reference_candidate;
  bool use_edf_pdim = false;
  int threads = 1;
  std::string out_dir = "out";
  nlohmann::json parsed;  // canonical form used for hashing
};

namespace detail {

using json = nlohmann::json;

inline void require_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) {
    throw ConfigError("config: missing key '" + key + "' in " + where);
  }
  return obj.at(key);
}

inline Schedule parse_schedule(const json& v, const std::string& where) {
  Schedule s;
  if (v.is_number_integer()) {
    s.kind = Schedule::Kind::Fixed;
    s.value = v.get<double>();
    return s;
  }
  if (v.is_string()) {
    const std::string str = v.get<std::string>();
    if (str == "auto") s.kind = Schedule::Kind::Auto;
    else if (str == "cbrt") s.kind = Schedule::Kind::CbrtT;
    else if (str == "twothirds") s.kind = Schedule::Kind::TwoThirdsT;
    else if (str == "sqrt") s.kind = Schedule::Kind::SqrtT;
    else if (str.rfind("frac:", 0) == 0) {
      s.kind = Schedule::Kind::Fraction;
      s.value = std::strtod(str.c_str() + 5, nullptr);
      if (!(s.value > 0.0 && s.value < 1.0)) {
        throw ConfigError("config: bad fraction in '" + str + "' at " + where);
      }
    } else if (str.rfind("pmax+", 0) == 0) {
      s.kind = Schedule::Kind::PmaxPlus;
      s.value = std::strtod(str.c_str() + 5, nullptr);
    } else {
      throw ConfigError("config: unknown schedule '" + str + "' at " + where);
    }
    return s;
  }
  throw ConfigError("config: schedule at " + where + " must be an integer or a string");
}

inline PenaltyKind parse_penalty(const json& v, const std::string& where) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "aic") return PenaltyKind::aic();
    if (s == "bic") return PenaltyKind::bic();
    if (s == "hqic") return PenaltyKind::hqic();
    if (s == "ric") return PenaltyKind::ric();
    throw ConfigError("config: unknown penalty '" + s + "' at " + where);
  }
  if (v.is_object()) {
    require_keys(v, where, {"kind", "c", "lambda"});
    const std::string kind = require(v, "kind", where).get<std::string>();
    if (kind == "hqic") {
      PenaltyKind p = PenaltyKind::hqic(v.value("c", 2.01));
      if (!(p.hqic_c > 2.0)) throw ConfigError("config: hqic needs c > 2 at " + where);
      return p;
    }
    if (kind == "fixed") {
      return PenaltyKind::fixed(require(v, "lambda", where).get<double>());
    }
    if (kind == "aic") return PenaltyKind::aic();
    if (kind == "bic") return PenaltyKind::bic();
    if (kind == "ric") return PenaltyKind::ric();
    throw ConfigError("config: unknown penalty kind '" + kind + "' at " + where);
  }
  throw ConfigError("config: penalty at " + where + " must be a string or an object");
}

inline CriterionSpec parse_criterion(const json& v, const std::string& where) {
  if (!v.is_object()) throw ConfigError("config: criterion at " + where + " must be an object");
  CriterionSpec c;
  const std::string fam = require(v, "family", where).get<std::string>();
  if (fam == "loo-cv") {
    require_keys(v, where, {"family"});
    c.family = CriterionFamily::LooCv;
  } else if (fam == "hblock-cv") {
    require_keys(v, where, {"family", "h"});
    c.family = CriterionFamily::HblockCv;
    if (v.contains("h")) c.h = parse_schedule(v.at("h"), where + ".h");
  } else if (fam == "kfold-cv") {
    require_keys(v, where, {"family", "k", "shuffle", "shuffle_seed"});
    c.family = CriterionFamily::KfoldCv;
    if (v.contains("k")) c.k = parse_schedule(v.at("k"), where + ".k");
    c.kfold_shuffle = v.value("shuffle", false);
    c.kfold_shuffle_seed = v.value("shuffle_seed", std::uint64_t{0});
  } else if (fam == "ic") {
    require_keys(v, where, {"family", "penalty"});
    c.family = CriterionFamily::Ic;
    c.penalty = parse_penalty(require(v, "penalty", where), where + ".penalty");
  } else if (fam == "rolling") {
    require_keys(v, where, {"family", "R"});
    c.family = CriterionFamily::Rolling;
    if (v.contains("R")) c.R = parse_schedule(v.at("R"), where + ".R");
  } else if (fam == "recursive") {
    require_keys(v, where, {"family", "t0"});
    c.family = CriterionFamily::Recursive;
    if (v.contains("t0")) c.t0 = parse_schedule(v.at("t0"), where + ".t0");
  } else {
    throw ConfigError("config: unknown criterion family '" + fam + "' at " + where);
  }
  return c;
}

inline DgpSpec parse_dgp(const json& v) {
  require_keys(v, "dgp",
               {"family", "T", "beta_true", "noise_sd", "ar_rho", "n_lagged_y", "n_lags",
                "tvp_path", "truth_scale", "poly_degree"});
  DgpSpec d;
  const std::string fam = require(v, "family", "dgp").get<std::string>();
  if (fam == "iid-linear") d.family = DgpFamily::IidLinear;
  else if (fam == "hetero-linear") d.family = DgpFamily::HeteroLinear;
  else if (fam == "ar1-error-linear") d.family = DgpFamily::Ar1ErrorLinear;
  else if (fam == "ar-lags") d.family = DgpFamily::ArLags;
  else if (fam == "tvp-smooth") d.family = DgpFamily::TvpSmooth;
  else if (fam == "nonlinear-truth") d.family = DgpFamily::NonlinearTruth;
  else throw ConfigError("config: unknown dgp family '" + fam + "'");
  d.T = v.value("T", Index{100});
  if (v.contains("beta_true")) d.beta_true = v.at("beta_true").get<std::vector<double>>();
  d.noise_sd = v.value("noise_sd", 1.0);
  d.ar_rho = v.value("ar_rho", 0.0);
  d.n_lagged_y = v.value("n_lagged_y", Index{0});
  d.n_lags = v.value("n_lags", Index{0});
  d.truth_scale = v.value("truth_scale", 1.0);
  d.poly_degree = v.value("poly_degree", Index{5});
  if (v.contains("tvp_path")) {
    const json& p = v.at("tvp_path");
    require_keys(p, "dgp.tvp_path", {"kind", "amplitude"});
    const std::string kind = p.value("kind", std::string{"sine"});
    if (kind == "sine") d.tvp_path.kind = TvpPath::Kind::Sine;
    else if (kind == "constant") d.tvp_path.kind = TvpPath::Kind::Constant;
    else if (kind == "linear") d.tvp_path.kind = TvpPath::Kind::Linear;
    else throw ConfigError("config: unknown tvp_path kind '" + kind + "'");
    d.tvp_path.amplitude = p.value("amplitude", 1.0);
  }
  return d;
}

inline CandidateSetSpec parse_candidates(const json& v) {
  CandidateSetSpec c;
  const std::string kind = require(v, "kind", "candidates").get<std::string>();
  if (kind == "nested-polynomial") {
    require_keys(v, "candidates", {"kind", "max_deg"});
    c.kind = CandidateSetSpec::Kind::NestedPolynomial;
    const json& md = require(v, "max_deg", "candidates");
    if (md.is_string()) {
      if (md.get<std::string>() != "cbrt") {
        throw ConfigError("config: candidates.max_deg must be an integer or \"cbrt\"");
      }
      c.max_deg_cbrt = true;
    } else {
      c.max_deg = md.get<Index>();
    }
  } else if (kind == "subset-lattice") {
    require_keys(v, "candidates", {"kind", "pmax", "first_col"});
    c.kind = CandidateSetSpec::Kind::SubsetLattice;
    c.pmax = require(v, "pmax", "candidates").get<Index>();
    c.first_col = v.value("first_col", Index{1});
  } else if (kind == "ridge-grid") {
    require_keys(v, "candidates", {"kind", "lambdas", "columns"});
    c.kind = CandidateSetSpec::Kind::RidgeGrid;
    c.lambdas = require(v, "lambdas", "candidates").get<std::vector<double>>();
    if (v.contains("columns")) c.ridge_columns = v.at("columns").get<std::vector<Index>>();
  } else if (kind == "bandwidth-grid") {
    require_keys(v, "candidates", {"kind", "bandwidths", "kernel", "side"});
    c.kind = CandidateSetSpec::Kind::BandwidthGrid;
    c.bandwidths = require(v, "bandwidths", "candidates").get<std::vector<double>>();
    const std::string kern = v.value("kernel", std::string{"epanechnikov"});
    if (kern == "epanechnikov") c.kernel = KernelKind::Epanechnikov;
    else if (kern == "uniform") c.kernel = KernelKind::Uniform;
    else if (kern == "gaussian") c.kernel = KernelKind::Gaussian;
    else throw ConfigError("config: unknown kernel '" + kern + "'");
    const std::string side = v.value("side", std::string{"two-sided"});
    if (side == "two-sided") c.side = KernelSide::TwoSided;
    else if (side == "one-sided-past") c.side = KernelSide::OneSidedPast;
    else throw ConfigError("config: unknown side '" + side + "'");
  } else {
    throw ConfigError("config: unknown candidates kind '" + kind + "'");
  }
  return c;
}

}  // namespace detail

// FNV-1a 64 over the canonical dump; nlohmann objects keep keys sorted, so
// the hash is stable under key reordering in the file.
inline std::string config_hash_hex(const nlohmann::json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline RunConfig parse_config(const nlohmann::json& j) {
  detail::require_keys(j, "top level",
                       {"base_seed", "dgp", "data", "candidates", "criteria", "loss", "T_grid",
                        "replications", "reference_candidate", "use_edf_pdim", "threads", "out"});
  RunConfig c;
  c.parsed = j;
  c.base_seed = j.value("base_seed", std::uint64_t{0});
  if (j.contains("dgp")) {
    c.has_dgp = true;
    c.dgp = detail::parse_dgp(j.at("dgp"));
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::require_keys(d, "data", {"path", "response", "mu_true", "eps_true", "add_intercept"});
    DataSourceSpec ds;
    ds.path = detail::require(d, "path", "data").get<std::string>();
    ds.response = detail::require(d, "response", "data").get<std::string>();
    ds.mu_true_col = d.value("mu_true", std::string{});
    ds.eps_true_col = d.value("eps_true", std::string{});
    ds.add_intercept = d.value("add_intercept", true);
    c.data = ds;
  }
  if (c.has_dgp && c.data) throw ConfigError("config: give either 'dgp' or 'data', not both");
  if (!c.has_dgp && !c.data) throw ConfigError("config: missing key 'dgp' (or 'data')");
  c.candidates = detail::parse_candidates(detail::require(j, "candidates", "top level"));
  const auto& crits = detail::require(j, "criteria", "top level");
  if (!crits.is_array() || crits.empty()) {
    throw ConfigError("config: 'criteria' must be a nonempty array");
  }
  for (std::size_t i = 0; i < crits.size(); ++i) {
    c.criteria.push_back(
        detail::parse_criterion(crits.at(i), "criteria[" + std::to_string(i) + "]"));
  }
  const std::string loss = j.value("loss", std::string{"squared"});
  if (loss == "squared") c.loss = LossKind::Squared;
  else if (loss == "absolute") c.loss = LossKind::Absolute;
  else throw ConfigError("config: unknown loss '" + loss + "'");
  for (auto& cr : c.criteria) cr.loss = c.loss;
  if (j.contains("T_grid")) c.T_grid = j.at("T_grid").get<std::vector<Index>>();
  c.replications = j.value("replications", 1);
  c.reference_candidate = j.value("reference_candidate", std::string{});
  c.use_edf_pdim = j.value("use_edf_pdim", false);
  c.threads = j.value("threads", 1);
  c.out_dir = j.value("out", std::string{"out"});
  return c;
}

inline RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: JSON parse error in '" + path.string() + "': " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: bad value type in '" + path.string() + "': " + e.what());
  }
}

inline ExperimentConfig to_experiment_config(const RunConfig& c) {
  if (!c.has_dgp) throw ConfigError("config: simulation requires a 'dgp' block");
  if (c.T_grid.empty()) throw ConfigError("config: missing key 'T_grid'");
  ExperimentConfig e;
  e.dgp = c.dgp;
  e.T_grid = c.T_grid;
  e.replications = c.replications;
  e.candidates = c.candidates;
  e.criteria = c.criteria;
  e.base_seed = c.base_seed;
  e.reference_candidate = c.reference_candidate;
  e.threads = c.threads;
  e.use_edf_pdim = c.use_edf_pdim;
  e.validate();
  return e;
}

// Loads the external CSV named in the config. Column order in the file is
// preserved for the regressors; the intercept (when added) is column 0.
inline Dataset load_csv_dataset(const DataSourceSpec& ds) {
  const auto rows = csv::read_file(ds.path);
  if (rows.size() < 2) throw DataError("data: '" + ds.path + "' needs a header and rows");
  const auto& header = rows.front();
  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto y_col = find_col(ds.response);
  if (!y_col) throw DataError("data: response column '" + ds.response + "' not found");
  std::optional<std::size_t> mu_col, eps_col;
  if (!ds.mu_true_col.empty()) {
    mu_col = find_col(ds.mu_true_col);
    if (!mu_col) throw DataError("data: mu_true column '" + ds.mu_true_col + "' not found");
  }
  if (!ds.eps_true_col.empty()) {
    eps_col = find_col(ds.eps_true_col);
    if (!eps_col) throw DataError("data: eps_true column '" + ds.eps_true_col + "' not found");
  }
  if (mu_col.has_value() != eps_col.has_value()) {
    throw DataError("data: mu_true and eps_true columns must be given together");
  }
  std::vector<std::size_t> x_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == *y_col || (mu_col && i == *mu_col) || (eps_col && i == *eps_col)) continue;
    x_cols.push_back(i);
  }
  const Index T = static_cast<Index>(rows.size() - 1);
  const Index px = static_cast<Index>(x_cols.size());
  const Index off = ds.add_intercept ? 1 : 0;
  if (px + off == 0) throw DataError("data: no regressor columns in '" + ds.path + "'");

  Dataset d;
  d.meta = "file=" + ds.path;
  d.y.resize(T);
  d.X.resize(T, px + off);
  if (ds.add_intercept) d.X.col(0).setOnes();
  if (mu_col) {
    d.mu_true = Eigen::VectorXd(T);
    d.eps_true = Eigen::VectorXd(T);
  }
  auto parse_num = [&](const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw DataError("data: cannot parse number '" + s + "' on line " + std::to_string(line));
    }
    return v;
  };
  for (Index i = 0; i < T; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i) + 1];
    if (r.size() != header.size()) {
      throw DataError("data: row " + std::to_string(i + 2) + " has " + std::to_string(r.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    d.y[i] = parse_num(r[*y_col], i + 2);
    for (Index j = 0; j < px; ++j) {
      d.X(i, j + off) = parse_num(r[x_cols[static_cast<std::size_t>(j)]], i + 2);
    }
    if (mu_col) {
      (*d.mu_true)[i] = parse_num(r[*mu_col], i + 2);
      (*d.eps_true)[i] = parse_num(r[*eps_col], i + 2);
    }
  }
  d.validate();
  return d;
}

}  // namespace modsel
