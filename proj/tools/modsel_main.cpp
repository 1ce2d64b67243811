#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modsel/config.hpp"
#include "modsel/csv.hpp"
#include "modsel/harness.hpp"
#include "modsel/report_io.hpp"
#include "modsel/version.hpp"

namespace fs = std::filesystem;
using modsel::Index;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

modsel::csv::Field opt_field(const std::optional<double>& v) {
  return v ? modsel::csv::Field(*v) : modsel::csv::Field("");
}

void write_manifest(const fs::path& out_dir, const modsel::RunConfig& cfg,
                    const std::string& started, const std::vector<std::string>& outputs,
                    double wall_seconds) {
  nlohmann::json m;
  m["config_hash"] = modsel::config_hash_hex(cfg.parsed);
  m["tool_version"] = modsel::kVersion;
  m["base_seed"] = cfg.base_seed;
  m["started_utc"] = started;
  m["finished_utc"] = iso_now();
  m["wall_seconds"] = wall_seconds;
  m["outputs"] = outputs;
  modsel::csv::Writer::atomic_write(out_dir / "manifest.json", m.dump(2) + "\n");
}

// --- select -----------------------------------------------------------------

int cmd_select(const modsel::RunConfig& cfg, const fs::path& out_dir) {
  const std::string started = iso_now();
  modsel::Dataset data;
  if (cfg.has_dgp) {
    modsel::DgpSpec d = cfg.dgp;
    d.seed = cfg.base_seed;
    data = modsel::generate(d);
  } else {
    data = modsel::load_csv_dataset(*cfg.data);
  }
  const std::vector<modsel::ModelSpec> candidates = modsel::candidate_set(cfg.candidates, data);
  Index p_max = 0;
  for (const auto& m : candidates) p_max = std::max(p_max, m.pdim());

  modsel::csv::Writer w;
  w.header({"model_id", "criterion", "loss_part", "penalty_part", "total", "L_full", "L_loo",
            "ratio"});
  bool any_failed = false;
  for (const auto& cs : cfg.criteria) {
    const modsel::ResolvedCriterion crit = cs.resolve(data.rows(), p_max);
    modsel::SelectionReport report;
    try {
      report = modsel::run_selection(data, candidates, crit, cfg.use_edf_pdim,
                                     cfg.reference_candidate);
    } catch (const modsel::ConfigError&) {
      throw;
    } catch (const modsel::Error& e) {
      std::cerr << "selection failed for criterion " << crit.label << ": " << e.what() << "\n";
      any_failed = true;
      continue;
    }
    double min_L = std::numeric_limits<double>::infinity();
    for (const auto& oc : report.candidates) {
      if (!oc.excluded && oc.imse) min_L = std::min(min_L, oc.imse->L_full);
    }
    for (const auto& oc : report.candidates) {
      if (oc.excluded) {
        std::cerr << "excluded " << oc.model_id << " under " << crit.label << ": "
                  << oc.exclude_reason << "\n";
        w.row({oc.model_id, crit.label, "", "", "", "", "", ""});
        continue;
      }
      modsel::csv::Field L_full(""), L_loo(""), ratio("");
      if (oc.imse) {
        L_full = oc.imse->L_full;
        if (oc.imse->L_loo) L_loo = *oc.imse->L_loo;
        if (min_L > 0.0 && std::isfinite(min_L)) ratio = oc.imse->L_full / min_L;
      }
      w.row({oc.model_id, crit.label, oc.score.loss_part, oc.score.penalty_part, oc.score.total,
             L_full, L_loo, ratio});
    }
    std::cout << "selected[" << crit.label << "] = " << report.selected_id;
    if (report.has_ratio) std::cout << "  (optimality ratio " << report.ratio.value << ")";
    std::cout << "\n";
  }
  w.write(out_dir / "selection.csv");
  write_manifest(out_dir, cfg, started, {"selection.csv"}, 0.0);
  return any_failed ? kExitNumerical : kExitOk;
}

// --- simulate / convergence ---------------------------------------------------

int cmd_simulate(const modsel::RunConfig& cfg, const fs::path& out_dir, bool convergence) {
  const std::string started = iso_now();
  const modsel::ExperimentConfig ec = modsel::to_experiment_config(cfg);
  const modsel::MCResult res = modsel::monte_carlo(ec);

  std::vector<std::string> outputs = {"replications.csv", "summary.csv"};
  modsel::csv::Writer::atomic_write(out_dir / "replications.csv",
                                    modsel::report::replication_rows_csv(res.rows));
  modsel::csv::Writer::atomic_write(out_dir / "summary.csv",
                                    modsel::report::summary_csv(res.summary));

  bool any_failed = false;
  for (const auto& s : res.summary.rows) any_failed = any_failed || s.n_failed > 0;

  if (convergence) {
    // Per-criterion slope of ln(median |cross term|) on ln T; only with a
    // grid of >= 3 usable points.
    std::map<std::string, std::optional<double>> slope;
    for (const auto& label : res.criterion_labels) {
      slope[label] = std::nullopt;
      if (ec.T_grid.size() >= 3) {
        try {
          slope[label] = modsel::cross_term_slope_from_summary(res.summary, label);
        } catch (const modsel::DegenerateGridError&) {
        }
      }
    }
    modsel::csv::Writer w;
    w.header({"T", "criterion", "median_ratio", "q90_ratio", "median_cross_term", "slope"});
    for (const auto& s : res.summary.rows) {
      w.row({static_cast<long long>(s.T), s.criterion, opt_field(s.ratio_q50),
             opt_field(s.ratio_q90), opt_field(s.med_abs_cross_muhat),
             opt_field(slope[s.criterion])});
    }
    w.write(out_dir / "convergence.csv");
    outputs.push_back("convergence.csv");

    for (const auto& label : res.criterion_labels) {
      modsel::csv::Writer pw;
      pw.header({"T", "median_ratio"});
      for (const auto& s : res.summary.rows) {
        if (s.criterion != label) continue;
        pw.row({static_cast<long long>(s.T), opt_field(s.ratio_q50)});
      }
      const std::string name = "plot_" + sanitize_label(label) + ".csv";
      pw.write(out_dir / name);
      outputs.push_back(name);
    }
  }

  write_manifest(out_dir, cfg, started, outputs, res.wall_seconds);

  for (const auto& s : res.summary.rows) {
    std::cout << "T=" << s.T << "  " << s.criterion << "  median_ratio=";
    if (s.ratio_q50) std::cout << *s.ratio_q50;
    else std::cout << "n/a";
    if (s.n_failed > 0) std::cout << "  FAILED_CELLS=" << s.n_failed;
    std::cout << "\n";
  }
  std::cout << "wall_seconds=" << res.wall_seconds << "\n";
  return any_failed ? kExitNumerical : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model selection and forecast evaluation toolkit"};
  app.set_version_flag("--version", std::string(modsel::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (JSON, // comments allowed)")
        ->required();
    sub->add_option("--out", out_override, "output directory (overrides config 'out')");
    sub->add_option("--seed", seed_override, "override base_seed");
    sub->add_option("--threads", threads_override,
                    "worker threads (hint only; output-invariant)");
  };
  CLI::App* select = app.add_subcommand("select", "score candidates on one dataset");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo over a T grid");
  CLI::App* convergence =
      app.add_subcommand("convergence", "Monte Carlo plus convergence table and plot data");
  add_common(select);
  add_common(simulate);
  add_common(convergence);

  CLI11_PARSE(app, argc, argv);

  try {
    modsel::RunConfig cfg = modsel::parse_config_file(config_path);
    if (seed_override) cfg.base_seed = *seed_override;
    if (threads_override) cfg.threads = *threads_override;
    for (const auto& c : cfg.criteria) {
      if (const auto w = c.penalty.warning()) {
        std::cerr << "warning: " << c.label() << ": " << *w << "\n";
      }
    }
    const fs::path out_dir = out_override.empty() ? fs::path(cfg.out_dir) : fs::path(out_override);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw modsel::DataError("cannot create output directory '" + out_dir.string() + "'");

    if (select->parsed()) return cmd_select(cfg, out_dir);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir, false);
    return cmd_simulate(cfg, out_dir, true);
  } catch (const modsel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const modsel::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const modsel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
