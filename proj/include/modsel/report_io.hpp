#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modsel/csv.hpp"
#include "modsel/errors.hpp"
#include "modsel/harness.hpp"

// CSV persistence for Monte Carlo results. Per-replication rows are written
// before aggregation; a summary can always be rebuilt from the persisted rows
// alone, byte-for-byte.
namespace modsel::report {

inline csv::Field opt_field(const std::optional<double>& v) {
  return v ? csv::Field(*v) : csv::Field("");
}

inline std::string histogram_string(const std::vector<std::pair<std::string, int>>& hist) {
  std::string s;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    if (i) s += ';';
    s += hist[i].first + ":" + std::to_string(hist[i].second);
  }
  return s;
}

inline std::string replication_rows_csv(const std::vector<ReplicationRow>& rows) {
  csv::Writer w;
  w.header({"T", "criterion", "replication", "selected_id", "ratio", "n_excluded",
            "cross_term_mu", "cross_term_muhat", "imse_ratio_dev", "failed", "fail_reason"});
  for (const auto& r : rows) {
    w.row({static_cast<long long>(r.T), r.criterion, r.replication,
           r.failed ? csv::Field("") : csv::Field(r.selected_id),
           r.failed ? csv::Field("") : csv::Field(r.ratio),
           r.failed ? csv::Field("") : csv::Field(r.n_excluded), opt_field(r.cross_mu),
           opt_field(r.cross_muhat), opt_field(r.imse_ratio_dev), r.failed ? 1 : 0,
           r.fail_reason});
  }
  return w.content();
}

inline std::string summary_csv(const MCSummary& summary) {
  csv::Writer w;
  w.header({"T", "criterion", "n_ok", "n_failed", "ratio_q25", "ratio_q50", "ratio_q75",
            "ratio_q90", "ratio_mean", "median_abs_cross_mu", "median_abs_cross_muhat",
            "median_imse_ratio_dev", "selection_histogram"});
  for (const auto& s : summary.rows) {
    w.row({static_cast<long long>(s.T), s.criterion, s.n_ok, s.n_failed, opt_field(s.ratio_q25),
           opt_field(s.ratio_q50), opt_field(s.ratio_q75), opt_field(s.ratio_q90),
           opt_field(s.ratio_mean), opt_field(s.med_abs_cross_mu),
           opt_field(s.med_abs_cross_muhat), opt_field(s.med_imse_ratio_dev),
           histogram_string(s.selection_histogram)});
  }
  return w.content();
}

// Reads rows previously written by replication_rows_csv (resume or
// re-aggregation without recompute).
inline std::vector<ReplicationRow> parse_replication_rows(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  if (table.empty() || table.front().size() != 11) {
    throw DataError("report: '" + path.string() + "' is not a replication-row file");
  }
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::strtod(s.c_str(), nullptr);
  };
  std::vector<ReplicationRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& t = table[i];
    ReplicationRow r;
    r.T = static_cast<Index>(std::strtoll(t[0].c_str(), nullptr, 10));
    r.criterion = t[1];
    r.replication = static_cast<int>(std::strtol(t[2].c_str(), nullptr, 10));
    r.selected_id = t[3];
    if (!t[4].empty()) r.ratio = std::strtod(t[4].c_str(), nullptr);
    if (!t[5].empty()) r.n_excluded = static_cast<int>(std::strtol(t[5].c_str(), nullptr, 10));
    r.cross_mu = opt(t[6]);
    r.cross_muhat = opt(t[7]);
    r.imse_ratio_dev = opt(t[8]);
    r.failed = t[9] == "1";
    r.fail_reason = t[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace modsel::report
