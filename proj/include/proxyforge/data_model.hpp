#pragma once

// Experiment panel data model: per-(bucket, experiment, metric) short-term
// percent deltas X and per-(bucket, experiment) long-term north-star percent
// deltas Y, plus the metric registry holding roles and sign conventions.
//
// Sign flips happen exactly once, at load: stored values are already adjusted
// so that "up is good" for every column.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "proxyforge/csv.hpp"
#include "proxyforge/error.hpp"

namespace proxyforge {

enum class MetricRole { auxiliary, north_star_short, north_star_long };

inline std::string_view role_name(MetricRole r) {
  switch (r) {
    case MetricRole::auxiliary: return "auxiliary";
    case MetricRole::north_star_short: return "north_star_short";
    case MetricRole::north_star_long: return "north_star_long";
  }
  return "auxiliary";
}

inline MetricRole parse_role(std::string_view text) {
  if (text == "auxiliary") return MetricRole::auxiliary;
  if (text == "north_star_short") return MetricRole::north_star_short;
  if (text == "north_star_long") return MetricRole::north_star_long;
  fail(Errc::bad_registry, "unknown metric role '" + std::string(text) + "'");
}

struct MetricEntry {
  std::string metric_id;
  MetricRole role = MetricRole::auxiliary;
  int sign = +1;
  std::string display_name;
};

class MetricRegistry {
 public:
  MetricRegistry() = default;

  static MetricRegistry from_entries(std::vector<MetricEntry> entries) {
    MetricRegistry reg;
    reg.entries_ = std::move(entries);
    reg.rebuild();
    return reg;
  }

  // CSV schema: metric_id,role,sign,display_name
  static MetricRegistry load(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    const int c_id = table.column("metric_id");
    const int c_role = table.column("role");
    const int c_sign = table.column("sign");
    const int c_name = table.column("display_name");
    if (c_id < 0 || c_role < 0 || c_sign < 0 || c_name < 0) {
      fail(Errc::bad_registry,
           "'" + path.string() + "' must have header metric_id,role,sign,display_name");
    }
    std::vector<MetricEntry> entries;
    for (const auto& row : table.rows) {
      MetricEntry e;
      e.metric_id = row[static_cast<std::size_t>(c_id)];
      e.role = parse_role(row[static_cast<std::size_t>(c_role)]);
      const std::string& s = row[static_cast<std::size_t>(c_sign)];
      if (s == "+1" || s == "1") {
        e.sign = +1;
      } else if (s == "-1") {
        e.sign = -1;
      } else {
        fail(Errc::bad_registry, "sign must be +1 or -1, got '" + s + "'");
      }
      e.display_name = row[static_cast<std::size_t>(c_name)];
      entries.push_back(std::move(e));
    }
    return from_entries(std::move(entries));
  }

  const std::vector<MetricEntry>& entries() const { return entries_; }

  // Columns that can enter a proxy, in registry order. The short-term north
  // star participates like any other auxiliary metric.
  const std::vector<std::string>& auxiliary_ids() const { return auxiliary_ids_; }

  const std::string& north_star_long_id() const { return north_star_long_id_; }

  bool has(std::string_view id) const { return by_id_.count(std::string(id)) > 0; }

  const MetricEntry& entry(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) fail(Errc::unknown_metric, "metric '" + std::string(id) + "' not in registry");
    return entries_[it->second];
  }

  int sign_of(std::string_view id) const { return entry(id).sign; }

  std::string to_csv() const {
    std::string out = "metric_id,role,sign,display_name\n";
    for (const auto& e : entries_) {
      out += e.metric_id;
      out += ',';
      out += role_name(e.role);
      out += e.sign > 0 ? ",+1," : ",-1,";
      out += e.display_name;
      out += '\n';
    }
    return out;
  }

  MetricRegistry subset(const std::vector<std::string>& auxiliary_subset) const {
    std::vector<MetricEntry> kept;
    for (const auto& id : auxiliary_subset) {
      const MetricEntry& e = entry(id);
      if (e.role == MetricRole::north_star_long) {
        fail(Errc::invalid_config, "cannot select the long-term north star as a proxy input");
      }
      kept.push_back(e);
    }
    kept.push_back(entry(north_star_long_id_));
    return from_entries(std::move(kept));
  }

 private:
  void rebuild() {
    by_id_.clear();
    auxiliary_ids_.clear();
    north_star_long_id_.clear();
    int long_count = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const MetricEntry& e = entries_[i];
      if (e.metric_id.empty()) fail(Errc::bad_registry, "empty metric_id");
      if (!by_id_.emplace(e.metric_id, i).second) {
        fail(Errc::bad_registry, "duplicate metric_id '" + e.metric_id + "'");
      }
      if (e.sign != 1 && e.sign != -1) fail(Errc::bad_registry, "sign must be +1 or -1");
      if (e.role == MetricRole::north_star_long) {
        ++long_count;
        north_star_long_id_ = e.metric_id;
      } else {
        auxiliary_ids_.push_back(e.metric_id);
      }
    }
    if (long_count != 1) {
      fail(Errc::bad_registry, "registry must contain exactly one north_star_long metric, got " +
                                   std::to_string(long_count));
    }
    if (auxiliary_ids_.empty()) {
      fail(Errc::bad_registry, "registry needs at least one auxiliary metric");
    }
  }

  std::vector<MetricEntry> entries_;
  std::vector<std::string> auxiliary_ids_;
  std::string north_star_long_id_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Immutable after construction; all downstream reads are safe to share.
struct ExperimentPanel {
  std::vector<std::string> experiment_ids;           // J, file order
  std::vector<std::vector<std::string>> bucket_ids;  // J x N labels, sorted per experiment
  std::vector<std::string> metric_ids;               // M auxiliary columns, registry order
  Eigen::MatrixXd X;                                 // (N*J) x M, row = bucket + N*experiment
  Eigen::MatrixXd Y;                                 // N x J
  MetricRegistry registry;

  Eigen::Index n_experiments() const { return static_cast<Eigen::Index>(experiment_ids.size()); }
  Eigen::Index n_buckets() const { return Y.rows(); }
  Eigen::Index n_metrics() const { return X.cols(); }

  // N x M slice of X for one experiment
  auto experiment_block(Eigen::Index j) const { return X.middleRows(j * n_buckets(), n_buckets()); }

  Eigen::Index metric_index(std::string_view id) const {
    for (std::size_t m = 0; m < metric_ids.size(); ++m) {
      if (metric_ids[m] == id) return static_cast<Eigen::Index>(m);
    }
    fail(Errc::unknown_metric, "metric '" + std::string(id) + "' not in panel");
  }

  ExperimentPanel select_metrics(const std::vector<std::string>& subset) const {
    if (subset.empty()) fail(Errc::invalid_config, "metric subset is empty");
    ExperimentPanel out;
    out.experiment_ids = experiment_ids;
    out.bucket_ids = bucket_ids;
    out.metric_ids = subset;
    out.Y = Y;
    out.registry = registry.subset(subset);
    out.X.resize(X.rows(), static_cast<Eigen::Index>(subset.size()));
    for (std::size_t m = 0; m < subset.size(); ++m) {
      out.X.col(static_cast<Eigen::Index>(m)) = X.col(metric_index(subset[m]));
    }
    return out;
  }
};

struct ValidationIssue {
  std::string code;
  std::string experiment_id;
  std::string metric_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  std::array<Eigen::Index, 3> panel_shape{0, 0, 0};  // (J, N, M)

  bool ok() const { return errors.empty(); }
};

namespace detail {

// Numeric-aware ordering for bucket labels: all-digit ids sort by value so
// that "2" < "10"; everything else falls back to lexicographic order.
inline bool bucket_id_less(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s) -> std::optional<std::uint64_t> {
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  };
  const auto na = numeric(a);
  const auto nb = numeric(b);
  if (na && nb) {
    if (*na != *nb) return *na < *nb;
    return a < b;
  }
  if (na != nb) return na.has_value();  // numeric ids before non-numeric
  return a < b;
}

struct RawCell {
  std::string experiment_id;
  std::string bucket_id;
  std::string metric_id;
  double pct_delta = 0.0;
};

inline void push_issue(ValidationReport& report, Errc code, const std::string& experiment_id,
                       const std::string& metric_id, const std::string& message) {
  report.errors.push_back({errc_name(code), experiment_id, metric_id, message});
}

}  // namespace detail

// Parses either input schema into raw delta cells, collecting structural
// problems instead of throwing:
//   arm-level:   experiment_id,bucket_id,metric_id,treatment_value,control_value
//   delta-level: experiment_id,bucket_id,metric_id,pct_delta
inline std::vector<detail::RawCell> parse_panel_cells(const std::filesystem::path& path,
                                                      ValidationReport& report) {
  CsvTable table = read_csv(path);
  const int c_exp = table.column("experiment_id");
  const int c_bucket = table.column("bucket_id");
  const int c_metric = table.column("metric_id");
  const int c_delta = table.column("pct_delta");
  const int c_treat = table.column("treatment_value");
  const int c_ctrl = table.column("control_value");

  const bool delta_schema = c_exp >= 0 && c_bucket >= 0 && c_metric >= 0 && c_delta >= 0;
  const bool arm_schema = c_exp >= 0 && c_bucket >= 0 && c_metric >= 0 && c_treat >= 0 && c_ctrl >= 0;
  if (!delta_schema && !arm_schema) {
    fail(Errc::bad_file, "'" + path.string() +
                             "' matches neither the delta-level nor the arm-level schema");
  }

  std::vector<detail::RawCell> cells;
  cells.reserve(table.rows.size());
  std::size_t line_no = 1;
  for (const auto& row : table.rows) {
    ++line_no;
    const std::string context = path.string() + ":" + std::to_string(line_no);
    detail::RawCell cell;
    cell.experiment_id = row[static_cast<std::size_t>(c_exp)];
    cell.bucket_id = row[static_cast<std::size_t>(c_bucket)];
    cell.metric_id = row[static_cast<std::size_t>(c_metric)];
    if (delta_schema) {
      cell.pct_delta = parse_double(row[static_cast<std::size_t>(c_delta)], context);
    } else {
      const double treat = parse_double(row[static_cast<std::size_t>(c_treat)], context);
      const double ctrl = parse_double(row[static_cast<std::size_t>(c_ctrl)], context);
      if (ctrl == 0.0) {
        detail::push_issue(report, Errc::zero_control, cell.experiment_id, cell.metric_id,
                           context + ": control value is zero");
        continue;
      }
      cell.pct_delta = 100.0 * (treat - ctrl) / ctrl;
    }
    if (!std::isfinite(cell.pct_delta)) {
      detail::push_issue(report, Errc::bad_file, cell.experiment_id, cell.metric_id,
                         context + ": non-finite value");
      continue;
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

// Assembles raw cells into a dense panel, applying registry signs. Returns
// nothing when any structural error was recorded.
inline std::optional<ExperimentPanel> assemble_panel(const std::vector<detail::RawCell>& cells,
                                                     const MetricRegistry& registry,
                                                     ValidationReport& report) {
  const std::vector<std::string>& aux_ids = registry.auxiliary_ids();
  const std::string& ns_long = registry.north_star_long_id();

  std::vector<std::string> experiments;                       // first-appearance order
  std::unordered_map<std::string, std::size_t> exp_index;
  for (const auto& cell : cells) {
    if (exp_index.emplace(cell.experiment_id, experiments.size()).second) {
      experiments.push_back(cell.experiment_id);
    }
  }

  // (experiment, metric, bucket) -> delta, plus per-experiment bucket sets
  std::vector<std::map<std::string, std::map<std::string, double, decltype(&detail::bucket_id_less)>>>
      values(experiments.size());
  std::vector<std::set<std::string, decltype(&detail::bucket_id_less)>> buckets;
  buckets.reserve(experiments.size());
  for (std::size_t j = 0; j < experiments.size(); ++j) {
    buckets.emplace_back(&detail::bucket_id_less);
  }

  for (const auto& cell : cells) {
    if (!registry.has(cell.metric_id)) {
      detail::push_issue(report, Errc::unknown_metric, cell.experiment_id, cell.metric_id,
                         "metric not present in registry");
      continue;
    }
    const std::size_t j = exp_index[cell.experiment_id];
    auto& per_metric = values[j];
    auto it = per_metric.find(cell.metric_id);
    if (it == per_metric.end()) {
      it = per_metric
               .emplace(cell.metric_id,
                        std::map<std::string, double, decltype(&detail::bucket_id_less)>(
                            &detail::bucket_id_less))
               .first;
    }
    if (!it->second.emplace(cell.bucket_id, cell.pct_delta).second) {
      detail::push_issue(report, Errc::duplicate_cell, cell.experiment_id, cell.metric_id,
                         "duplicate cell for bucket '" + cell.bucket_id + "'");
    }
    buckets[j].insert(cell.bucket_id);
  }

  // Uniform bucket count across experiments keeps the panel rectangular.
  std::size_t n_buckets = 0;
  for (std::size_t j = 0; j < experiments.size(); ++j) {
    const std::size_t n = buckets[j].size();
    if (j == 0) n_buckets = n;
    if (n < 3) {
      detail::push_issue(report, Errc::invalid_config, experiments[j], "",
                         "BucketCountTooSmall: experiment has " + std::to_string(n) +
                             " buckets, need at least 3");
    } else if (n != n_buckets) {
      detail::push_issue(report, Errc::invalid_config, experiments[j], "",
                         "BucketCountMismatch: experiment has " + std::to_string(n) +
                             " buckets, expected " + std::to_string(n_buckets));
    }
  }

  std::vector<std::string> all_metrics = aux_ids;
  all_metrics.push_back(ns_long);
  for (std::size_t j = 0; j < experiments.size(); ++j) {
    for (const auto& metric : all_metrics) {
      auto mit = values[j].find(metric);
      for (const auto& bucket : buckets[j]) {
        if (mit == values[j].end() || mit->second.find(bucket) == mit->second.end()) {
          detail::push_issue(report, Errc::missing_cell, experiments[j], metric,
                             "no value for bucket '" + bucket + "'");
        }
      }
    }
  }

  report.panel_shape = {static_cast<Eigen::Index>(experiments.size()),
                        static_cast<Eigen::Index>(n_buckets),
                        static_cast<Eigen::Index>(aux_ids.size())};
  if (!report.errors.empty()) return std::nullopt;
  if (experiments.empty()) {
    detail::push_issue(report, Errc::empty_input, "", "", "no data rows");
    return std::nullopt;
  }

  ExperimentPanel panel;
  panel.registry = registry;
  panel.experiment_ids = experiments;
  panel.metric_ids = aux_ids;
  const auto J = static_cast<Eigen::Index>(experiments.size());
  const auto N = static_cast<Eigen::Index>(n_buckets);
  const auto M = static_cast<Eigen::Index>(aux_ids.size());
  panel.X.resize(N * J, M);
  panel.Y.resize(N, J);
  panel.bucket_ids.resize(experiments.size());

  const int y_sign = registry.sign_of(ns_long);
  for (Eigen::Index j = 0; j < J; ++j) {
    auto& labels = panel.bucket_ids[static_cast<std::size_t>(j)];
    labels.assign(buckets[static_cast<std::size_t>(j)].begin(),
                  buckets[static_cast<std::size_t>(j)].end());
    const auto& per_metric = values[static_cast<std::size_t>(j)];
    for (Eigen::Index m = 0; m < M; ++m) {
      const std::string& id = aux_ids[static_cast<std::size_t>(m)];
      const int sign = registry.sign_of(id);
      const auto& col = per_metric.at(id);
      for (Eigen::Index i = 0; i < N; ++i) {
        panel.X(j * N + i, m) = sign * col.at(labels[static_cast<std::size_t>(i)]);
      }
    }
    const auto& ycol = per_metric.at(ns_long);
    for (Eigen::Index i = 0; i < N; ++i) {
      panel.Y(i, j) = y_sign * ycol.at(labels[static_cast<std::size_t>(i)]);
    }
  }
  return panel;
}

// Collecting loader: all structural problems end up in the report.
inline std::optional<ExperimentPanel> load_panel_collect(const std::filesystem::path& data_path,
                                                         const std::filesystem::path& registry_path,
                                                         ValidationReport& report) {
  MetricRegistry registry = MetricRegistry::load(registry_path);
  const auto cells = parse_panel_cells(data_path, report);
  return assemble_panel(cells, registry, report);
}

// Throwing loader for programmatic use.
inline ExperimentPanel load_panel(const std::filesystem::path& data_path,
                                  const std::filesystem::path& registry_path) {
  ValidationReport report;
  auto panel = load_panel_collect(data_path, registry_path, report);
  if (!panel) {
    const auto& first = report.errors.front();
    std::string msg = first.message;
    if (!first.experiment_id.empty()) msg += " (experiment " + first.experiment_id + ")";
    if (report.errors.size() > 1) {
      msg += " [+" + std::to_string(report.errors.size() - 1) + " more errors]";
    }
    fail(Errc::bad_file, first.code + ": " + msg);
  }
  return *panel;
}

// In-memory invariant check; never mutates the panel.
inline ValidationReport validate_panel(const ExperimentPanel& panel) {
  ValidationReport report;
  report.panel_shape = {panel.n_experiments(), panel.n_buckets(), panel.n_metrics()};
  if (panel.n_buckets() < 3) {
    detail::push_issue(report, Errc::invalid_config, "", "",
                       "BucketCountTooSmall: panel has " + std::to_string(panel.n_buckets()) +
                           " buckets per experiment, need at least 3");
  }
  if (panel.n_experiments() < 1) {
    detail::push_issue(report, Errc::empty_input, "", "", "panel has no experiments");
  }
  if (panel.n_metrics() < 1) {
    detail::push_issue(report, Errc::empty_input, "", "", "panel has no auxiliary metrics");
  }
  if (panel.X.rows() != panel.n_buckets() * panel.n_experiments() ||
      panel.Y.cols() != panel.n_experiments()) {
    detail::push_issue(report, Errc::dimension_mismatch, "", "", "X/Y shapes disagree");
  }
  if (!panel.X.allFinite()) {
    detail::push_issue(report, Errc::missing_cell, "", "", "X contains non-finite cells");
  }
  if (!panel.Y.allFinite()) {
    detail::push_issue(report, Errc::missing_cell, "", panel.registry.north_star_long_id(),
                       "Y contains non-finite cells");
  }
  return report;
}

// Delta-level CSV with registry signs undone, so reloading against the same
// registry reproduces the stored panel bit-for-bit.
inline std::string panel_to_delta_csv(const ExperimentPanel& panel) {
  std::string out = "experiment_id,bucket_id,metric_id,pct_delta\n";
  const Eigen::Index N = panel.n_buckets();
  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) {
    const std::string& exp = panel.experiment_ids[static_cast<std::size_t>(j)];
    const auto& labels = panel.bucket_ids[static_cast<std::size_t>(j)];
    for (Eigen::Index m = 0; m < panel.n_metrics(); ++m) {
      const std::string& id = panel.metric_ids[static_cast<std::size_t>(m)];
      const int sign = panel.registry.sign_of(id);
      for (Eigen::Index i = 0; i < N; ++i) {
        out += exp;
        out += ',';
        out += labels[static_cast<std::size_t>(i)];
        out += ',';
        out += id;
        out += ',';
        out += format_double(sign * panel.X(j * N + i, m));
        out += '\n';
      }
    }
    const std::string& yid = panel.registry.north_star_long_id();
    const int ysign = panel.registry.sign_of(yid);
    for (Eigen::Index i = 0; i < N; ++i) {
      out += exp;
      out += ',';
      out += labels[static_cast<std::size_t>(i)];
      out += ',';
      out += yid;
      out += ',';
      out += format_double(ysign * panel.Y(i, j));
      out += '\n';
    }
  }
  return out;
}

}  // namespace proxyforge
