#pragma once

// Contingency classification of experiments by (proxy, north star) test
// outcomes, and the proxy score: (detections - mistakes) divided by the
// number of experiments where the north star is significant.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "proxyforge/data_model.hpp"
#include "proxyforge/error.hpp"
#include "proxyforge/proxy.hpp"
#include "proxyforge/stats.hpp"

namespace proxyforge {

struct ContingencyLabel {
  int proxy_direction = 0;      // -1, 0, +1
  int northstar_direction = 0;  // -1, 0, +1
};

// Directions come straight from the two-sided tests: 0 iff not significant,
// otherwise the sign of the mean. Both summaries must share the same alpha.
inline ContingencyLabel classify(const MetricSummary& proxy_summary,
                                 const MetricSummary& ns_summary) {
  return ContingencyLabel{proxy_summary.direction, ns_summary.direction};
}

struct ScoreReport {
  std::int64_t detections = 0;
  std::int64_t mistakes = 0;
  std::int64_t ns_significant = 0;
  std::int64_t total = 0;
  // table[proxy_direction + 1][northstar_direction + 1]
  std::array<std::array<std::int64_t, 3>, 3> table{};
  std::optional<double> proxy_score;  // null when no experiment has a significant north star
  std::optional<double> recall;
  std::optional<double> precision;  // null when detections + mistakes == 0
  double binary_sensitivity_proxy = 0.0;
};

inline ScoreReport score(const std::vector<ContingencyLabel>& labels) {
  if (labels.empty()) fail(Errc::empty_input, "no labels to score");
  ScoreReport report;
  report.total = static_cast<std::int64_t>(labels.size());
  std::int64_t proxy_significant = 0;
  for (const auto& label : labels) {
    report.table[static_cast<std::size_t>(label.proxy_direction + 1)]
                [static_cast<std::size_t>(label.northstar_direction + 1)] += 1;
    if (label.northstar_direction != 0) ++report.ns_significant;
    if (label.proxy_direction != 0) ++proxy_significant;
    if (label.proxy_direction != 0 && label.northstar_direction != 0) {
      if (label.proxy_direction == label.northstar_direction) {
        ++report.detections;
      } else {
        ++report.mistakes;
      }
    }
  }
  report.binary_sensitivity_proxy =
      static_cast<double>(proxy_significant) / static_cast<double>(report.total);
  if (report.ns_significant > 0) {
    report.proxy_score = static_cast<double>(report.detections - report.mistakes) /
                         static_cast<double>(report.ns_significant);
    report.recall =
        static_cast<double>(report.detections) / static_cast<double>(report.ns_significant);
  }
  if (report.detections + report.mistakes > 0) {
    report.precision = static_cast<double>(report.detections) /
                       static_cast<double>(report.detections + report.mistakes);
  }
  return report;
}

// Mean long-term north-star effect among NS-neutral experiments, split by
// the proxy's direction. Empty groups report null.
struct NeutralNsBreakdown {
  std::array<std::optional<double>, 3> mean_by_direction;  // index = direction + 1
  std::array<std::int64_t, 3> count_by_direction{};
};

inline NeutralNsBreakdown neutral_ns_breakdown(const std::vector<ContingencyLabel>& labels,
                                               const Eigen::VectorXd& ns_means) {
  if (static_cast<Eigen::Index>(labels.size()) != ns_means.size()) {
    fail(Errc::length_mismatch, "labels and north-star means differ in length");
  }
  std::array<double, 3> sums{};
  NeutralNsBreakdown out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j].northstar_direction != 0) continue;
    const auto g = static_cast<std::size_t>(labels[j].proxy_direction + 1);
    sums[g] += ns_means(static_cast<Eigen::Index>(j));
    out.count_by_direction[g] += 1;
  }
  for (std::size_t g = 0; g < 3; ++g) {
    if (out.count_by_direction[g] > 0) {
      out.mean_by_direction[g] = sums[g] / static_cast<double>(out.count_by_direction[g]);
    }
  }
  return out;
}

// Per-experiment labels for a proxy against the panel's long-term north star.
inline std::vector<ContingencyLabel> classify_panel(const ExperimentPanel& panel,
                                                    const WeightVector& w,
                                                    const SensitivityConfig& cfg) {
  const Eigen::MatrixXd Z = proxy_series(panel, w);
  const double tau =
      students_t_two_sided_quantile(cfg.alpha, static_cast<double>(panel.n_buckets() - 1));
  std::vector<ContingencyLabel> labels;
  labels.reserve(static_cast<std::size_t>(panel.n_experiments()));
  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) {
    const MetricSummary proxy_summary = summarize_series(Z.col(j), tau);
    const MetricSummary ns_summary = summarize_series(panel.Y.col(j), tau);
    labels.push_back(classify(proxy_summary, ns_summary));
  }
  return labels;
}

inline ScoreReport score_weights(const ExperimentPanel& panel, const WeightVector& w,
                                 const SensitivityConfig& cfg) {
  return score(classify_panel(panel, w, cfg));
}

}  // namespace proxyforge
