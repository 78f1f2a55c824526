#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "proxyforge/rng.hpp"
#include "proxyforge/scoring.hpp"
#include "proxyforge/simulator.hpp"

using namespace proxyforge;

namespace {

MetricSummary summary(double t_value, double mean, double tau = 1.98) {
  MetricSummary s;
  s.mean = mean;
  s.se = 1.0;
  s.t = t_value;
  s.significant = std::abs(t_value) > tau;
  s.direction = s.significant ? (mean > 0 ? 1 : -1) : 0;
  return s;
}

std::vector<ContingencyLabel> make_labels(int detections, int mistakes, int ns_only,
                                          int neutral) {
  std::vector<ContingencyLabel> labels;
  for (int i = 0; i < detections; ++i) labels.push_back({+1, +1});
  for (int i = 0; i < mistakes; ++i) labels.push_back({+1, -1});
  for (int i = 0; i < ns_only; ++i) labels.push_back({0, +1});
  for (int i = 0; i < neutral; ++i) labels.push_back({0, 0});
  return labels;
}

}  // namespace

TEST_CASE("classification by significance and sign") {
  CHECK(classify(summary(3.1, 0.5), summary(2.5, 0.2)).proxy_direction == 1);
  CHECK(classify(summary(3.1, 0.5), summary(2.5, 0.2)).northstar_direction == 1);

  const auto mistake = classify(summary(3.1, 0.5), summary(-2.5, -0.2));
  CHECK(mistake.proxy_direction == 1);
  CHECK(mistake.northstar_direction == -1);

  const auto neutral_proxy = classify(summary(0.5, 0.1), summary(2.5, 0.2));
  CHECK(neutral_proxy.proxy_direction == 0);
  CHECK(neutral_proxy.northstar_direction == 1);
}

TEST_CASE("proxy score worked examples") {
  // 72 detections, 0 mistakes, 100 NS-significant
  const auto report = score(make_labels(72, 0, 28, 10));
  CHECK(report.detections == 72);
  CHECK(report.mistakes == 0);
  CHECK(report.ns_significant == 100);
  CHECK(report.proxy_score.value() == doctest::Approx(0.72));
  CHECK(report.recall.value() == doctest::Approx(0.72));
  CHECK(report.precision.value() == doctest::Approx(1.0));

  // 38 detections and 2 mistakes out of 100 NS-significant
  const auto mixed = score(make_labels(38, 2, 60, 0));
  CHECK(mixed.proxy_score.value() == doctest::Approx(0.36));

  // no NS-significant experiment: score undefined, counts intact
  const auto degenerate = score(make_labels(0, 0, 0, 7));
  CHECK_FALSE(degenerate.proxy_score.has_value());
  CHECK_FALSE(degenerate.recall.has_value());
  CHECK(degenerate.total == 7);
  CHECK(degenerate.table[1][1] == 7);

  CHECK_THROWS_AS(score({}), Error);
}

TEST_CASE("proxy score bounds and identities under random labels") {
  SplitMix64 gen(314);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(gen.next() % 40);
    std::vector<ContingencyLabel> labels;
    for (int i = 0; i < n; ++i) {
      labels.push_back({static_cast<int>(gen.next() % 3) - 1,
                        static_cast<int>(gen.next() % 3) - 1});
    }
    const auto report = score(labels);
    if (report.proxy_score) {
      CHECK(*report.proxy_score >= -1.0);
      CHECK(*report.proxy_score <= 1.0);
      // proxy_score = recall - mistakes / ns_significant
      CHECK(*report.proxy_score ==
            doctest::Approx(*report.recall - static_cast<double>(report.mistakes) /
                                                 static_cast<double>(report.ns_significant)));
    }
    // permutation invariance
    auto shuffled = labels;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[gen.next() % i]);
    }
    const auto report2 = score(shuffled);
    CHECK(report2.detections == report.detections);
    CHECK(report2.mistakes == report.mistakes);
    CHECK(report2.proxy_score == report.proxy_score);
  }
}

TEST_CASE("neutral north-star breakdown") {
  std::vector<ContingencyLabel> labels{{1, 0}, {1, 0}, {-1, 0}, {0, 1}};
  Eigen::Vector4d means(0.1, 0.3, -0.5, 9.0);
  const auto breakdown = neutral_ns_breakdown(labels, means);
  CHECK(breakdown.mean_by_direction[2].value() == doctest::Approx(0.2));
  CHECK(breakdown.mean_by_direction[0].value() == doctest::Approx(-0.5));
  CHECK_FALSE(breakdown.mean_by_direction[1].has_value());
  CHECK(breakdown.count_by_direction[2] == 2);

  // no NS-neutral experiments: all groups null
  std::vector<ContingencyLabel> none{{1, 1}, {0, -1}};
  Eigen::Vector2d m2(1.0, 2.0);
  const auto empty = neutral_ns_breakdown(none, m2);
  for (const auto& group : empty.mean_by_direction) CHECK_FALSE(group.has_value());

  CHECK_THROWS_AS(neutral_ns_breakdown(labels, m2), Error);
}

TEST_CASE("positive proxy group sits above negative group when effects correlate") {
  auto cfg = preset("insensitive_ns", 900, 50, 6);
  cfg.seed = 333;
  const auto panel = simulate_panel(cfg).first;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(6);
  w(1) = w(2) = 0.5;  // informative metrics
  const auto labels = classify_panel(panel, WeightVector(w), {});
  Eigen::VectorXd y_means(panel.n_experiments());
  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) y_means(j) = panel.Y.col(j).mean();
  const auto breakdown = neutral_ns_breakdown(labels, y_means);
  REQUIRE(breakdown.mean_by_direction[2].has_value());
  REQUIRE(breakdown.mean_by_direction[0].has_value());
  CHECK(*breakdown.mean_by_direction[2] > *breakdown.mean_by_direction[0]);
}

TEST_CASE("score_weights composes classification over a panel") {
  auto cfg = preset("insensitive_ns", 60, 20, 4);
  cfg.seed = 5;
  const auto panel = simulate_panel(cfg).first;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
  const auto report = score_weights(panel, WeightVector(w), {});
  CHECK(report.total == 60);
  CHECK(report.detections + report.mistakes <= report.ns_significant);
  CHECK(report.binary_sensitivity_proxy >= 0.0);
  CHECK(report.binary_sensitivity_proxy <= 1.0);
}
