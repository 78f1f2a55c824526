#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "proxyforge/simulator.hpp"
#include "proxyforge/stats.hpp"

using namespace proxyforge;

TEST_CASE("simulated panels are deterministic per seed and across threads") {
  auto cfg = preset("insensitive_ns", 12, 10, 4);
  cfg.seed = 2025;
  const auto [a, ta] = simulate_panel(cfg, 1);
  const auto [b, tb] = simulate_panel(cfg, 1);
  CHECK((a.X.array() == b.X.array()).all());
  CHECK((a.Y.array() == b.Y.array()).all());
  CHECK((ta.true_effects.array() == tb.true_effects.array()).all());

  const auto [c, tc] = simulate_panel(cfg, 4);
  CHECK((a.X.array() == c.X.array()).all());
  CHECK((a.Y.array() == c.Y.array()).all());

  cfg.seed = 2026;
  const auto [d, td] = simulate_panel(cfg, 1);
  CHECK_FALSE((a.X.array() == d.X.array()).all());
}

TEST_CASE("shapes and registry of a simulated panel") {
  auto cfg = preset("short_long_divergence", 5, 7, 3);
  cfg.seed = 1;
  const auto [panel, truth] = simulate_panel(cfg);
  CHECK(panel.n_experiments() == 5);
  CHECK(panel.n_buckets() == 7);
  CHECK(panel.n_metrics() == 3);
  CHECK(truth.true_effects.rows() == 5);
  CHECK(truth.true_effects.cols() == 4);
  CHECK(panel.metric_ids.front() == "ns_short");
  CHECK(panel.registry.north_star_long_id() == "ns_long");
  CHECK(validate_panel(panel).ok());
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(preset("no_such_preset"), Error);

  auto cfg = preset("insensitive_ns", 5, 5, 2);
  cfg.effect_cov(0, 1) = 0.9;  // asymmetric
  CHECK_THROWS_AS(simulate_panel(cfg), Error);

  auto cfg2 = preset("insensitive_ns", 5, 5, 2);
  cfg2.effect_cov.setIdentity();
  cfg2.effect_cov(1, 1) = -0.5;  // not PSD
  CHECK_THROWS_AS(simulate_panel(cfg2), Error);

  auto cfg3 = preset("insensitive_ns", 5, 5, 2);
  cfg3.buckets = 2;
  CHECK_THROWS_AS(simulate_panel(cfg3), Error);
}

TEST_CASE("tiny preset is valid at the boundary sizes") {
  auto cfg = preset("insensitive_ns", 3, 3, 1);
  cfg.seed = 7;
  const auto [panel, truth] = simulate_panel(cfg);
  CHECK(panel.n_experiments() == 3);
  CHECK(panel.n_buckets() == 3);
  CHECK(panel.n_metrics() == 1);
}

TEST_CASE("singular-but-PSD covariances are handled by eigenvalue clipping") {
  SimConfig cfg;
  cfg.experiments = 200;
  cfg.buckets = 10;
  cfg.metrics = 1;
  cfg.seed = 31;
  Eigen::Vector2d loading(1.0, 1.0);
  cfg.effect_cov = loading * loading.transpose();  // rank 1
  cfg.effect_mean = Eigen::Vector2d(0.0, 0.0);
  cfg.bucket_noise_sd = Eigen::Vector2d(0.5, 0.5);
  const auto [panel, truth] = simulate_panel(cfg);
  // both columns share one factor: true effects identical
  CHECK((truth.true_effects.col(0) - truth.true_effects.col(1)).cwiseAbs().maxCoeff() < 1e-12);

  SimConfig zero = cfg;
  zero.effect_cov.setZero();
  const auto [p2, t2] = simulate_panel(zero);
  CHECK(t2.true_effects.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("average jackknife se tracks sigma/sqrt(N) at N=100") {
  SimConfig cfg;
  cfg.experiments = 300;
  cfg.buckets = 100;
  cfg.metrics = 1;
  cfg.seed = 99;
  cfg.effect_mean = Eigen::Vector2d(0.0, 0.0);
  cfg.effect_cov = Eigen::Matrix2d::Zero();
  cfg.bucket_noise_sd = Eigen::Vector2d(2.0, 3.0);
  const auto [panel, truth] = simulate_panel(cfg);
  const auto table = summarize(panel, {});
  double se_sum = 0.0;
  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) se_sum += table.at(j, 0).se;
  const double mean_se = se_sum / static_cast<double>(panel.n_experiments());
  CHECK(mean_se == doctest::Approx(2.0 / 10.0).epsilon(0.05));
}

TEST_CASE("uncoupled metric shows no correlation with the north star") {
  SimConfig cfg;
  cfg.experiments = 500;
  cfg.buckets = 20;
  cfg.metrics = 1;
  cfg.seed = 12;
  cfg.effect_mean = Eigen::Vector2d(0.0, 0.0);
  cfg.effect_cov = Eigen::Vector2d(1.0, 1.0).asDiagonal();  // zero cross-covariance
  cfg.bucket_noise_sd = Eigen::Vector2d(1.0, 1.0);
  const auto [panel, truth] = simulate_panel(cfg);
  const auto rows = sensitivity_report(panel, {});
  CHECK(std::abs(rows[0].correlation) <= 0.12);
}

TEST_CASE("insensitive_ns preset: weak north star, strong auxiliaries") {
  auto cfg = preset("insensitive_ns", 300, 100, 10);
  cfg.seed = 46;
  const auto [panel, truth] = simulate_panel(cfg);
  const auto rows = sensitivity_report(panel, {});
  CHECK(rows[0].metric_id == "ns_short");
  CHECK(rows[0].binary_sensitivity < 0.2);
  double best_aux = 0.0;
  for (std::size_t m = 1; m < rows.size(); ++m) {
    best_aux = std::max(best_aux, rows[m].binary_sensitivity);
  }
  CHECK(best_aux > 0.6);
}

TEST_CASE("short_long_divergence preset: opposite short-term north star") {
  auto cfg = preset("short_long_divergence", 300, 100, 6);
  cfg.seed = 11;
  const auto [panel, truth] = simulate_panel(cfg);
  const auto rows = sensitivity_report(panel, {});
  CHECK(rows[0].correlation < 0.0);
  double best_aux = -1.0;
  for (std::size_t m = 1; m < rows.size(); ++m) {
    best_aux = std::max(best_aux, rows[m].correlation);
  }
  CHECK(best_aux > 0.5);
}

TEST_CASE("ground truth CSV lists every (experiment, metric) true effect") {
  auto cfg = preset("insensitive_ns", 4, 3, 2);
  cfg.seed = 5;
  const auto [panel, truth] = simulate_panel(cfg);
  const std::string csv = ground_truth_to_csv(truth, panel);
  // header + J * (M + 1) rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 3);
  CHECK(csv.find("ns_long") != std::string::npos);
}
