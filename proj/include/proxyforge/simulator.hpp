#pragma once

// Seeded synthetic experiment panels with known ground truth. Per experiment
// j the true effects theta_j (M auxiliary columns plus the long-term north
// star) are drawn from a multivariate normal; bucket-level observations add
// independent Gaussian sampling noise per metric. Generation is keyed by
// per-experiment RNG substreams, so a panel depends only on its config and
// not on the thread count.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proxyforge/data_model.hpp"
#include "proxyforge/error.hpp"
#include "proxyforge/parallel.hpp"
#include "proxyforge/rng.hpp"

namespace proxyforge {

enum class Scenario { custom, insensitive_ns, short_long_divergence };

inline std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::custom: return "custom";
    case Scenario::insensitive_ns: return "insensitive_ns";
    case Scenario::short_long_divergence: return "short_long_divergence";
  }
  return "custom";
}

struct SimConfig {
  Eigen::Index experiments = 0;       // J
  Eigen::Index buckets = 0;           // N per experiment
  Eigen::Index metrics = 0;           // M auxiliary columns (incl. short-term NS for presets)
  Eigen::VectorXd effect_mean;        // length M+1, last entry = long-term NS
  Eigen::MatrixXd effect_cov;         // (M+1) x (M+1), PSD
  Eigen::VectorXd bucket_noise_sd;    // length M+1
  Scenario scenario = Scenario::custom;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Eigen::MatrixXd true_effects;  // J x (M+1), last column = long-term NS
};

namespace detail {

inline void validate_sim_config(const SimConfig& cfg) {
  if (cfg.experiments < 3 || cfg.buckets < 3 || cfg.metrics < 1) {
    fail(Errc::invalid_config, "need J >= 3, N >= 3, M >= 1");
  }
  const Eigen::Index k = cfg.metrics + 1;
  if (cfg.effect_mean.size() != k || cfg.bucket_noise_sd.size() != k ||
      cfg.effect_cov.rows() != k || cfg.effect_cov.cols() != k) {
    fail(Errc::invalid_config, "effect_mean, bucket_noise_sd and effect_cov must cover M+1 metrics");
  }
  if ((cfg.bucket_noise_sd.array() < 0.0).any()) {
    fail(Errc::invalid_config, "bucket noise standard deviations must be nonnegative");
  }
  if (!cfg.effect_cov.isApprox(cfg.effect_cov.transpose(), 1e-12)) {
    fail(Errc::invalid_covariance, "effect covariance is not symmetric");
  }
}

// Factor B with B * B^T = effect_cov. Cholesky when the matrix is positive
// definite; PSD-but-singular matrices go through an eigendecomposition with
// negative eigenvalues (within a 1e-8 relative tolerance) clipped to zero.
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    fail(Errc::invalid_covariance, "eigendecomposition of effect covariance failed");
  }
  const Eigen::VectorXd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -1e-8 * scale) {
    fail(Errc::invalid_covariance, "effect covariance is not positive semidefinite");
  }
  return eig.eigenvectors() * values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace detail

// Registry for a simulated panel: metric 0 is the short-term north star for
// scenario presets, every other column is a plain auxiliary metric; signs are
// all +1 ("up is good" by construction).
inline MetricRegistry simulated_registry(const SimConfig& cfg) {
  std::vector<MetricEntry> entries;
  const bool preset = cfg.scenario != Scenario::custom;
  for (Eigen::Index m = 0; m < cfg.metrics; ++m) {
    MetricEntry e;
    if (preset && m == 0) {
      e.metric_id = "ns_short";
      e.role = MetricRole::north_star_short;
      e.display_name = "short-term north star";
    } else {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "aux_%02d", static_cast<int>(m) + 1);
      e.metric_id = buf;
      e.role = MetricRole::auxiliary;
      e.display_name = std::string("auxiliary metric ") + std::to_string(m + 1);
    }
    entries.push_back(std::move(e));
  }
  MetricEntry y;
  y.metric_id = "ns_long";
  y.role = MetricRole::north_star_long;
  y.display_name = "long-term north star";
  entries.push_back(std::move(y));
  return MetricRegistry::from_entries(std::move(entries));
}

inline std::pair<ExperimentPanel, GroundTruth> simulate_panel(const SimConfig& cfg,
                                                              int threads = 1) {
  detail::validate_sim_config(cfg);
  const Eigen::Index J = cfg.experiments;
  const Eigen::Index N = cfg.buckets;
  const Eigen::Index M = cfg.metrics;
  const Eigen::Index K = M + 1;
  const Eigen::MatrixXd factor = detail::covariance_factor(cfg.effect_cov);

  ExperimentPanel panel;
  panel.registry = simulated_registry(cfg);
  panel.metric_ids = panel.registry.auxiliary_ids();
  panel.X.resize(N * J, M);
  panel.Y.resize(N, J);
  panel.experiment_ids.resize(static_cast<std::size_t>(J));
  panel.bucket_ids.resize(static_cast<std::size_t>(J));

  std::vector<std::string> bucket_labels(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "b%05d", static_cast<int>(i));
    bucket_labels[static_cast<std::size_t>(i)] = buf;
  }

  GroundTruth truth;
  truth.true_effects.resize(J, K);

  parallel_for_ranges(J, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t j = begin; j < end; ++j) {
      GaussianStream gauss(substream(cfg.seed, static_cast<std::uint64_t>(j)));

      Eigen::VectorXd z(K);
      for (Eigen::Index k = 0; k < K; ++k) z(k) = gauss.next();
      const Eigen::VectorXd theta = cfg.effect_mean + factor * z;
      truth.true_effects.row(j) = theta.transpose();

      for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index k = 0; k < K; ++k) {
          const double value = theta(k) + cfg.bucket_noise_sd(k) * gauss.next();
          if (k < M) {
            panel.X(j * N + i, k) = value;
          } else {
            panel.Y(i, j) = value;
          }
        }
      }

      char buf[24];
      std::snprintf(buf, sizeof(buf), "exp%06d", static_cast<int>(j) + 1);
      panel.experiment_ids[static_cast<std::size_t>(j)] = buf;
      panel.bucket_ids[static_cast<std::size_t>(j)] = bucket_labels;
    }
  });

  return {std::move(panel), std::move(truth)};
}

// Scenario presets. Effects live on two latent factors: theta_Y, the
// long-term north-star effect, which drives every column through a loading
// a_m, and an "activity" factor orthogonal to theta_Y that only the local
// tail of the ladder responds to. On top of that each column carries
// independent idiosyncratic effect noise e_m and bucket-level sampling
// noise sigma_m. Exact constants are artifact-defined (see the config
// reference in the README), not taken from any dataset.
//
//   insensitive_ns        metric 0 tracks theta_Y almost perfectly but has
//                         bucket noise so large that it is rarely
//                         significant. The first half of the ladder are
//                         informative metrics: moderate loadings, shrinking
//                         bucket noise, correlation suppressed by
//                         idiosyncratic effects. The second half are local
//                         activity metrics: tiny bucket noise and large
//                         activity-factor loadings, extremely sensitive but
//                         nearly uninformative about the north star. Good
//                         proxies must concentrate weight on the
//                         informative half.
//   short_long_divergence metric 0 is anti-loaded (a < 0): its short-term
//                         movement opposes the long-term north star, while
//                         the auxiliary columns stay positively loaded.
inline SimConfig preset(std::string_view name, Eigen::Index experiments = 300,
                        Eigen::Index buckets = 100, Eigen::Index metrics = 10) {
  Scenario scenario;
  if (name == "insensitive_ns") {
    scenario = Scenario::insensitive_ns;
  } else if (name == "short_long_divergence") {
    scenario = Scenario::short_long_divergence;
  } else {
    fail(Errc::unknown_preset, "unknown preset '" + std::string(name) + "'");
  }
  if (metrics < 1) fail(Errc::invalid_config, "presets need at least one metric");

  SimConfig cfg;
  cfg.scenario = scenario;
  cfg.experiments = experiments;
  cfg.buckets = buckets;
  cfg.metrics = metrics;
  cfg.seed = 0;

  const Eigen::Index K = metrics + 1;
  Eigen::VectorXd loading(K), activity(K), own_idio(K), noise_sd(K), mean(K);

  const bool divergence = scenario == Scenario::short_long_divergence;
  const double mu_y = divergence ? 0.4 : 0.6;
  const double sd_y = 1.0;

  // Long-term north star: the theta_Y factor itself.
  loading(K - 1) = 1.0;
  activity(K - 1) = 0.0;
  own_idio(K - 1) = 0.0;
  noise_sd(K - 1) = divergence ? 5.0 : 6.0;

  // Metric 0: the short-term north star.
  loading(0) = divergence ? -0.6 : 1.0;
  activity(0) = 0.0;
  own_idio(0) = divergence ? 0.15 : 0.10;
  noise_sd(0) = divergence ? 8.0 : 11.0;

  for (Eigen::Index m = 1; m < metrics; ++m) {
    const double frac =
        metrics > 2 ? static_cast<double>(m - 1) / static_cast<double>(metrics - 2) : 0.0;
    if (divergence) {
      loading(m) = 0.85 - 0.35 * frac;
      const double idio = 0.30 + 0.20 * frac;
      activity(m) = std::sqrt(0.35) * idio;
      own_idio(m) = std::sqrt(0.65) * idio;
      noise_sd(m) = 4.0 * std::pow(0.2, frac);
    } else if (frac < 0.5) {
      // informative half
      const double pos = frac / 0.5;
      loading(m) = 0.72 - 0.20 * pos;
      activity(m) = 0.0;
      own_idio(m) = 1.42 * loading(m);
      noise_sd(m) = 6.0 * std::pow(1.5 / 6.0, pos);
    } else {
      // local activity half
      loading(m) = 0.28;
      activity(m) = 12.0 * loading(m);
      own_idio(m) = loading(m);
      noise_sd(m) = 0.30;
    }
  }
  for (Eigen::Index k = 0; k < K; ++k) mean(k) = loading(k) * mu_y;

  cfg.effect_mean = mean;
  cfg.bucket_noise_sd = noise_sd;
  cfg.effect_cov = (sd_y * sd_y) * (loading * loading.transpose());
  cfg.effect_cov += activity * activity.transpose();
  cfg.effect_cov += own_idio.array().square().matrix().asDiagonal();
  return cfg;
}

inline std::string ground_truth_to_csv(const GroundTruth& truth, const ExperimentPanel& panel) {
  std::string out = "experiment_id,metric_id,true_effect\n";
  std::vector<std::string> columns = panel.metric_ids;
  columns.push_back(panel.registry.north_star_long_id());
  for (Eigen::Index j = 0; j < truth.true_effects.rows(); ++j) {
    for (Eigen::Index k = 0; k < truth.true_effects.cols(); ++k) {
      out += panel.experiment_ids[static_cast<std::size_t>(j)];
      out += ',';
      out += columns[static_cast<std::size_t>(k)];
      out += ',';
      out += format_double(truth.true_effects(j, k));
      out += '\n';
    }
  }
  return out;
}

}  // namespace proxyforge
