#pragma once

// Linear proxy metrics: a nonnegative weight vector over the panel's
// auxiliary metrics, the induced per-(bucket, experiment) series
// Z = X * w, and its bi-objective (sensitivity, directionality) value.

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "proxyforge/data_model.hpp"
#include "proxyforge/error.hpp"
#include "proxyforge/stats.hpp"

namespace proxyforge {

struct WeightVector {
  Eigen::VectorXd values;

  WeightVector() = default;
  explicit WeightVector(Eigen::VectorXd v) : values(std::move(v)) {}
  Eigen::Index size() const { return values.size(); }
};

inline WeightVector normalize(const WeightVector& w) {
  const double total = w.values.sum();
  if (!(total > 0.0)) fail(Errc::all_zero_weights, "weight vector sums to zero");
  return WeightVector(w.values / total);
}

// Z(i, j) = sum_m w_m X(i, j, m); same layout as the panel's Y.
inline Eigen::MatrixXd proxy_series(const ExperimentPanel& panel, const WeightVector& w) {
  if (w.size() != panel.n_metrics()) {
    fail(Errc::dimension_mismatch, "weight vector has " + std::to_string(w.size()) +
                                       " entries, panel has " + std::to_string(panel.n_metrics()) +
                                       " metrics");
  }
  const Eigen::VectorXd flat = panel.X * w.values;
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), panel.n_buckets(), panel.n_experiments());
}

enum class SensitivityKind { binary, average };
enum class DirectionalityKind { pearson, spearman, neg_mse };

struct ObjectiveKind {
  SensitivityKind sensitivity = SensitivityKind::binary;
  DirectionalityKind directionality = DirectionalityKind::pearson;

  friend bool operator==(const ObjectiveKind&, const ObjectiveKind&) = default;
};

inline std::string to_string(const ObjectiveKind& kind) {
  std::string s = kind.sensitivity == SensitivityKind::binary ? "bs" : "as";
  s += '-';
  switch (kind.directionality) {
    case DirectionalityKind::pearson: s += "corr"; break;
    case DirectionalityKind::spearman: s += "spearman"; break;
    case DirectionalityKind::neg_mse: s += "negmse"; break;
  }
  return s;
}

// Both coordinates are maximized: MSE-flavoured directionality is stored
// negated. The kind tag keeps points from different configurations from ever
// being compared.
struct ObjectivePoint {
  double sensitivity = 0.0;
  double directionality = 0.0;
  ObjectiveKind kind;
};

struct ObjectiveConfig {
  ObjectiveKind kind;
  double alpha = 0.05;
  std::optional<IqrClamp> clamp;
  // MSE is scale dependent, so neg_mse evaluations always normalize the
  // weights first; binary/average sensitivity and correlation are invariant
  // to the scale of w and are evaluated as given.
  bool mse_standardize = true;
};

// Per-experiment sufficient statistics for fast proxy evaluation. For a
// linear proxy the bucket-level sample variance equals the quadratic form
// w' Cov_j w with the per-experiment metric covariance, so the jackknife
// standard error of the proxy mean is exactly sqrt(w' Cov_j w / N). This is
// the same quantity as a direct jackknife on the Z series (bucket-level
// cross-metric correlations included), just computed without materializing Z.
struct PanelMoments {
  Eigen::MatrixXd xbar;       // J x M per-experiment metric means
  Eigen::MatrixXd cov_stack;  // (J*M) x M stacked per-experiment bucket covariances
  Eigen::VectorXd ybar;       // J long-term north-star means
  Eigen::Index n_buckets = 0;

  Eigen::Index n_experiments() const { return xbar.rows(); }
  Eigen::Index n_metrics() const { return xbar.cols(); }

  static PanelMoments compute(const ExperimentPanel& panel) {
    const Eigen::Index J = panel.n_experiments();
    const Eigen::Index N = panel.n_buckets();
    const Eigen::Index M = panel.n_metrics();
    if (N < 2) fail(Errc::invalid_config, "need at least 2 buckets");
    PanelMoments mom;
    mom.n_buckets = N;
    mom.xbar.resize(J, M);
    mom.cov_stack.resize(J * M, M);
    mom.ybar.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) {
      const auto block = panel.experiment_block(j);
      const Eigen::RowVectorXd mu = block.colwise().mean();
      mom.xbar.row(j) = mu;
      const Eigen::MatrixXd centered = block.rowwise() - mu;
      mom.cov_stack.middleRows(j * M, M) =
          centered.transpose() * centered / static_cast<double>(N - 1);
      mom.ybar(j) = panel.Y.col(j).mean();
    }
    return mom;
  }
};

namespace detail {

struct ProxyExperimentStats {
  Eigen::VectorXd zbar;  // J per-experiment proxy means
  Eigen::VectorXd se;    // J jackknife standard errors
  Eigen::VectorXd t;     // non-degenerate t statistics, compacted
  Eigen::Index degenerate = 0;
};

inline ObjectivePoint aggregate_objectives(const ProxyExperimentStats& stats,
                                           const Eigen::VectorXd& ybar,
                                           const ObjectiveConfig& cfg, double tau) {
  ObjectivePoint point;
  point.kind = cfg.kind;
  if (stats.t.size() == 0) {
    fail(Errc::degenerate_variance, "every experiment has zero proxy variance");
  }
  point.sensitivity = cfg.kind.sensitivity == SensitivityKind::binary
                          ? binary_sensitivity(stats.t, tau)
                          : average_sensitivity(stats.t, cfg.clamp);
  switch (cfg.kind.directionality) {
    case DirectionalityKind::pearson:
      point.directionality = pearson_correlation(stats.zbar, ybar);
      break;
    case DirectionalityKind::spearman:
      point.directionality = spearman_correlation(stats.zbar, ybar);
      break;
    case DirectionalityKind::neg_mse:
      point.directionality = -directionality_mse(stats.zbar, ybar, cfg.mse_standardize);
      break;
  }
  return point;
}

}  // namespace detail

// Reference path: materialize Z and run the leave-one-bucket-out jackknife on
// it directly. Used for reports and as the cross-check for the moments path.
inline ObjectivePoint evaluate_objectives(const ExperimentPanel& panel, const WeightVector& w,
                                          const ObjectiveConfig& cfg) {
  if (panel.n_experiments() < 3) fail(Errc::empty_input, "need at least 3 experiments");
  const WeightVector wv =
      cfg.kind.directionality == DirectionalityKind::neg_mse ? normalize(w) : w;
  const Eigen::MatrixXd Z = proxy_series(panel, wv);
  const double tau =
      students_t_two_sided_quantile(cfg.alpha, static_cast<double>(panel.n_buckets() - 1));

  detail::ProxyExperimentStats stats;
  const Eigen::Index J = panel.n_experiments();
  stats.zbar.resize(J);
  stats.se.resize(J);
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(J));
  Eigen::VectorXd ybar(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    stats.zbar(j) = Z.col(j).mean();
    stats.se(j) = jackknife_se_mean(Z.col(j));
    if (stats.se(j) > 0.0) {
      ts.push_back(stats.zbar(j) / stats.se(j));
    } else {
      ++stats.degenerate;
    }
    ybar(j) = panel.Y.col(j).mean();
  }
  stats.t = Eigen::Map<const Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  return detail::aggregate_objectives(stats, ybar, cfg, tau);
}

// Fast path over precomputed panel moments. Many candidate weight vectors can
// be evaluated concurrently against one shared evaluator.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(PanelMoments moments, ObjectiveConfig cfg)
      : moments_(std::move(moments)),
        cfg_(cfg),
        tau_(students_t_two_sided_quantile(
            cfg.alpha, static_cast<double>(moments_.n_buckets - 1))) {
    if (moments_.n_experiments() < 3) fail(Errc::empty_input, "need at least 3 experiments");
  }

  ObjectiveEvaluator(const ExperimentPanel& panel, ObjectiveConfig cfg)
      : ObjectiveEvaluator(PanelMoments::compute(panel), cfg) {}

  Eigen::Index dimension() const { return moments_.n_metrics(); }
  double tau() const { return tau_; }
  const ObjectiveConfig& config() const { return cfg_; }
  const PanelMoments& moments() const { return moments_; }

  ObjectivePoint evaluate(const WeightVector& w) const {
    const auto stats = experiment_stats(w);
    return detail::aggregate_objectives(stats, moments_.ybar, cfg_, tau_);
  }

  detail::ProxyExperimentStats experiment_stats(const WeightVector& w) const {
    const Eigen::Index J = moments_.n_experiments();
    const Eigen::Index M = moments_.n_metrics();
    if (w.size() != M) {
      fail(Errc::dimension_mismatch, "weight vector has " + std::to_string(w.size()) +
                                         " entries, panel has " + std::to_string(M) + " metrics");
    }
    const Eigen::VectorXd wv = cfg_.kind.directionality == DirectionalityKind::neg_mse
                                   ? normalize(w).values
                                   : w.values;
    detail::ProxyExperimentStats stats;
    stats.zbar = moments_.xbar * wv;
    const Eigen::VectorXd q = moments_.cov_stack * wv;
    const Eigen::Map<const Eigen::MatrixXd> per_exp(q.data(), M, J);
    const Eigen::VectorXd variances = per_exp.transpose() * wv;

    stats.se.resize(J);
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(J));
    const double inv_n = 1.0 / static_cast<double>(moments_.n_buckets);
    for (Eigen::Index j = 0; j < J; ++j) {
      const double var = std::max(variances(j), 0.0);
      stats.se(j) = std::sqrt(var * inv_n);
      if (stats.se(j) > 0.0) {
        ts.push_back(stats.zbar(j) / stats.se(j));
      } else {
        ++stats.degenerate;
      }
    }
    stats.t = Eigen::Map<const Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    return stats;
  }

 private:
  PanelMoments moments_;
  ObjectiveConfig cfg_;
  double tau_;
};

}  // namespace proxyforge
