#pragma once

// Per-(experiment, metric) summary statistics and the sensitivity /
// directionality measures. Jackknife standard errors are computed by explicit
// leave-one-bucket-out resampling; significance uses the two-sided Student-t
// quantile obtained by numerical inversion of the regularized incomplete beta
// function (no normal approximation).

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "proxyforge/data_model.hpp"
#include "proxyforge/error.hpp"

namespace proxyforge {

// ---------------------------------------------------------------------------
// Student-t machinery
// ---------------------------------------------------------------------------

namespace detail {

// Continued-fraction kernel for the regularized incomplete beta function
// (modified Lentz algorithm).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int max_iterations = 500;
  constexpr double eps = 3.0e-16;
  constexpr double fpmin = 1.0e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) fail(Errc::invalid_config, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// P(|T| > t) for T ~ Student-t with df degrees of freedom.
inline double students_t_two_sided_pvalue(double t, double df) {
  if (!(df > 0.0)) fail(Errc::invalid_config, "degrees of freedom must be positive");
  if (!std::isfinite(t)) return 0.0;
  const double t2 = t * t;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

// Two-sided critical value tau with P(|T| > tau) = alpha, by bisection to
// an absolute tolerance of 1e-10.
inline double students_t_two_sided_quantile(double alpha, double df) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) fail(Errc::invalid_config, "alpha must be in (0, 1)");
  if (!(df > 0.0)) fail(Errc::invalid_config, "degrees of freedom must be positive");
  double lo = 0.0;
  double hi = 1.0;
  while (students_t_two_sided_pvalue(hi, df) > alpha) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int iter = 0; iter < 200 && (hi - lo) > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (students_t_two_sided_pvalue(mid, df) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Resampling and aggregation kernels
// ---------------------------------------------------------------------------

// Leave-one-out jackknife standard error of the sample mean.
template <typename Derived>
typename Derived::Scalar jackknife_se_mean(const Eigen::MatrixBase<Derived>& xs) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = xs.size();
  if (n < 2) fail(Errc::empty_input, "jackknife needs at least 2 observations");
  const Scalar total = xs.sum();
  const Scalar inv = Scalar(1) / Scalar(n - 1);
  Scalar loo_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) loo_sum += (total - xs(i)) * inv;
  const Scalar loo_mean = loo_sum / Scalar(n);
  Scalar ss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar d = (total - xs(i)) * inv - loo_mean;
    ss += d * d;
  }
  return std::sqrt(ss * Scalar(n - 1) / Scalar(n));
}

// Quantile with linear interpolation between order statistics (the "type 7"
// convention). Input must be sorted ascending.
template <typename Scalar>
Scalar quantile_type7_sorted(const std::vector<Scalar>& sorted, double p) {
  if (sorted.empty()) fail(Errc::empty_input, "quantile of empty sample");
  if (sorted.size() == 1) return sorted.front();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + static_cast<Scalar>(frac) * (sorted[hi] - sorted[lo]);
}

struct IqrClamp {
  double multiplier = 1.5;
};

// Fraction of experiments whose test statistic clears the threshold.
template <typename Derived>
typename Derived::Scalar binary_sensitivity(const Eigen::MatrixBase<Derived>& t_stats,
                                            typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (t_stats.size() == 0) fail(Errc::empty_input, "binary sensitivity of empty t list");
  if (!(tau > Scalar(0))) fail(Errc::invalid_config, "tau must be positive");
  Eigen::Index hits = 0;
  for (Eigen::Index j = 0; j < t_stats.size(); ++j) {
    if (std::abs(t_stats(j)) > tau) ++hits;
  }
  return Scalar(hits) / Scalar(t_stats.size());
}

// Mean absolute test statistic, optionally capped at Q3 + multiplier * IQR of
// the |t| sample before averaging.
template <typename Derived>
typename Derived::Scalar average_sensitivity(const Eigen::MatrixBase<Derived>& t_stats,
                                             const std::optional<IqrClamp>& clamp = std::nullopt) {
  using Scalar = typename Derived::Scalar;
  if (t_stats.size() == 0) fail(Errc::empty_input, "average sensitivity of empty t list");
  std::vector<Scalar> abs_t(static_cast<std::size_t>(t_stats.size()));
  for (Eigen::Index j = 0; j < t_stats.size(); ++j) {
    abs_t[static_cast<std::size_t>(j)] = std::abs(t_stats(j));
  }
  if (clamp) {
    std::vector<Scalar> sorted = abs_t;
    std::sort(sorted.begin(), sorted.end());
    const Scalar q1 = quantile_type7_sorted(sorted, 0.25);
    const Scalar q3 = quantile_type7_sorted(sorted, 0.75);
    const Scalar cap = q3 + static_cast<Scalar>(clamp->multiplier) * (q3 - q1);
    for (Scalar& v : abs_t) v = std::min(v, cap);
  }
  Scalar sum = 0;
  for (Scalar v : abs_t) sum += v;
  return sum / Scalar(abs_t.size());
}

// Mean squared gap between per-experiment metric means and north-star means;
// optionally both series are z-scored (sample standard deviation) first.
template <typename DX, typename DY>
typename DX::Scalar directionality_mse(const Eigen::MatrixBase<DX>& x_means,
                                       const Eigen::MatrixBase<DY>& y_means, bool standardize) {
  using Scalar = typename DX::Scalar;
  if (x_means.size() != y_means.size()) {
    fail(Errc::length_mismatch, "series lengths differ");
  }
  const Eigen::Index n = x_means.size();
  if (n < 2) fail(Errc::empty_input, "directionality needs at least 2 experiments");
  Eigen::VectorX<Scalar> x = x_means;
  Eigen::VectorX<Scalar> y = y_means;
  if (standardize) {
    auto zscore = [n](Eigen::VectorX<Scalar>& v) {
      const Scalar mean = v.mean();
      v.array() -= mean;
      const Scalar sd = std::sqrt(v.squaredNorm() / Scalar(n - 1));
      if (!(sd > Scalar(0))) fail(Errc::zero_variance, "cannot standardize a constant series");
      v /= sd;
    };
    zscore(x);
    zscore(y);
  }
  return (y - x).squaredNorm() / Scalar(n);
}

template <typename DX, typename DY>
typename DX::Scalar pearson_correlation(const Eigen::MatrixBase<DX>& x,
                                        const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  if (x.size() != y.size()) fail(Errc::length_mismatch, "series lengths differ");
  const Eigen::Index n = x.size();
  if (n < 3) fail(Errc::empty_input, "correlation needs at least 3 experiments");
  Eigen::VectorX<Scalar> xc = (x.array() - x.mean()).matrix();
  Eigen::VectorX<Scalar> yc = (y.array() - y.mean()).matrix();
  const Scalar nx = xc.norm();
  const Scalar ny = yc.norm();
  if (!(nx > Scalar(0)) || !(ny > Scalar(0))) {
    fail(Errc::zero_variance, "correlation undefined for a constant series");
  }
  return xc.dot(yc) / (nx * ny);
}

// Average ranks are assigned to ties.
template <typename Derived>
Eigen::VectorXd rank_series(const Eigen::MatrixBase<Derived>& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index k = i;
    while (k + 1 < n && x(order[static_cast<std::size_t>(k + 1)]) == x(order[static_cast<std::size_t>(i)])) {
      ++k;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + k) + 1.0;
    for (Eigen::Index r = i; r <= k; ++r) {
      ranks(order[static_cast<std::size_t>(r)]) = avg_rank;
    }
    i = k + 1;
  }
  return ranks;
}

template <typename DX, typename DY>
double spearman_correlation(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size()) fail(Errc::length_mismatch, "series lengths differ");
  return pearson_correlation(rank_series(x), rank_series(y));
}

enum class CorrelationMethod { pearson, spearman };

template <typename DX, typename DY>
double directionality_corr(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                           CorrelationMethod method) {
  return method == CorrelationMethod::pearson ? pearson_correlation(x, y)
                                              : spearman_correlation(x, y);
}

// ---------------------------------------------------------------------------
// Per-(experiment, metric) summaries
// ---------------------------------------------------------------------------

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
  double t = std::numeric_limits<double>::quiet_NaN();
  int df = 0;
  bool significant = false;
  int direction = 0;       // sign(mean) if significant, else 0
  bool degenerate = false;  // se == 0; excluded from sensitivity aggregation
};

struct SensitivityConfig {
  double alpha = 0.05;
  std::optional<IqrClamp> clamp;
};

inline MetricSummary summarize_series(const Eigen::Ref<const Eigen::VectorXd>& buckets, double tau) {
  MetricSummary s;
  s.mean = buckets.mean();
  s.se = jackknife_se_mean(buckets);
  s.df = static_cast<int>(buckets.size()) - 1;
  if (s.se > 0.0) {
    s.t = s.mean / s.se;
    s.significant = std::abs(s.t) > tau;
    s.direction = s.significant ? (s.mean > 0.0 ? 1 : -1) : 0;
  } else {
    s.degenerate = true;
  }
  return s;
}

// Row-major J x (M + 1) table: the panel's auxiliary columns in panel order,
// then the long-term north star as the last column.
class MetricSummaryTable {
 public:
  MetricSummaryTable(std::vector<std::string> column_ids, Eigen::Index n_experiments, double alpha,
                     double tau, int df)
      : column_ids_(std::move(column_ids)),
        n_experiments_(n_experiments),
        alpha_(alpha),
        tau_(tau),
        df_(df),
        cells_(static_cast<std::size_t>(n_experiments) * column_ids_.size()) {}

  const std::vector<std::string>& column_ids() const { return column_ids_; }
  Eigen::Index n_experiments() const { return n_experiments_; }
  Eigen::Index n_columns() const { return static_cast<Eigen::Index>(column_ids_.size()); }
  Eigen::Index north_star_column() const { return n_columns() - 1; }
  double alpha() const { return alpha_; }
  double tau() const { return tau_; }
  int df() const { return df_; }

  MetricSummary& at(Eigen::Index j, Eigen::Index col) {
    return cells_[static_cast<std::size_t>(j * n_columns() + col)];
  }
  const MetricSummary& at(Eigen::Index j, Eigen::Index col) const {
    return cells_[static_cast<std::size_t>(j * n_columns() + col)];
  }

  // Non-degenerate t statistics for one column.
  Eigen::VectorXd column_t_stats(Eigen::Index col) const {
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(n_experiments_));
    for (Eigen::Index j = 0; j < n_experiments_; ++j) {
      const MetricSummary& s = at(j, col);
      if (!s.degenerate) ts.push_back(s.t);
    }
    return Eigen::Map<const Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  }

  Eigen::VectorXd column_means(Eigen::Index col) const {
    Eigen::VectorXd means(n_experiments_);
    for (Eigen::Index j = 0; j < n_experiments_; ++j) means(j) = at(j, col).mean;
    return means;
  }

 private:
  std::vector<std::string> column_ids_;
  Eigen::Index n_experiments_;
  double alpha_;
  double tau_;
  int df_;
  std::vector<MetricSummary> cells_;
};

inline MetricSummaryTable summarize(const ExperimentPanel& panel, const SensitivityConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail(Errc::invalid_config, "alpha must be in (0, 1)");
  const Eigen::Index N = panel.n_buckets();
  if (N < 3) fail(Errc::invalid_config, "panel needs at least 3 buckets per experiment");
  const int df = static_cast<int>(N) - 1;
  const double tau = students_t_two_sided_quantile(cfg.alpha, static_cast<double>(df));

  std::vector<std::string> columns = panel.metric_ids;
  columns.push_back(panel.registry.north_star_long_id());
  MetricSummaryTable table(std::move(columns), panel.n_experiments(), cfg.alpha, tau, df);

  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) {
    const auto block = panel.experiment_block(j);
    for (Eigen::Index m = 0; m < panel.n_metrics(); ++m) {
      table.at(j, m) = summarize_series(block.col(m), tau);
    }
    table.at(j, table.north_star_column()) = summarize_series(panel.Y.col(j), tau);
  }
  return table;
}

// Data behind the sensitivity/correlation scatter: one row per auxiliary
// metric. Correlation and MSE compare per-experiment metric means against the
// long-term north-star means; both are NaN when a series is constant.
struct MetricSensitivityRow {
  std::string metric_id;
  double binary_sensitivity = 0.0;
  double average_sensitivity = 0.0;
  double correlation = 0.0;
  double mse = 0.0;
};

inline std::vector<MetricSensitivityRow> sensitivity_report(const ExperimentPanel& panel,
                                                            const SensitivityConfig& cfg) {
  const MetricSummaryTable table = summarize(panel, cfg);
  const Eigen::VectorXd y_means = table.column_means(table.north_star_column());
  std::vector<MetricSensitivityRow> rows;
  rows.reserve(static_cast<std::size_t>(panel.n_metrics()));
  for (Eigen::Index m = 0; m < panel.n_metrics(); ++m) {
    MetricSensitivityRow row;
    row.metric_id = panel.metric_ids[static_cast<std::size_t>(m)];
    const Eigen::VectorXd ts = table.column_t_stats(m);
    if (ts.size() == 0) {
      row.binary_sensitivity = std::numeric_limits<double>::quiet_NaN();
      row.average_sensitivity = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.binary_sensitivity = binary_sensitivity(ts, table.tau());
      row.average_sensitivity = average_sensitivity(ts, cfg.clamp);
    }
    const Eigen::VectorXd x_means = table.column_means(m);
    try {
      row.correlation = pearson_correlation(x_means, y_means);
    } catch (const Error&) {
      row.correlation = std::numeric_limits<double>::quiet_NaN();
    }
    try {
      row.mse = directionality_mse(x_means, y_means, false);
    } catch (const Error&) {
      row.mse = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace proxyforge
