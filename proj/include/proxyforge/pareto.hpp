#pragma once

// Non-dominated archives and Pareto front extraction: randomized search over
// the weight hypercube and binned constrained optimization driven by
// DIRECT-L, plus the 2-D hypervolume (area under the Pareto front) used to
// compare fronts.

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxyforge/direct_l.hpp"
#include "proxyforge/error.hpp"
#include "proxyforge/parallel.hpp"
#include "proxyforge/proxy.hpp"
#include "proxyforge/rng.hpp"

namespace proxyforge {

// True iff p is at least as good as q in both coordinates and strictly better
// in at least one. A point never dominates its equal.
inline bool dominates(const ObjectivePoint& p, const ObjectivePoint& q) {
  if (p.kind != q.kind) {
    fail(Errc::kind_mismatch, "cannot compare points of kinds " + to_string(p.kind) + " and " +
                                  to_string(q.kind));
  }
  if (p.sensitivity < q.sensitivity || p.directionality < q.directionality) return false;
  return p.sensitivity > q.sensitivity || p.directionality > q.directionality;
}

struct ArchiveEntry {
  WeightVector weights;  // stored normalized
  ObjectivePoint point;
};

// Mutually non-dominated entries kept sorted by ascending sensitivity, which
// for a 2-D front forces strictly descending directionality (the staircase).
// Bounded: past max_entries the entry contributing least hypervolume
// (origin reference, ties to the lowest sensitivity) is evicted.
class ParetoArchive {
 public:
  explicit ParetoArchive(ObjectiveKind kind, std::size_t max_entries = 10000)
      : kind_(kind), max_entries_(max_entries) {}

  ObjectiveKind kind() const { return kind_; }
  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Returns true iff the candidate was added. Duplicates of an existing
  // point are discarded: first in wins.
  bool insert(ArchiveEntry candidate) {
    if (candidate.point.kind != kind_) {
      fail(Errc::kind_mismatch, "archive holds " + to_string(kind_) + " points");
    }
    const double s = candidate.point.sensitivity;
    const double d = candidate.point.directionality;

    auto lo = std::lower_bound(entries_.begin(), entries_.end(), s,
                               [](const ArchiveEntry& e, double value) {
                                 return e.point.sensitivity < value;
                               });
    if (lo != entries_.end()) {
      // lo has the smallest sensitivity >= s and, by the staircase, the
      // largest directionality among those entries.
      if (lo->point.sensitivity == s && lo->point.directionality == d) return false;
      if (lo->point.directionality >= d) return false;  // candidate dominated
    }

    // Entries dominated by the candidate sit immediately to the left (their
    // directionality <= d), plus an equal-sensitivity entry at lo.
    auto first_removed = lo;
    while (first_removed != entries_.begin() &&
           std::prev(first_removed)->point.directionality <= d) {
      --first_removed;
    }
    auto last_removed = lo;
    if (lo != entries_.end() && lo->point.sensitivity == s && lo->point.directionality < d) {
      ++last_removed;
    }
    auto pos = entries_.erase(first_removed, last_removed);
    entries_.insert(pos, std::move(candidate));

    if (entries_.size() > max_entries_) evict_least_contribution();
    return true;
  }

  std::vector<ObjectivePoint> points() const {
    std::vector<ObjectivePoint> pts;
    pts.reserve(entries_.size());
    for (const auto& e : entries_) pts.push_back(e.point);
    return pts;
  }

 private:
  void evict_least_contribution() {
    std::size_t victim = 0;
    double least = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double s_left = i == 0 ? 0.0 : entries_[i - 1].point.sensitivity;
      const double d_right = i + 1 == entries_.size() ? 0.0 : entries_[i + 1].point.directionality;
      const double contribution = std::max(0.0, entries_[i].point.sensitivity - s_left) *
                                  std::max(0.0, entries_[i].point.directionality - d_right);
      if (contribution < least) {
        least = contribution;
        victim = i;
      }
    }
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
  }

  ObjectiveKind kind_;
  std::size_t max_entries_;
  std::vector<ArchiveEntry> entries_;
};

// Area of the union of rectangles [ref_s, s] x [ref_d, d] over the
// non-dominated subset of the input. Every point must dominate or equal the
// reference coordinatewise.
inline double hypervolume_2d(std::vector<ObjectivePoint> points, double ref_sensitivity = 0.0,
                             double ref_directionality = 0.0) {
  if (points.empty()) return 0.0;
  for (const auto& p : points) {
    if (p.kind != points.front().kind) fail(Errc::kind_mismatch, "mixed objective kinds");
    if (p.sensitivity < ref_sensitivity || p.directionality < ref_directionality) {
      fail(Errc::point_below_reference, "point below the reference point");
    }
  }
  std::sort(points.begin(), points.end(), [](const ObjectivePoint& a, const ObjectivePoint& b) {
    if (a.sensitivity != b.sensitivity) return a.sensitivity < b.sensitivity;
    return a.directionality > b.directionality;
  });
  // Sweep from the right: keep points whose directionality strictly exceeds
  // everything with higher sensitivity.
  std::vector<ObjectivePoint> front;
  double best_d = -std::numeric_limits<double>::infinity();
  for (auto it = points.rbegin(); it != points.rend(); ++it) {
    if (it->directionality > best_d) {
      front.push_back(*it);
      best_d = it->directionality;
    }
  }
  std::reverse(front.begin(), front.end());  // ascending sensitivity again

  double area = 0.0;
  double s_prev = ref_sensitivity;
  for (const auto& p : front) {
    area += (p.sensitivity - s_prev) * (p.directionality - ref_directionality);
    s_prev = p.sensitivity;
  }
  return area;
}

struct SearchBudget {
  std::int64_t max_evaluations = 0;
  std::uint64_t seed = 0;
};

struct ParetoResult {
  ObjectiveKind kind;
  std::vector<ArchiveEntry> entries;  // ascending sensitivity
  std::int64_t evaluations = 0;
  double wall_time_ms = 0.0;
  std::vector<int> infeasible_bins;  // binned search only
  Eigen::VectorXd bin_edges;         // binned search only
};

// Area under the Pareto front with the origin as reference. Entries below
// the origin in either coordinate contribute nothing and are skipped.
inline double aupf(const ParetoResult& result) {
  std::vector<ObjectivePoint> pts;
  for (const auto& e : result.entries) {
    if (e.point.sensitivity >= 0.0 && e.point.directionality >= 0.0) pts.push_back(e.point);
  }
  return hypervolume_2d(std::move(pts));
}

// Algorithm: sample weights i.i.d. uniform on [0,1]^M, evaluate, keep the
// non-dominated archive. Every sample index owns a derived RNG substream, so
// the result depends only on (panel, config, seed) and not on the thread
// count. Candidates are folded into the archive in index order.
inline ParetoResult random_search(const ObjectiveEvaluator& evaluator, const SearchBudget& budget,
                                  int threads = 1) {
  if (budget.max_evaluations < 1) fail(Errc::invalid_budget, "need at least one evaluation");
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index M = evaluator.dimension();
  ParetoArchive archive(evaluator.config().kind);

  constexpr std::int64_t chunk_size = 4096;
  std::vector<ArchiveEntry> chunk(static_cast<std::size_t>(
      std::min<std::int64_t>(chunk_size, budget.max_evaluations)));
  for (std::int64_t chunk_start = 0; chunk_start < budget.max_evaluations;
       chunk_start += chunk_size) {
    const std::int64_t n = std::min<std::int64_t>(chunk_size, budget.max_evaluations - chunk_start);
    parallel_for_ranges(n, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t k = begin; k < end; ++k) {
        const std::int64_t index = chunk_start + k;
        SplitMix64 gen = substream(budget.seed, static_cast<std::uint64_t>(index));
        Eigen::VectorXd w(M);
        for (Eigen::Index m = 0; m < M; ++m) w(m) = gen.uniform01();
        try {
          WeightVector normalized = normalize(WeightVector(w));
          ArchiveEntry entry;
          entry.point = evaluator.evaluate(normalized);
          entry.weights = std::move(normalized);
          chunk[static_cast<std::size_t>(k)] = std::move(entry);
        } catch (const Error& e) {
          fail(e.code(), "evaluating sample " + std::to_string(index) + ": " + e.what());
        }
      }
    });
    for (std::int64_t k = 0; k < n; ++k) {
      archive.insert(std::move(chunk[static_cast<std::size_t>(k)]));
    }
  }

  ParetoResult result;
  result.kind = evaluator.config().kind;
  result.entries = archive.entries();
  result.evaluations = budget.max_evaluations;
  result.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// Sensitivity bins [edges[b], edges[b+1]); edges start at 0 and increase
// strictly.
struct BinSpec {
  Eigen::VectorXd edges;

  Eigen::Index n_bins() const { return edges.size() - 1; }

  void validate() const {
    if (edges.size() < 2) fail(Errc::invalid_bin_spec, "need at least 2 edges");
    if (edges(0) != 0.0) fail(Errc::invalid_bin_spec, "first edge must be 0");
    for (Eigen::Index i = 1; i < edges.size(); ++i) {
      if (!(edges(i) > edges(i - 1))) {
        fail(Errc::invalid_bin_spec, "edges must increase strictly");
      }
    }
  }
};

inline BinSpec equal_width_bins(double max_sensitivity, Eigen::Index edge_count = 14) {
  if (edge_count < 2) fail(Errc::invalid_bin_spec, "need at least 2 edges");
  if (!(max_sensitivity > 0.0)) fail(Errc::invalid_bin_spec, "max sensitivity must be positive");
  BinSpec spec;
  spec.edges = Eigen::VectorXd::LinSpaced(edge_count, 0.0, max_sensitivity);
  spec.edges(0) = 0.0;
  return spec;
}

// Default edges: equal-width bins from 0 to the largest single-metric
// sensitivity. Falls back to [0, 1] when every single metric is flat.
inline BinSpec default_bin_spec(const ObjectiveEvaluator& evaluator, Eigen::Index edge_count = 14) {
  const Eigen::Index M = evaluator.dimension();
  double max_single = 0.0;
  for (Eigen::Index m = 0; m < M; ++m) {
    Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(M);
    one_hot(m) = 1.0;
    try {
      max_single = std::max(max_single, evaluator.evaluate(WeightVector(one_hot)).sensitivity);
    } catch (const Error&) {
      // flat column; contributes nothing to the range
    }
  }
  return equal_width_bins(max_single > 0.0 ? max_single : 1.0, edge_count);
}

// Algorithm: for each sensitivity bin, maximize directionality subject to
// sensitivity landing in the bin. DIRECT-L sees the penalized objective
//   g(w) = directionality(w) - 10 * dist(sensitivity(w), [lo, hi])
// and a bin's solution is the best point whose true sensitivity lies in the
// half-open bin. Every run also evaluates plenty of points that land in
// OTHER bins on the way to its own; those candidates are harvested, so a
// bin's final solution is the feasible maximum over all B-1 runs, not just
// its own. Bins where no run ever visited a feasible point are reported
// infeasible. Failed evaluations (flat proxies) map to a large finite
// penalty. The per-bin runs are independent subproblems and the harvest is
// a deterministic post-merge: results are identical for every thread count.
inline ParetoResult binned_search(const ObjectiveEvaluator& evaluator, const BinSpec& bins,
                                  std::int64_t per_bin_budget, int threads = 1) {
  bins.validate();
  const Eigen::Index M = evaluator.dimension();
  if (per_bin_budget < 2 * M + 1) {
    fail(Errc::invalid_budget, "per-bin budget must be at least 2*M + 1");
  }
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n_bins = bins.n_bins();
  constexpr double k_penalty = 10.0;
  constexpr double k_failed_eval = -1e3;  // below any reachable penalized value

  struct Candidate {
    Eigen::VectorXd w;
    double directionality = -std::numeric_limits<double>::infinity();
    bool valid = false;
  };
  struct RunOutcome {
    std::vector<Candidate> best_per_bin;  // best feasible point seen, per bin
    std::int64_t evaluations = 0;
  };
  std::vector<RunOutcome> runs(static_cast<std::size_t>(n_bins));

  parallel_for_ranges(n_bins, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t b = begin; b < end; ++b) {
      const double lo = bins.edges(b);
      const double hi = bins.edges(b + 1);
      RunOutcome& run = runs[static_cast<std::size_t>(b)];
      run.best_per_bin.resize(static_cast<std::size_t>(n_bins));

      auto bin_of = [&](double sensitivity) -> std::int64_t {
        if (sensitivity < bins.edges(0)) return -1;
        for (std::int64_t k = 0; k < n_bins; ++k) {
          if (sensitivity < bins.edges(k + 1)) return k;
        }
        return -1;
      };

      auto penalized = [&](const Eigen::VectorXd& x) -> double {
        ObjectivePoint pt;
        try {
          pt = evaluator.evaluate(WeightVector(x));
        } catch (const Error&) {
          return k_failed_eval;
        }
        const std::int64_t in_bin = bin_of(pt.sensitivity);
        if (in_bin >= 0) {
          Candidate& cand = run.best_per_bin[static_cast<std::size_t>(in_bin)];
          if (!cand.valid || pt.directionality > cand.directionality) {
            cand.w = x;
            cand.directionality = pt.directionality;
            cand.valid = true;
          }
        }
        double dist = 0.0;
        if (pt.sensitivity < lo) {
          dist = lo - pt.sensitivity;
        } else if (pt.sensitivity > hi) {
          dist = pt.sensitivity - hi;
        }
        return pt.directionality - k_penalty * dist;
      };

      run.evaluations = direct_l_maximize(penalized, M, per_bin_budget).evaluations;
    }
  });

  ParetoArchive archive(evaluator.config().kind);
  ParetoResult result;
  result.kind = evaluator.config().kind;
  result.bin_edges = bins.edges;
  for (Eigen::Index b = 0; b < n_bins; ++b) {
    const Candidate* best = nullptr;
    for (const auto& run : runs) {
      const Candidate& cand = run.best_per_bin[static_cast<std::size_t>(b)];
      if (cand.valid && (!best || cand.directionality > best->directionality)) {
        best = &cand;
      }
    }
    bool inserted = false;
    if (best) {
      WeightVector normalized = normalize(WeightVector(best->w));
      const ObjectivePoint point = evaluator.evaluate(normalized);
      result.evaluations += 1;
      // Feasibility is re-checked exactly on the stored weights.
      if (point.sensitivity >= bins.edges(b) && point.sensitivity < bins.edges(b + 1)) {
        archive.insert(ArchiveEntry{std::move(normalized), point});
        inserted = true;
      }
    }
    if (!inserted) result.infeasible_bins.push_back(static_cast<int>(b));
  }
  for (const auto& run : runs) result.evaluations += run.evaluations;
  result.entries = archive.entries();
  result.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace proxyforge
