#pragma once

// Locally biased DIviding RECTangles (DIRECT-L, Gablonsky & Kelley 2000), a
// deterministic derivative-free global optimizer on the unit hypercube.
//
// Differences from the original DIRECT of Jones, Perttunen & Stuckman, per
// the locally biased variant:
//   - a hyperrectangle's size is measured by its longest side, which groups
//     boxes into far fewer size classes,
//   - only one box per size class (the best, lowest creation index on ties)
//     can be potentially optimal in an iteration.
// Selected boxes are trisected along all of their longest sides, best
// sampled value first. There is no randomness anywhere: identical inputs
// give identical outputs on every run and thread count.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "proxyforge/error.hpp"

namespace proxyforge {

struct DirectLResult {
  Eigen::VectorXd argmax;
  double value = 0.0;
  std::int64_t evaluations = 0;
  std::int64_t iterations = 0;
};

namespace detail {

struct DirectBox {
  Eigen::VectorXd center;
  std::vector<int> depth;  // trisection count per dimension
  double g = 0.0;          // minimized objective (-f)
  int level = 0;           // min depth == longest side 3^-level
  std::int64_t id = 0;
};

inline int min_depth(const std::vector<int>& depth) {
  int lo = depth.front();
  for (int d : depth) lo = std::min(lo, d);
  return lo;
}

}  // namespace detail

template <typename F>
DirectLResult direct_l_maximize(F&& f, Eigen::Index dim, std::int64_t max_evaluations) {
  using detail::DirectBox;
  if (dim < 1) fail(Errc::invalid_config, "dimension must be positive");
  if (max_evaluations < 2 * dim + 1) {
    fail(Errc::invalid_budget, "budget must be at least 2*dim + 1 = " +
                                   std::to_string(2 * dim + 1) + ", got " +
                                   std::to_string(max_evaluations));
  }

  std::int64_t evaluations = 0;
  auto eval_g = [&](const Eigen::VectorXd& x) {
    const double fx = f(x);
    ++evaluations;
    if (!std::isfinite(fx)) {
      fail(Errc::non_finite_objective, "objective returned a non-finite value");
    }
    return -fx;
  };

  std::vector<DirectBox> boxes;
  boxes.reserve(static_cast<std::size_t>(max_evaluations) + 1);
  {
    DirectBox root;
    root.center = Eigen::VectorXd::Constant(dim, 0.5);
    root.depth.assign(static_cast<std::size_t>(dim), 0);
    root.g = eval_g(root.center);
    root.level = 0;
    root.id = 0;
    boxes.push_back(std::move(root));
  }
  std::int64_t next_id = 1;

  std::size_t best_idx = 0;
  auto note_best = [&](std::size_t idx) {
    if (boxes[idx].g < boxes[best_idx].g) best_idx = idx;
  };

  // Minimum-improvement factor in the optimality test. The locally biased
  // variant runs it at zero: the best box is always divisible, which buys
  // deeper refinement near the incumbent.
  constexpr double k_eps = 0.0;
  std::int64_t iterations = 0;
  bool exhausted = evaluations >= max_evaluations;

  while (!exhausted) {
    ++iterations;

    // One candidate per size class: lowest g, ties to the oldest box.
    struct Candidate {
      double measure;
      double g;
      std::size_t idx;
    };
    std::vector<Candidate> candidates;
    {
      std::vector<std::pair<int, std::size_t>> best_per_level;  // (level, box index)
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        const DirectBox& b = boxes[i];
        auto it = std::find_if(best_per_level.begin(), best_per_level.end(),
                               [&](const auto& p) { return p.first == b.level; });
        if (it == best_per_level.end()) {
          best_per_level.emplace_back(b.level, i);
        } else {
          const DirectBox& cur = boxes[it->second];
          if (b.g < cur.g || (b.g == cur.g && b.id < cur.id)) it->second = i;
        }
      }
      candidates.reserve(best_per_level.size());
      for (const auto& [level, idx] : best_per_level) {
        candidates.push_back({std::pow(3.0, -level), boxes[idx].g, idx});
      }
      std::sort(candidates.begin(), candidates.end(),
                [](const Candidate& a, const Candidate& b) { return a.measure < b.measure; });
    }

    // Lower convex hull over (measure, g), smallest measures first.
    std::vector<Candidate> hull;
    for (const Candidate& p : candidates) {
      while (hull.size() >= 2) {
        const Candidate& a = hull[hull.size() - 2];
        const Candidate& b = hull.back();
        const double slope_ab = (b.g - a.g) / (b.measure - a.measure);
        const double slope_ap = (p.g - a.g) / (p.measure - a.measure);
        if (slope_ap <= slope_ab) {
          hull.pop_back();
        } else {
          break;
        }
      }
      hull.push_back(p);
    }

    // Potentially optimal boxes: walk the hull from the largest measure while
    // the supporting slope stays positive and the minimum-improvement test
    // f - K*d <= fmin - eps*|fmin| holds.
    const double g_min = boxes[best_idx].g;
    std::vector<std::size_t> selected;
    selected.push_back(hull.back().idx);
    for (std::size_t i = hull.size() - 1; i > 0; --i) {
      const Candidate& right = hull[i];
      const Candidate& left = hull[i - 1];
      const double slope = (right.g - left.g) / (right.measure - left.measure);
      if (slope <= 0.0) break;
      if (left.g - slope * left.measure > g_min - k_eps * std::abs(g_min)) break;
      selected.push_back(left.idx);
    }
    // Process large boxes first.
    std::reverse(selected.begin(), selected.end());

    for (std::size_t sel : selected) {
      if (exhausted) break;
      const int level = boxes[sel].level;
      const double delta = std::pow(3.0, -(level + 1));

      std::vector<int> long_dims;
      for (Eigen::Index d = 0; d < dim; ++d) {
        if (boxes[sel].depth[static_cast<std::size_t>(d)] == level) {
          long_dims.push_back(static_cast<int>(d));
        }
      }

      // Sample center +- delta along each longest side while budget remains.
      struct DimSample {
        int dim;
        double g_minus;
        double g_plus;
        double w;
      };
      std::vector<DimSample> samples;
      for (int d : long_dims) {
        if (evaluations + 2 > max_evaluations) {
          exhausted = true;
          break;
        }
        Eigen::VectorXd lo = boxes[sel].center;
        lo(d) -= delta;
        Eigen::VectorXd hi = boxes[sel].center;
        hi(d) += delta;
        const double g_minus = eval_g(lo);
        const double g_plus = eval_g(hi);
        samples.push_back({d, g_minus, g_plus, std::min(g_minus, g_plus)});
      }
      if (evaluations >= max_evaluations) exhausted = true;

      // Carve the box: best dimension first, minus child before plus child.
      std::stable_sort(samples.begin(), samples.end(),
                       [](const DimSample& a, const DimSample& b) { return a.w < b.w; });
      for (const DimSample& s : samples) {
        boxes[sel].depth[static_cast<std::size_t>(s.dim)] += 1;

        DirectBox minus;
        minus.center = boxes[sel].center;
        minus.center(s.dim) -= delta;
        minus.depth = boxes[sel].depth;
        minus.g = s.g_minus;
        minus.level = detail::min_depth(minus.depth);
        minus.id = next_id++;

        DirectBox plus;
        plus.center = boxes[sel].center;
        plus.center(s.dim) += delta;
        plus.depth = boxes[sel].depth;
        plus.g = s.g_plus;
        plus.level = detail::min_depth(plus.depth);
        plus.id = next_id++;

        boxes.push_back(std::move(minus));
        note_best(boxes.size() - 1);
        boxes.push_back(std::move(plus));
        note_best(boxes.size() - 1);
      }
      boxes[sel].level = detail::min_depth(boxes[sel].depth);
    }
  }

  DirectLResult result;
  result.argmax = boxes[best_idx].center;
  result.value = -boxes[best_idx].g;
  result.evaluations = evaluations;
  result.iterations = iterations;
  return result;
}

}  // namespace proxyforge
