#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "oracles.hpp"
#include "proxyforge/pareto.hpp"
#include "proxyforge/rng.hpp"
#include "proxyforge/simulator.hpp"

using namespace proxyforge;

namespace {

ObjectivePoint pt(double s, double d) {
  ObjectivePoint p;
  p.sensitivity = s;
  p.directionality = d;
  return p;
}

ArchiveEntry entry(double s, double d) { return ArchiveEntry{WeightVector(), pt(s, d)}; }

}  // namespace

TEST_CASE("dominance relation") {
  CHECK(dominates(pt(0.5, 0.5), pt(0.4, 0.4)));
  CHECK_FALSE(dominates(pt(0.6, 0.3), pt(0.3, 0.6)));
  CHECK_FALSE(dominates(pt(0.3, 0.6), pt(0.6, 0.3)));
  CHECK_FALSE(dominates(pt(0.5, 0.5), pt(0.5, 0.5)));
  CHECK(dominates(pt(0.5, 0.6), pt(0.5, 0.5)));

  ObjectivePoint other = pt(0.5, 0.5);
  other.kind.sensitivity = SensitivityKind::average;
  CHECK_THROWS_AS(dominates(other, pt(0.4, 0.4)), Error);
}

TEST_CASE("archive insertion") {
  ParetoArchive archive(ObjectiveKind{});
  CHECK(archive.insert(entry(0.4, 0.6)));
  CHECK(archive.insert(entry(0.6, 0.4)));

  SUBCASE("incomparable point is added") {
    CHECK(archive.insert(entry(0.5, 0.5)));
    CHECK(archive.size() == 3);
  }
  SUBCASE("dominating point collapses the archive") {
    CHECK(archive.insert(entry(0.7, 0.7)));
    CHECK(archive.size() == 1);
    CHECK(archive.entries().front().point.sensitivity == 0.7);
  }
  SUBCASE("dominated point is rejected") {
    CHECK_FALSE(archive.insert(entry(0.3, 0.3)));
    CHECK(archive.size() == 2);
  }
  SUBCASE("duplicates are discarded, first in wins") {
    CHECK_FALSE(archive.insert(entry(0.4, 0.6)));
    CHECK(archive.size() == 2);
  }
}

TEST_CASE("archive equals the brute-force non-dominated filter, exactly") {
  SplitMix64 gen(1012);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<ObjectivePoint> log;
    ParetoArchive archive(ObjectiveKind{});
    for (int i = 0; i < 120; ++i) {
      // coarse grid provokes duplicates and ties
      const double s = std::floor(gen.uniform01() * 12.0) / 12.0;
      const double d = std::floor(gen.uniform01() * 12.0) / 12.0;
      log.push_back(pt(s, d));
      archive.insert(entry(s, d));
    }
    const auto expected = oracles::brute_force_front(log);
    REQUIRE(archive.size() == expected.size());
    // both ascending in sensitivity for comparison
    auto sorted = expected;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.sensitivity < b.sensitivity;
    });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      CHECK(archive.entries()[i].point.sensitivity == sorted[i].sensitivity);
      CHECK(archive.entries()[i].point.directionality == sorted[i].directionality);
    }
    // staircase: ascending sensitivity, strictly descending directionality
    for (std::size_t i = 1; i < archive.size(); ++i) {
      CHECK(archive.entries()[i].point.sensitivity >
            archive.entries()[i - 1].point.sensitivity);
      CHECK(archive.entries()[i].point.directionality <
            archive.entries()[i - 1].point.directionality);
    }
  }
}

TEST_CASE("bounded archive evicts the least hypervolume contributor") {
  ParetoArchive archive(ObjectiveKind{}, 3);
  archive.insert(entry(0.1, 0.9));
  archive.insert(entry(0.5, 0.5));
  archive.insert(entry(0.9, 0.1));

  SUBCASE("a marginal newcomer is evicted right back") {
    // contributions after insert: (0.45,0.55) adds 0.35*0.05 = 0.0175, the
    // smallest of the four, so the newcomer goes.
    archive.insert(entry(0.45, 0.55));
    CHECK(archive.size() == 3);
    CHECK(archive.entries().front().point.sensitivity == 0.1);
    CHECK(archive.entries()[1].point.sensitivity == 0.5);
  }
  SUBCASE("an old entry with the smallest contribution is evicted") {
    // (0.9,0.1) shrinks to 0.05*0.1 = 0.005 once (0.85,0.15) arrives.
    archive.insert(entry(0.85, 0.15));
    CHECK(archive.size() == 3);
    CHECK(archive.entries().back().point.sensitivity == 0.85);
  }
}

TEST_CASE("hypervolume worked examples") {
  std::vector<ObjectivePoint> points{pt(0.2, 0.9), pt(0.5, 0.6), pt(0.8, 0.2)};
  CHECK(hypervolume_2d(points) == doctest::Approx(0.42).epsilon(1e-13));

  CHECK(hypervolume_2d({pt(0.37, 0.81)}) == doctest::Approx(0.37 * 0.81).epsilon(1e-14));

  // dominated point contributes nothing
  CHECK(hypervolume_2d({pt(0.5, 0.5), pt(0.4, 0.4)}) == doctest::Approx(0.25).epsilon(1e-14));

  CHECK_THROWS_AS(hypervolume_2d({pt(-0.1, 0.5)}), Error);
  CHECK(hypervolume_2d({}) == 0.0);
}

TEST_CASE("hypervolume never decreases when a non-dominated point is added") {
  SplitMix64 gen(55);
  std::vector<ObjectivePoint> points;
  double previous = 0.0;
  for (int i = 0; i < 60; ++i) {
    points.push_back(pt(gen.uniform01(), gen.uniform01()));
    const double hv = hypervolume_2d(points);
    CHECK(hv >= previous - 1e-15);
    previous = hv;
  }
}

TEST_CASE("random search: M=1 collapses to a single entry") {
  auto cfg = preset("insensitive_ns", 10, 6, 1);
  cfg.seed = 4;
  const auto panel = simulate_panel(cfg).first;
  ObjectiveEvaluator evaluator(panel, ObjectiveConfig{});
  const auto result = random_search(evaluator, SearchBudget{50, 99});
  REQUIRE(result.entries.size() == 1);
  const ObjectivePoint single = evaluator.evaluate(WeightVector(Eigen::VectorXd::Ones(1)));
  CHECK(result.entries.front().point.sensitivity == doctest::Approx(single.sensitivity));
  CHECK(result.entries.front().point.directionality ==
        doctest::Approx(single.directionality).epsilon(1e-12));
}

TEST_CASE("random search is deterministic and matches the brute-force filter of its log") {
  auto cfg = preset("insensitive_ns", 12, 6, 3);
  cfg.seed = 21;
  const auto panel = simulate_panel(cfg).first;
  ObjectiveEvaluator evaluator(panel, ObjectiveConfig{});
  const SearchBudget budget{200, 345};

  const auto a = random_search(evaluator, budget, 1);
  const auto b = random_search(evaluator, budget, 1);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].point.sensitivity == b.entries[i].point.sensitivity);
    CHECK(a.entries[i].point.directionality == b.entries[i].point.directionality);
    CHECK((a.entries[i].weights.values.array() == b.entries[i].weights.values.array()).all());
  }

  // replay the exact draw sequence to reconstruct the evaluation log
  std::vector<ObjectivePoint> log;
  for (std::int64_t idx = 0; idx < budget.max_evaluations; ++idx) {
    SplitMix64 gen = substream(budget.seed, static_cast<std::uint64_t>(idx));
    Eigen::VectorXd w(3);
    for (int m = 0; m < 3; ++m) w(m) = gen.uniform01();
    log.push_back(evaluator.evaluate(normalize(WeightVector(w))));
  }
  const auto expected = oracles::brute_force_front(log);
  REQUIRE(a.entries.size() == expected.size());
  auto sorted = expected;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& x, const auto& y) { return x.sensitivity < y.sensitivity; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    CHECK(a.entries[i].point.sensitivity == sorted[i].sensitivity);
    CHECK(a.entries[i].point.directionality == sorted[i].directionality);
  }

  // thread-count invariance
  const auto c = random_search(evaluator, budget, 3);
  REQUIRE(c.entries.size() == a.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(c.entries[i].point.sensitivity == a.entries[i].point.sensitivity);
    CHECK((c.entries[i].weights.values.array() == a.entries[i].weights.values.array()).all());
  }
}

TEST_CASE("re-evaluating archived weights reproduces the stored point") {
  auto cfg = preset("insensitive_ns", 15, 8, 4);
  cfg.seed = 8;
  const auto panel = simulate_panel(cfg).first;
  ObjectiveEvaluator evaluator(panel, ObjectiveConfig{});
  const auto result = random_search(evaluator, SearchBudget{300, 11});
  for (const auto& e : result.entries) {
    CHECK(std::abs(e.weights.values.sum() - 1.0) <= 1e-12);  // stored normalized
    const ObjectivePoint again = evaluator.evaluate(e.weights);
    CHECK(std::abs(again.sensitivity - e.point.sensitivity) <= 1e-10);
    CHECK(std::abs(again.directionality - e.point.directionality) <= 1e-10);
  }
}

TEST_CASE("bin spec validation and defaults") {
  CHECK_THROWS_AS(equal_width_bins(0.0), Error);
  const BinSpec spec = equal_width_bins(0.7, 14);
  CHECK(spec.edges.size() == 14);
  CHECK(spec.n_bins() == 13);
  CHECK(spec.edges(0) == 0.0);
  CHECK(spec.edges(13) == doctest::Approx(0.7));
  spec.validate();

  BinSpec bad;
  bad.edges = Eigen::Vector3d(0.1, 0.2, 0.3);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("binned search: infeasible bins and B=2 reduction") {
  auto cfg = preset("insensitive_ns", 20, 10, 3);
  cfg.seed = 31;
  const auto panel = simulate_panel(cfg).first;
  ObjectiveEvaluator evaluator(panel, ObjectiveConfig{});

  SUBCASE("a bin above the best achievable sensitivity is infeasible") {
    BinSpec unreachable;
    unreachable.edges = Eigen::Vector2d(0.0, 1e-9);  // nothing is this insensitive
    const auto result = binned_search(evaluator, unreachable, 60);
    CHECK(result.entries.empty());
    CHECK(result.infeasible_bins == std::vector<int>{0});
  }

  SUBCASE("B=2 with edges {0, 1} reduces to unconstrained maximization") {
    BinSpec whole;
    whole.edges = Eigen::Vector2d(0.0, 1.0 + 1e-12);
    const auto result = binned_search(evaluator, whole, 600);
    REQUIRE(result.entries.size() == 1);
    const auto unconstrained = direct_l_maximize(
        [&](const Eigen::VectorXd& x) {
          return evaluator.evaluate(WeightVector(x)).directionality;
        },
        3, 600);
    CHECK(result.entries.front().point.directionality ==
          doctest::Approx(unconstrained.value).epsilon(1e-9));
  }
}

TEST_CASE("binned search is deterministic across thread counts") {
  auto cfg = preset("insensitive_ns", 20, 10, 4);
  cfg.seed = 77;
  const auto panel = simulate_panel(cfg).first;
  ObjectiveEvaluator evaluator(panel, ObjectiveConfig{});
  const BinSpec spec = default_bin_spec(evaluator, 8);
  const auto a = binned_search(evaluator, spec, 300, 1);
  const auto b = binned_search(evaluator, spec, 300, 4);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].point.sensitivity == b.entries[i].point.sensitivity);
    CHECK(a.entries[i].point.directionality == b.entries[i].point.directionality);
    CHECK((a.entries[i].weights.values.array() == b.entries[i].weights.values.array()).all());
  }
  CHECK(a.infeasible_bins == b.infeasible_bins);
  CHECK(a.evaluations == b.evaluations);
}
