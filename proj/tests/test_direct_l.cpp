#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "proxyforge/direct_l.hpp"

using namespace proxyforge;

TEST_CASE("1-D quadratic optimum recovered within 0.005") {
  const auto result = direct_l_maximize(
      [](const Eigen::VectorXd& x) { return -(x(0) - 0.3) * (x(0) - 0.3); }, 1, 200);
  CHECK(std::abs(result.argmax(0) - 0.3) < 0.005);
  CHECK(result.evaluations <= 200);
}

TEST_CASE("constant objective returns the constant") {
  const auto result = direct_l_maximize([](const Eigen::VectorXd&) { return 3.5; }, 3, 100);
  CHECK(result.value == 3.5);
  CHECK(result.argmax.size() == 3);
  for (int d = 0; d < 3; ++d) {
    CHECK(result.argmax(d) >= 0.0);
    CHECK(result.argmax(d) <= 1.0);
  }
}

TEST_CASE("2-D quadratic optimum recovered within 0.01 per coordinate") {
  const auto result = direct_l_maximize(
      [](const Eigen::VectorXd& x) {
        return -(x(0) - 0.25) * (x(0) - 0.25) - (x(1) - 0.75) * (x(1) - 0.75);
      },
      2, 500);
  CHECK(std::abs(result.argmax(0) - 0.25) < 0.01);
  CHECK(std::abs(result.argmax(1) - 0.75) < 0.01);
}

TEST_CASE("multimodal objective still reaches the global optimum basin") {
  const auto result = direct_l_maximize(
      [](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (int i = 0; i < 2; ++i) {
          const double d = x(i) - 0.62;
          s += -d * d + 0.03 * std::cos(25.0 * d);
        }
        return s;
      },
      2, 2500);
  CHECK((result.argmax.array() - 0.62).abs().maxCoeff() < 0.02);
}

TEST_CASE("deterministic across runs") {
  auto f = [](const Eigen::VectorXd& x) {
    return std::sin(5.0 * x(0)) * std::cos(3.0 * x(1)) - 0.2 * x(2);
  };
  const auto a = direct_l_maximize(f, 3, 700);
  const auto b = direct_l_maximize(f, 3, 700);
  CHECK(a.value == b.value);
  CHECK(a.evaluations == b.evaluations);
  CHECK((a.argmax.array() == b.argmax.array()).all());
}

TEST_CASE("budget is respected exactly") {
  std::int64_t calls = 0;
  const auto result = direct_l_maximize(
      [&](const Eigen::VectorXd& x) {
        ++calls;
        return -x.squaredNorm();
      },
      2, 123);
  CHECK(calls <= 123);
  CHECK(result.evaluations == calls);
}

TEST_CASE("non-finite objectives and bad budgets are rejected") {
  CHECK_THROWS_AS(direct_l_maximize(
                      [](const Eigen::VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); },
                      2, 100),
                  Error);
  CHECK_THROWS_AS(direct_l_maximize([](const Eigen::VectorXd&) { return 0.0; }, 3, 6), Error);
}
