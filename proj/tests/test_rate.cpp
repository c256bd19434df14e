#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "rate.hpp"
#include "rng.hpp"

using namespace declink;

namespace {

// Test-local reference: direct transcription of the per-link SINR formula,
// kept independent of the library implementation.
double reference_sum_rate(const Mat& g, const Vec& p, double noise) {
  double total = 0.0;
  for (int i = 0; i < g.rows(); ++i) {
    double den = noise;
    for (int l = 0; l < g.cols(); ++l)
      if (l != i) den += g(i, l) * p(l);
    total += std::log2(1.0 + g(i, i) * p(i) / den);
  }
  return total;
}

Mat random_gains(int k, Rng& rng) {
  Mat g(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = rng.exp_unit_mean();
  return g;
}

double rel_norm_error(const Vec& a, const Vec& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / denom;
}

}  // namespace

TEST_CASE("sum_rate on the no-interference unit-SNR pair") {
  Mat g = Mat::Identity(2, 2);
  Vec p = Vec::Ones(2);
  CHECK(sum_rate(g, p) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sum_rate is zero when nobody transmits") {
  Mat g = Mat::Constant(3, 3, 2.5);
  CHECK(sum_rate(g, Vec::Zero(3)) == 0.0);
}

TEST_CASE("sum_rate with full interference, frozen value") {
  // K=2, all gains 1, both at power 1: 2*log2(1 + 1/2).
  Mat g = Mat::Ones(2, 2);
  Vec p = Vec::Ones(2);
  const double expected = 2.0 * std::log2(1.5);
  CHECK(sum_rate(g, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(sum_rate(g, p) == doctest::Approx(1.16992500144231).epsilon(1e-12));
}

TEST_CASE("sum_rate agrees with the reference transcription") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(4));
    const Mat g = random_gains(k, rng);
    Vec p(k);
    for (int j = 0; j < k; ++j) p(j) = rng.uniform01() * 2.0;
    CHECK(sum_rate(g, p, 0.7) == doctest::Approx(reference_sum_rate(g, p, 0.7)).epsilon(1e-13));
  }
}

TEST_CASE("sum_rate rejects negative inputs") {
  Mat g = Mat::Identity(2, 2);
  Vec p = Vec::Ones(2);
  p(0) = -1.0;
  CHECK_THROWS_AS(sum_rate(g, p), Error);
  p(0) = 1.0;
  g(0, 1) = -0.5;
  CHECK_THROWS_AS(sum_rate(g, p), Error);
  CHECK_THROWS_AS(sum_rate(Mat::Identity(2, 2), Vec::Ones(2), 0.0), Error);
}

TEST_CASE("removing interference never hurts") {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const Mat g = random_gains(k, rng);
    Vec p(k);
    for (int j = 0; j < k; ++j) p(j) = rng.uniform01();
    const Mat diag = g.diagonal().asDiagonal();
    CHECK(sum_rate(diag, p) >= sum_rate(g, p) - 1e-12);
  }
}

TEST_CASE("single-user gradient at full power") {
  Mat g = Mat::Constant(1, 1, 1.0);
  Vec f = Vec::Constant(1, 1.0);
  const RateGrad rg = relaxed_sum_rate_with_grad(g, f, 1.0);
  CHECK(rg.grad(0) == doctest::Approx(1.0 / (2.0 * std::log(2.0))).epsilon(1e-12));
}

TEST_CASE("gradient at the origin for a diagonal channel") {
  Mat g = Mat::Zero(3, 3);
  g(0, 0) = 0.5;
  g(1, 1) = 2.0;
  g(2, 2) = 1.25;
  const double p_max = 1.5;
  const RateGrad rg = relaxed_sum_rate_with_grad(g, Vec::Zero(3), p_max);
  for (int j = 0; j < 3; ++j) {
    CHECK(rg.grad(j) == doctest::Approx(g(j, j) * p_max / std::log(2.0)).epsilon(1e-12));
    CHECK(rg.grad(j) > 0.0);
  }
}

TEST_CASE("relaxed rate matches binary decisions exactly at the endpoints") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(4));
    const Mat g = random_gains(k, rng);
    Vec f(k);
    PowerDecision d;
    d.p_max = 1.7;
    d.on.resize(k);
    for (int j = 0; j < k; ++j) {
      d.on[j] = rng.uniform01() < 0.5 ? 1 : 0;
      f(j) = d.on[j] ? 1.0 : 0.0;
    }
    const RateGrad rg = relaxed_sum_rate_with_grad(g, f, d.p_max);
    CHECK(rg.rate == sum_rate(g, d.powers()));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(24);
  const double eps = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(4));
    const Mat g = random_gains(k, rng);
    Vec f(k);
    for (int j = 0; j < k; ++j) f(j) = 0.05 + 0.9 * rng.uniform01();
    const double p_max = 0.5 + rng.uniform01();

    const RateGrad rg = relaxed_sum_rate_with_grad(g, f, p_max);
    Vec fd(k);
    for (int j = 0; j < k; ++j) {
      Vec up = f, down = f;
      up(j) += eps;
      down(j) -= eps;
      fd(j) = (relaxed_sum_rate_with_grad(g, up, p_max).rate -
               relaxed_sum_rate_with_grad(g, down, p_max).rate) /
              (2.0 * eps);
    }
    CHECK(rel_norm_error(fd, rg.grad) < 1e-5);
  }
}

TEST_CASE("exhaustive search on the single-user channel transmits") {
  Mat g = Mat::Constant(1, 1, 0.3);
  const PowerDecision d = exhaustive_best(g, 1.0);
  CHECK(d.on[0] == 1);
}

TEST_CASE("strong cross-talk pair activates exactly one TX, tie-broken low") {
  Mat g(2, 2);
  g << 1.0, 10.0, 10.0, 1.0;
  // The four schedules: off (0), TX2 only (1.0), TX1 only (1.0),
  // both (2 log2(12/11) ~ 0.251). The two single-TX codes tie at 1.0 and the
  // smaller encoding (TX1 silent, TX2 active) wins.
  const PowerDecision d = exhaustive_best(g, 1.0);
  CHECK(d.on[0] == 0);
  CHECK(d.on[1] == 1);
  CHECK(sum_rate(g, d.powers()) == doctest::Approx(1.0).epsilon(1e-12));
  const Vec both = Vec::Ones(2);
  CHECK(sum_rate(g, both) == doctest::Approx(2.0 * std::log2(12.0 / 11.0)).epsilon(1e-12));
}

TEST_CASE("weak cross-talk pair keeps both TXs on") {
  Mat g(2, 2);
  g << 1.0, 0.01, 0.01, 1.0;
  const PowerDecision d = exhaustive_best(g, 1.0);
  CHECK(d.on[0] == 1);
  CHECK(d.on[1] == 1);
}

TEST_CASE("exhaustive value dominates random binary schedules") {
  Rng rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const Mat g = random_gains(k, rng);
    const PowerDecision best = exhaustive_best(g, 1.0);
    const double best_rate = sum_rate(g, best.powers());
    for (int probe = 0; probe < 1000; ++probe) {
      PowerDecision d;
      d.p_max = 1.0;
      d.on.resize(k);
      for (int j = 0; j < k; ++j) d.on[j] = rng.uniform01() < 0.5 ? 1 : 0;
      CHECK(best_rate >= sum_rate(g, d.powers()) - 1e-12);
    }
  }
}

TEST_CASE("exhaustive search rejects oversized problems") {
  const int k = kMaxExhaustiveUsers + 1;
  try {
    exhaustive_best(Mat::Identity(k, k), 1.0);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Capacity);
  }
}

TEST_CASE("naive scheduling with an exact estimate reproduces the optimum") {
  Rng rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat g = random_gains(3, rng);
    const PowerDecision best = exhaustive_best(g, 1.0);
    for (int j = 0; j < 3; ++j)
      CHECK(naive_decision(g, j, 1.0) == (best.on[j] != 0));
  }
}

TEST_CASE("naive single-user always transmits") {
  Mat g = Mat::Constant(1, 1, 2.0);
  CHECK(naive_decision(g, 0, 1.0));
}

TEST_CASE("naive components follow the tie-broken full decision") {
  Mat g(2, 2);
  g << 1.0, 10.0, 10.0, 1.0;
  CHECK_FALSE(naive_decision(g, 0, 1.0));
  CHECK(naive_decision(g, 1, 1.0));
}

TEST_CASE("tdma activates exactly the requested TX") {
  const PowerDecision d = tdma_decision(1, 3, 2.0);
  CHECK(d.on == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(d.powers()(1) == 2.0);
  const PowerDecision single = tdma_decision(0, 1, 1.0);
  CHECK(single.on == std::vector<std::uint8_t>{1});
  CHECK_THROWS_AS(tdma_decision(3, 3, 1.0), Error);
}

TEST_CASE("always_on schedules every TX") {
  CHECK(always_on(2, 1.0).on == std::vector<std::uint8_t>{1, 1});
  CHECK(always_on(3, 1.0).on == std::vector<std::uint8_t>{1, 1, 1});
}

TEST_CASE("always_on never beats the exhaustive optimum") {
  Rng rng(27);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat g = random_gains(3, rng);
    const PowerDecision best = exhaustive_best(g, 1.0);
    CHECK(sum_rate(g, best.powers()) >= sum_rate(g, always_on(3, 1.0).powers()) - 1e-12);
  }
}
