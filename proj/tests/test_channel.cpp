#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "channel.hpp"
#include "errors.hpp"

using namespace declink;

namespace {

CsiNoiseSpec uniform_noise(int k, double sigma, bool shared = false) {
  std::vector<Mat> s(static_cast<std::size_t>(k), Mat::Constant(k, k, sigma));
  return CsiNoiseSpec::from_sigma(std::move(s), shared);
}

}  // namespace

TEST_CASE("sigma_bar endpoints and the 0.6/0.8 pair") {
  CHECK(sigma_bar(Mat::Zero(2, 2)).isApprox(Mat::Ones(2, 2), 0.0));
  CHECK(sigma_bar(Mat::Ones(2, 2)).isApprox(Mat::Zero(2, 2), 0.0));
  Mat s = Mat::Constant(1, 1, 0.6);
  CHECK(sigma_bar(s)(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("sigma_bar is the exact complement") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Mat s(3, 3);
    for (int i = 0; i < 9; ++i) s(i / 3, i % 3) = rng.uniform01();
    const Mat bar = sigma_bar(s);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(bar(i, j) * bar(i, j) + s(i, j) * s(i, j) - 1.0) <= 1e-12);
  }
}

TEST_CASE("sigma_bar rejects out-of-range entries and names the index") {
  Mat s = Mat::Zero(2, 2);
  s(1, 0) = 1.5;
  try {
    sigma_bar(s);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
    CHECK(std::string(e.what()).find("(1,0)") != std::string::npos);
  }
}

TEST_CASE("sample_gains honours a zero variance spec") {
  Rng rng(1);
  const Mat g = sample_gains(3, GainVarianceSpec{Mat::Zero(3, 3)}, rng);
  CHECK(g.isZero(0.0));
}

TEST_CASE("sample_gains has unit mean per entry") {
  const int n = 1000000;
  Rng rng(2);
  const GainVarianceSpec var = GainVarianceSpec::ones(2);
  Mat mean = Mat::Zero(2, 2);
  for (int i = 0; i < n; ++i) mean += sample_gains(2, var, rng);
  mean /= static_cast<double>(n);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(mean(i, j) >= 0.99);
      CHECK(mean(i, j) <= 1.01);
    }
}

TEST_CASE("sample_gains scales the mean by the variance entry") {
  const int n = 1000000;
  Rng rng(3);
  GainVarianceSpec var = GainVarianceSpec::ones(2);
  var.variances(0, 1) = 0.25;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += sample_gains(2, var, rng)(0, 1);
  mean /= static_cast<double>(n);
  CHECK(mean >= 0.2475);
  CHECK(mean <= 0.2525);
}

TEST_CASE("mix_estimate matches the fixed-draw example") {
  // sigma 0.6, gain 2.0, noise draw 1.0 -> 0.8*2.0 + 0.6*1.0
  const Mat g = Mat::Constant(1, 1, 2.0);
  const Mat s = Mat::Constant(1, 1, 0.6);
  const Mat d = Mat::Constant(1, 1, 1.0);
  CHECK(mix_estimate(g, s, d)(0, 0) == doctest::Approx(2.2).epsilon(1e-12));
}

TEST_CASE("zero noise reproduces the gains bit-exactly") {
  Rng rng(4);
  const GainVarianceSpec var = GainVarianceSpec::ones(3);
  const CsiNoiseSpec noise = uniform_noise(3, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat g = sample_gains(3, var, rng);
    const auto est = sample_estimates(g, var, noise, rng);
    for (const Mat& e : est) CHECK((e.array() == g.array()).all());
  }
}

TEST_CASE("estimates stay nonnegative under the exponential noise family") {
  Rng rng(5);
  const GainVarianceSpec var = GainVarianceSpec::ones(2);
  const CsiNoiseSpec noise = uniform_noise(2, 0.7);
  for (int trial = 0; trial < 500; ++trial) {
    const Mat g = sample_gains(2, var, rng);
    for (const Mat& e : sample_estimates(g, var, noise, rng))
      CHECK((e.array() >= 0.0).all());
  }
}

TEST_CASE("estimate/gain correlation tracks sigma_bar") {
  const int n = 100000;
  const double sigma = 0.6;
  Rng rng(6);
  const GainVarianceSpec var = GainVarianceSpec::ones(2);
  const CsiNoiseSpec noise = uniform_noise(2, sigma);
  double sg = 0.0, se = 0.0, sgg = 0.0, see = 0.0, sge = 0.0;
  for (int i = 0; i < n; ++i) {
    const Mat g = sample_gains(2, var, rng);
    const Mat e = sample_estimates(g, var, noise, rng)[0];
    sg += g(0, 0);
    se += e(0, 0);
    sgg += g(0, 0) * g(0, 0);
    see += e(0, 0) * e(0, 0);
    sge += g(0, 0) * e(0, 0);
  }
  const double cov = sge / n - (sg / n) * (se / n);
  const double vg = sgg / n - (sg / n) * (sg / n);
  const double ve = see / n - (se / n) * (se / n);
  const double corr = cov / std::sqrt(vg * ve);
  CHECK(std::abs(corr - std::sqrt(1.0 - sigma * sigma)) <= 0.02);
}

TEST_CASE("sigma = 1 yields estimates independent of the gains") {
  const int n = 100000;
  Rng rng(7);
  const GainVarianceSpec var = GainVarianceSpec::ones(2);
  const CsiNoiseSpec noise = uniform_noise(2, 1.0);
  double sg = 0.0, se = 0.0, sgg = 0.0, see = 0.0, sge = 0.0;
  for (int i = 0; i < n; ++i) {
    const Mat g = sample_gains(2, var, rng);
    const Mat e = sample_estimates(g, var, noise, rng)[0];
    sg += g(0, 0);
    se += e(0, 0);
    sgg += g(0, 0) * g(0, 0);
    see += e(0, 0) * e(0, 0);
    sge += g(0, 0) * e(0, 0);
  }
  const double cov = sge / n - (sg / n) * (se / n);
  const double vg = sgg / n - (sg / n) * (sg / n);
  const double ve = see / n - (se / n) * (se / n);
  CHECK(std::abs(cov / std::sqrt(vg * ve)) <= 0.02);
}

TEST_CASE("sample_estimates rejects mismatched dimensions") {
  Rng rng(8);
  const GainVarianceSpec var = GainVarianceSpec::ones(3);
  const CsiNoiseSpec noise = uniform_noise(2, 0.5);
  const Mat g = Mat::Ones(3, 3);
  CHECK_THROWS_AS(sample_estimates(g, var, noise, rng), Error);
}

TEST_CASE("batches are deterministic and order-independent") {
  const GainVarianceSpec var = GainVarianceSpec::ones(2);
  const CsiNoiseSpec noise = uniform_noise(2, 0.4);
  const auto a = sample_batch(64, 2, var, noise, 123);
  const auto b = sample_batch(64, 2, var, noise, 123);
  REQUIRE(a.size() == 64);
  for (int i = 0; i < 64; ++i) {
    CHECK((a[i].gains.array() == b[i].gains.array()).all());
    for (int j = 0; j < 2; ++j)
      CHECK((a[i].estimates[j].array() == b[i].estimates[j].array()).all());
    // Regenerating any single sample in isolation gives the same draw, so a
    // partitioned parallel generator produces the same batch.
    const ChannelSample solo = sample_one(i, 2, var, noise, 123);
    CHECK((solo.gains.array() == a[i].gains.array()).all());
    for (int j = 0; j < 2; ++j)
      CHECK((solo.estimates[j].array() == a[i].estimates[j].array()).all());
  }
  const auto c = sample_batch(64, 2, var, noise, 124);
  CHECK_FALSE((c[0].gains.array() == a[0].gains.array()).all());
}

TEST_CASE("single-sample batches carry consistent dimensions") {
  const auto batch =
      sample_batch(1, 3, GainVarianceSpec::ones(3), uniform_noise(3, 0.2), 9);
  REQUIRE(batch.size() == 1);
  CHECK(batch[0].gains.rows() == 3);
  CHECK(batch[0].gains.cols() == 3);
  REQUIRE(batch[0].estimates.size() == 3);
  for (const Mat& e : batch[0].estimates) {
    CHECK(e.rows() == 3);
    CHECK(e.cols() == 3);
  }
}

TEST_CASE("training-scale batch generation") {
  const auto batch =
      sample_batch(30000, 2, GainVarianceSpec::ones(2), uniform_noise(2, 0.5), 10);
  CHECK(batch.size() == 30000);
}

TEST_CASE("shared noise draws make equal-sigma estimates coincide") {
  Rng rng(12);
  const GainVarianceSpec var = GainVarianceSpec::ones(2);
  const CsiNoiseSpec noise = uniform_noise(2, 0.8, /*shared=*/true);
  const Mat g = sample_gains(2, var, rng);
  const auto est = sample_estimates(g, var, noise, rng);
  CHECK((est[0].array() == est[1].array()).all());

  const CsiNoiseSpec indep = uniform_noise(2, 0.8, /*shared=*/false);
  Rng rng2(12);
  const Mat g2 = sample_gains(2, var, rng2);
  const auto est2 = sample_estimates(g2, var, indep, rng2);
  CHECK_FALSE((est2[0].array() == est2[1].array()).all());
}
