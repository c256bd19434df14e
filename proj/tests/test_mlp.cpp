#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "errors.hpp"
#include "mlp.hpp"

using namespace declink;

namespace {

MlpArchitecture arch_of(std::vector<int> sizes, double dropout = 0.0) {
  MlpArchitecture a;
  a.layer_sizes = std::move(sizes);
  a.dropout_rate = dropout;
  return a;
}

double rel_norm_error(const MlpGrads& a, const MlpGrads& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t l = 0; l < a.w.size(); ++l) {
    diff += (a.w[l] - b.w[l]).squaredNorm() + (a.b[l] - b.b[l]).squaredNorm();
    na += a.w[l].squaredNorm() + a.b[l].squaredNorm();
    nb += b.w[l].squaredNorm() + b.b[l].squaredNorm();
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

}  // namespace

TEST_CASE("stable sigmoid stays strictly inside (0,1)") {
  CHECK(stable_sigmoid(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double z : {-500.0, -50.0, -1.0, 1.0, 50.0, 500.0}) {
    const double y = stable_sigmoid(z);
    CHECK(y > 0.0);
    CHECK(y < 1.0);
    CHECK(std::isfinite(y));
  }
  CHECK(stable_sigmoid(2.0) > stable_sigmoid(1.0));
}

TEST_CASE("init draws zero biases and seed-deterministic weights") {
  const MlpArchitecture arch = arch_of({4, 8, 2});
  Rng a(42), b(42), c(43);
  const MlpParams pa = init_params(arch, a);
  const MlpParams pb = init_params(arch, b);
  const MlpParams pc = init_params(arch, c);
  for (std::size_t l = 0; l < pa.w.size(); ++l) {
    CHECK((pa.w[l].array() == pb.w[l].array()).all());
    CHECK(pa.b[l].isZero(0.0));
  }
  CHECK_FALSE((pa.w[0].array() == pc.w[0].array()).all());
}

TEST_CASE("init weight variance is close to 1/fan_in") {
  const int fan_in = 50, fan_out = 200;  // 10^4 entries
  Rng rng(7);
  const MlpParams p = init_params(arch_of({fan_in, fan_out}), rng);
  const double mean = p.w[0].mean();
  const double var = (p.w[0].array() - mean).square().mean();
  const double target = 1.0 / fan_in;
  CHECK(var > 0.8 * target);
  CHECK(var < 1.2 * target);
}

TEST_CASE("all-zero parameters produce 0.5 outputs") {
  MlpParams p;
  Rng rng(1);
  p = init_params(arch_of({3, 5, 2}), rng);
  p.set_zero();
  const Mat y = mlp_forward(p, Mat::Random(4, 3));
  CHECK((y.array() == 0.5).all());
}

TEST_CASE("identity hidden layer applies the ramp nonlinearity") {
  MlpParams p;
  p.w = {Mat::Identity(2, 2), Mat::Ones(1, 2)};
  p.b = {Vec::Zero(2), Vec::Zero(1)};
  Mat x(1, 2);
  x << -1.0, 2.0;
  ForwardCache cache;
  mlp_forward(p, x, &cache);
  CHECK(cache.activations[1](0, 0) == 0.0);
  CHECK(cache.activations[1](0, 1) == 2.0);
}

TEST_CASE("eval forward equals an independent layer-by-layer recomposition") {
  Rng rng(9);
  const MlpParams p = init_params(arch_of({4, 6, 5, 3}), rng);
  Mat x(7, 4);
  for (int i = 0; i < x.size(); ++i) x(i / 4, i % 4) = rng.normal01();

  Mat a = x;
  for (int l = 0; l < 3; ++l) {
    Mat z = a * p.w[l].transpose();
    z.rowwise() += p.b[l].transpose();
    if (l < 2) {
      a = z.cwiseMax(0.0);
    } else {
      a = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
  }
  const Mat y = mlp_forward(p, x);
  CHECK((y - a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eval forward is a pure function") {
  Rng rng(10);
  const MlpParams p = init_params(arch_of({4, 6, 1}), rng);
  const Mat x = Mat::Random(3, 4);
  const Mat y1 = mlp_forward(p, x);
  const Mat y2 = mlp_forward(p, x);
  CHECK((y1.array() == y2.array()).all());
}

TEST_CASE("forward rejects mismatched input width") {
  Rng rng(11);
  const MlpParams p = init_params(arch_of({4, 6, 1}), rng);
  CHECK_THROWS_AS(mlp_forward(p, Mat::Random(3, 5)), Error);
}

TEST_CASE("inverted dropout is mean-preserving") {
  // One hidden unit with a known positive activation; average the masked
  // rescaled activation over many mask draws.
  MlpParams p;
  p.w = {Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)};
  p.b = {Vec::Zero(1), Vec::Zero(1)};
  const Mat x = Mat::Constant(1, 1, 3.0);
  const double dropout = 0.5;
  Rng rng(12);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    ForwardCache cache;
    mlp_forward_train(p, x, dropout, rng, &cache);
    const double masked = cache.activations[1](0, 0);
    CHECK((masked == 0.0 || masked == doctest::Approx(6.0).epsilon(1e-12)));
    sum += masked;
  }
  CHECK(std::abs(sum / draws - 3.0) / 3.0 < 0.02);
}

TEST_CASE("backward on zero output gradient is zero") {
  Rng rng(13);
  const MlpParams p = init_params(arch_of({3, 4, 2}), rng);
  ForwardCache cache;
  mlp_forward(p, Mat::Random(5, 3), &cache);
  const MlpGrads g = mlp_backward(p, cache, Mat::Zero(5, 2));
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    CHECK(g.w[l].isZero(0.0));
    CHECK(g.b[l].isZero(0.0));
  }
}

TEST_CASE("backward matches finite differences on random nets") {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const MlpParams p = init_params(arch_of({4, 10, 8, 1}), rng);
    Mat x(3, 4);
    for (int i = 0; i < x.size(); ++i) x(i / 4, i % 4) = rng.normal01();
    Mat dout(3, 1);
    for (int i = 0; i < 3; ++i) dout(i, 0) = rng.normal01();

    ForwardCache cache;
    mlp_forward(p, x, &cache);
    const MlpGrads analytic = mlp_backward(p, cache, dout);
    const MlpGrads fd = finite_diff_grad(
        [&](const MlpParams& q) {
          return (mlp_forward(q, x).cwiseProduct(dout)).sum();
        },
        p, 1e-5);
    CHECK(rel_norm_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("backward under a fixed dropout mask matches the masked oracle") {
  Rng rng(15);
  MlpParams p = init_params(arch_of({4, 10, 8, 1}), rng);
  // Nonzero biases keep masked-out units away from the exact ramp kink,
  // where a central difference would probe both one-sided slopes.
  for (Vec& b : p.b)
    for (int i = 0; i < b.size(); ++i) b(i) = 0.1 * rng.normal01();
  Mat x(4, 4);
  for (int i = 0; i < x.size(); ++i) x(i / 4, i % 4) = rng.normal01();
  const Mat dout = Mat::Ones(4, 1);

  Rng mask_rng(99);
  ForwardCache cache;
  mlp_forward_train(p, x, 0.5, mask_rng, &cache);
  const std::vector<Mat> masks = cache.masks;
  const MlpGrads analytic = mlp_backward(p, cache, dout);
  const MlpGrads fd = finite_diff_grad(
      [&](const MlpParams& q) {
        return (mlp_forward_masked(q, x, masks).cwiseProduct(dout)).sum();
      },
      p, 1e-5);
  CHECK(rel_norm_error(analytic, fd) < 1e-4);
}

TEST_CASE("dead ramp units receive no incoming-weight gradient") {
  MlpParams p;
  p.w = {Mat::Identity(2, 2), Mat::Ones(1, 2)};
  p.b = {Vec::Zero(2), Vec::Zero(1)};
  Mat x(1, 2);
  x << -3.0, 2.0;  // unit 0 is dead (pre-activation -3)
  ForwardCache cache;
  mlp_forward(p, x, &cache);
  const MlpGrads g = mlp_backward(p, cache, Mat::Ones(1, 1));
  CHECK(g.w[0].row(0).isZero(0.0));
  CHECK(g.b[0](0) == 0.0);
  CHECK_FALSE(g.w[0].row(1).isZero(0.0));
}

TEST_CASE("first Adam step moves by almost exactly the learning rate") {
  MlpParams p;
  p.w = {Mat::Zero(1, 1)};
  p.b = {Vec::Zero(1)};
  MlpGrads g;
  g.w = {Mat::Constant(1, 1, 1.0)};
  g.b = {Vec::Zero(1)};
  AdamState state = AdamState::like(p);
  adam_step(p, g, state, 0.001, StepDirection::Descent);
  // m_hat = v_hat = 1 at t=1, so the step is lr / (1 + eps).
  CHECK(p.w[0](0, 0) == doctest::Approx(-0.000999999990).epsilon(1e-9));
  CHECK(state.step_count == 1);
  adam_step(p, g, state, 0.001, StepDirection::Descent);
  CHECK(state.step_count == 2);
}

TEST_CASE("Adam with zero gradients leaves parameters unchanged") {
  Rng rng(16);
  MlpParams p = init_params(arch_of({3, 4, 1}), rng);
  const MlpParams before = p;
  MlpGrads g = p;
  g.set_zero();
  AdamState state = AdamState::like(p);
  for (int i = 0; i < 10; ++i) adam_step(p, g, state, 0.01, StepDirection::Descent);
  for (std::size_t l = 0; l < p.w.size(); ++l)
    CHECK((p.w[l].array() == before.w[l].array()).all());
}

TEST_CASE("Adam ascent moves parameters along the gradient") {
  MlpParams p;
  p.w = {Mat::Zero(1, 1)};
  p.b = {Vec::Zero(1)};
  MlpGrads g;
  g.w = {Mat::Constant(1, 1, 2.0)};
  g.b = {Vec::Zero(1)};
  AdamState state = AdamState::like(p);
  adam_step(p, g, state, 0.001, StepDirection::Ascent);
  CHECK(p.w[0](0, 0) > 0.0);
}

TEST_CASE("Adam rejects non-finite gradients") {
  MlpParams p;
  p.w = {Mat::Zero(1, 1)};
  p.b = {Vec::Zero(1)};
  MlpGrads g = p;
  g.w[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState state = AdamState::like(p);
  try {
    adam_step(p, g, state, 0.001, StepDirection::Descent);
    FAIL("expected divergence error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Diverged);
  }
}

TEST_CASE("finite differences recover simple calculus") {
  MlpParams p;
  p.w = {Mat::Constant(1, 1, 3.0)};
  p.b = {Vec::Zero(1)};
  const MlpGrads quad = finite_diff_grad(
      [](const MlpParams& q) { return 0.5 * q.w[0](0, 0) * q.w[0](0, 0); }, p, 1e-4);
  CHECK(quad.w[0](0, 0) == doctest::Approx(3.0).epsilon(1e-8));
  const MlpGrads lin = finite_diff_grad(
      [](const MlpParams& q) { return 2.5 * q.w[0](0, 0) + 1.0; }, p, 1e-4);
  CHECK(lin.w[0](0, 0) == doctest::Approx(2.5).epsilon(1e-10));
}
