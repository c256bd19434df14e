#include "mlp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace declink {

namespace {

// Largest double below 1; keeps sigmoid outputs strictly inside (0, 1).
const double kSigmoidHi = std::nextafter(1.0, 0.0);
const double kSigmoidLo = std::numeric_limits<double>::min();

Mat sigmoid_mat(const Mat& z) {
  return z.unaryExpr([](double v) { return stable_sigmoid(v); });
}

Mat relu_mat(const Mat& z) {
  return z.cwiseMax(0.0);
}

void check_input_width(const MlpParams& params, const Mat& inputs) {
  if (params.w.empty()) fail(ErrorCode::InvalidArgument, "uninitialized MLP parameters");
  if (inputs.cols() != params.w.front().cols()) {
    std::ostringstream os;
    os << "input width " << inputs.cols() << " does not match first layer fan-in "
       << params.w.front().cols();
    fail(ErrorCode::Dimension, os.str());
  }
}

Mat forward_impl(const MlpParams& params, const Mat& inputs,
                 const std::vector<Mat>* masks, ForwardCache* cache) {
  check_input_width(params, inputs);
  const int layers = params.num_layers();
  if (cache) {
    cache->activations.clear();
    cache->preacts.clear();
    cache->masks.clear();
    cache->activations.push_back(inputs);
  }

  Mat a = inputs;
  for (int l = 0; l < layers; ++l) {
    Mat z = a * params.w[l].transpose();
    z.rowwise() += params.b[l].transpose();
    if (cache) cache->preacts.push_back(z);
    if (l + 1 < layers) {
      if (masks) {
        const Mat& m = (*masks)[l];
        if (m.rows() != z.rows() || m.cols() != z.cols())
          fail(ErrorCode::Dimension, "dropout mask shape mismatch");
        a = z.cwiseMax(0.0).cwiseProduct(m);
        if (cache) cache->masks.push_back(m);
      } else {
        a = relu_mat(z);
      }
    } else {
      a = sigmoid_mat(z);
    }
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

}  // namespace

double stable_sigmoid(double z) {
  double y;
  if (z >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    y = e / (1.0 + e);
  }
  if (y >= 1.0) y = kSigmoidHi;
  if (y <= 0.0) y = kSigmoidLo;
  return y;
}

void MlpArchitecture::validate() const {
  if (layer_sizes.size() < 2)
    fail(ErrorCode::InvalidArgument, "architecture needs at least input and output layers");
  for (int s : layer_sizes)
    if (s < 1) fail(ErrorCode::InvalidArgument, "layer sizes must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    fail(ErrorCode::Domain, "dropout rate must lie in [0, 1)");
}

void MlpParams::set_zero() {
  for (Mat& m : w) m.setZero();
  for (Vec& v : b) v.setZero();
}

MlpParams init_params(const MlpArchitecture& arch, Rng& rng) {
  arch.validate();
  MlpParams p;
  for (int l = 0; l + 1 < static_cast<int>(arch.layer_sizes.size()); ++l) {
    const int fan_in = arch.layer_sizes[l];
    const int fan_out = arch.layer_sizes[l + 1];
    Mat w(fan_out, fan_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = scale * rng.normal01();
    p.w.push_back(std::move(w));
    p.b.push_back(Vec::Zero(fan_out));
  }
  return p;
}

Mat mlp_forward(const MlpParams& params, const Mat& inputs, ForwardCache* cache) {
  return forward_impl(params, inputs, nullptr, cache);
}

Mat mlp_forward_train(const MlpParams& params, const Mat& inputs, double dropout_rate,
                      Rng& rng, ForwardCache* cache) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    fail(ErrorCode::Domain, "dropout rate must lie in [0, 1)");
  if (dropout_rate == 0.0) return forward_impl(params, inputs, nullptr, cache);

  const double keep = 1.0 - dropout_rate;
  const double inv_keep = 1.0 / keep;
  std::vector<Mat> masks;
  masks.reserve(params.w.size() - 1);
  for (int l = 0; l + 1 < params.num_layers(); ++l) {
    Mat m(inputs.rows(), params.w[l].rows());
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r)
        m(r, c) = rng.uniform01() < keep ? inv_keep : 0.0;
    masks.push_back(std::move(m));
  }
  return forward_impl(params, inputs, &masks, cache);
}

Mat mlp_forward_masked(const MlpParams& params, const Mat& inputs,
                       const std::vector<Mat>& masks, ForwardCache* cache) {
  if (static_cast<int>(masks.size()) != params.num_layers() - 1)
    fail(ErrorCode::Dimension, "need one dropout mask per hidden layer");
  return forward_impl(params, inputs, &masks, cache);
}

MlpGrads mlp_backward(const MlpParams& params, const ForwardCache& cache,
                      const Mat& output_grad) {
  const int layers = params.num_layers();
  if (static_cast<int>(cache.activations.size()) != layers + 1 ||
      static_cast<int>(cache.preacts.size()) != layers) {
    fail(ErrorCode::InvalidArgument, "forward cache does not match parameters");
  }
  const Mat& y = cache.activations.back();
  if (output_grad.rows() != y.rows() || output_grad.cols() != y.cols())
    fail(ErrorCode::Dimension, "output gradient shape mismatch");
  const bool dropped = !cache.masks.empty();
  if (dropped && static_cast<int>(cache.masks.size()) != layers - 1)
    fail(ErrorCode::InvalidArgument, "cache is missing dropout masks");

  MlpGrads grads;
  grads.w.resize(layers);
  grads.b.resize(layers);

  // Output layer: sigmoid' = y (1 - y) from the cached activation.
  Mat delta = output_grad.cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
  for (int l = layers - 1; l >= 0; --l) {
    grads.w[l] = delta.transpose() * cache.activations[l];
    grads.b[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Mat upstream = delta * params.w[l];
    if (dropped) upstream = upstream.cwiseProduct(cache.masks[l - 1]);
    // ReLU': 1 where the pre-activation was positive.
    const Mat& z = cache.preacts[l - 1];
    delta = upstream.cwiseProduct(
        z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  }
  return grads;
}

AdamState AdamState::like(const MlpParams& params) {
  AdamState s;
  for (const Mat& w : params.w) {
    s.m_w.push_back(Mat::Zero(w.rows(), w.cols()));
    s.v_w.push_back(Mat::Zero(w.rows(), w.cols()));
  }
  for (const Vec& b : params.b) {
    s.m_b.push_back(Vec::Zero(b.size()));
    s.v_b.push_back(Vec::Zero(b.size()));
  }
  return s;
}

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state,
               double learning_rate, StepDirection direction) {
  if (grads.w.size() != params.w.size() || grads.b.size() != params.b.size())
    fail(ErrorCode::Dimension, "gradient shape does not match parameters");
  for (const Mat& g : grads.w)
    if (!g.allFinite()) fail(ErrorCode::Diverged, "non-finite weight gradient");
  for (const Vec& g : grads.b)
    if (!g.allFinite()) fail(ErrorCode::Diverged, "non-finite bias gradient");

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double sign = direction == StepDirection::Ascent ? 1.0 : -1.0;

  for (std::size_t l = 0; l < params.w.size(); ++l) {
    state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.w[l];
    state.v_w[l] = state.beta2 * state.v_w[l] +
                   (1.0 - state.beta2) * grads.w[l].cwiseProduct(grads.w[l]);
    const Mat m_hat = state.m_w[l] / bc1;
    const Mat v_hat = state.v_w[l] / bc2;
    const Mat denom =
        v_hat.cwiseSqrt() + Mat::Constant(m_hat.rows(), m_hat.cols(), state.epsilon);
    params.w[l] += sign * learning_rate * m_hat.cwiseQuotient(denom);
  }
  for (std::size_t l = 0; l < params.b.size(); ++l) {
    state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.b[l];
    state.v_b[l] = state.beta2 * state.v_b[l] +
                   (1.0 - state.beta2) * grads.b[l].cwiseProduct(grads.b[l]);
    const Vec m_hat = state.m_b[l] / bc1;
    const Vec v_hat = state.v_b[l] / bc2;
    params.b[l] += sign * learning_rate *
                   m_hat.cwiseQuotient(v_hat.cwiseSqrt() +
                                       Vec::Constant(m_hat.size(), state.epsilon));
  }
}

MlpGrads finite_diff_grad(const std::function<double(const MlpParams&)>& f,
                          const MlpParams& params, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorCode::Domain, "epsilon must be > 0");
  MlpParams probe = params;
  MlpGrads grads = params;
  grads.set_zero();
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    for (int r = 0; r < params.w[l].rows(); ++r) {
      for (int c = 0; c < params.w[l].cols(); ++c) {
        const double saved = probe.w[l](r, c);
        probe.w[l](r, c) = saved + epsilon;
        const double up = f(probe);
        probe.w[l](r, c) = saved - epsilon;
        const double down = f(probe);
        probe.w[l](r, c) = saved;
        grads.w[l](r, c) = (up - down) / (2.0 * epsilon);
      }
    }
    for (int r = 0; r < params.b[l].size(); ++r) {
      const double saved = probe.b[l](r);
      probe.b[l](r) = saved + epsilon;
      const double up = f(probe);
      probe.b[l](r) = saved - epsilon;
      const double down = f(probe);
      probe.b[l](r) = saved;
      grads.b[l](r) = (up - down) / (2.0 * epsilon);
    }
  }
  return grads;
}

}  // namespace declink
