#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "channel.hpp"
#include "rng.hpp"

namespace declink {

// Fully connected net: ReLU hidden layers, one sigmoid output layer.
// layer_sizes runs input..output and has at least two entries.
struct MlpArchitecture {
  std::vector<int> layer_sizes;
  double dropout_rate = 0.0;

  int input_width() const { return layer_sizes.front(); }
  int output_width() const { return layer_sizes.back(); }
  int num_weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  void validate() const;
};

// Per layer: weights (fan_out x fan_in) and bias (fan_out).
struct MlpParams {
  std::vector<Mat> w;
  std::vector<Vec> b;

  int num_layers() const { return static_cast<int>(w.size()); }
  void set_zero();
};

using MlpGrads = MlpParams;

// Everything backward needs from the matching forward pass. Activations are
// batch-major (one sample per row); masks hold 0 or 1/keep for hidden layers
// and are empty for eval-mode passes.
struct ForwardCache {
  std::vector<Mat> activations;  // activations[0] = input batch
  std::vector<Mat> preacts;      // preacts[l] feeds layer l's nonlinearity
  std::vector<Mat> masks;        // one per hidden layer; empty when not dropping
};

// Numerically stable logistic sigmoid, clamped to the open interval (0, 1).
double stable_sigmoid(double z);

// Zero-mean normal weights with std 1/sqrt(fan_in); zero biases.
MlpParams init_params(const MlpArchitecture& arch, Rng& rng);

// Deterministic eval-mode pass (no dropout). X is batch x input.
Mat mlp_forward(const MlpParams& params, const Mat& inputs, ForwardCache* cache = nullptr);

// Train-mode pass: inverted dropout on hidden activations with keep
// probability 1 - dropout_rate, rescaled by 1/keep.
Mat mlp_forward_train(const MlpParams& params, const Mat& inputs, double dropout_rate,
                      Rng& rng, ForwardCache* cache);

// Re-run a train-mode pass under fixed masks (one per hidden layer).
Mat mlp_forward_masked(const MlpParams& params, const Mat& inputs,
                       const std::vector<Mat>& masks, ForwardCache* cache = nullptr);

// Exact gradients of sum_i dot(output_grad_row_i, output_row_i) with respect
// to every weight and bias, for the pass recorded in cache.
MlpGrads mlp_backward(const MlpParams& params, const ForwardCache& cache,
                      const Mat& output_grad);

enum class StepDirection { Descent, Ascent };

// Bias-corrected Adam moments, shaped like the parameters they update.
struct AdamState {
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState like(const MlpParams& params);
};

// One Adam update (in place). Rejects non-finite gradients.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state,
               double learning_rate, StepDirection direction);

// Central-difference gradient of an arbitrary scalar function of the
// parameters; the test oracle for backward.
MlpGrads finite_diff_grad(const std::function<double(const MlpParams&)>& f,
                          const MlpParams& params, double epsilon);

}  // namespace declink
