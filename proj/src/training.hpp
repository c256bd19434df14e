#pragma once

#include <functional>
#include <span>
#include <vector>

#include "policy.hpp"

namespace declink {

enum class PretrainLabels { Estimate, Truth };

struct TrainConfig {
  int n_train = 30000;
  int batch_size = 5000;
  int steps = 10000;
  double learning_rate = 0.001;
  double dropout_rate = 0.5;
  std::uint64_t seed = 0;
  int pretrain_steps = 2000;
  PretrainLabels pretrain_labels_from = PretrainLabels::Estimate;
  std::vector<int> hidden_sizes = {30, 30, 30};

  void validate() const;
};

struct EvalReport {
  double expected_sum_rate = 0.0;
  Vec transmit_fraction;
  int n_eval = 0;
  double confidence_halfwidth = 0.0;  // 95% normal approximation on the mean rate
};

// Periodic checkpoint hook invoked every checkpoint_every optimizer steps.
struct TrainHooks {
  long checkpoint_every = 1000;
  std::function<void(long step, const PolicySet&)> on_checkpoint;
};

Standardization fit_standardization(const Mat& inputs);

// Stack TX j's flattened estimates (or the true gains) into an n x K^2 batch.
Mat stack_estimates(std::span<const ChannelSample> samples, int tx_index);
Mat stack_gains(std::span<const ChannelSample> samples);

// Build the K policy networks for one scenario point: architecture from the
// config, standardization fitted on the training set, weights seeded from
// the training domain. kind decides output width (1 per net for Cdnn,
// K-output local nets for LocallyRobust).
PolicySet init_policies(int k_users, PolicyKind kind, const TrainConfig& config,
                        std::span<const ChannelSample> train_set, double p_max,
                        std::uint64_t train_domain);

// Supervised fit of TX tx_index's net to the schedule an exact-CSI solver
// would pick on the net's own input matrix (binary cross-entropy, Adam
// descent). Returns the per-step batch loss.
std::vector<double> pretrain_naive(PolicySet& policies, int tx_index,
                                   std::span<const ChannelSample> train_set,
                                   const TrainConfig& config, double noise_power,
                                   std::uint64_t train_domain);

// One joint forward/backward pass over a batch: every TX's net sees only its
// own estimate, the relaxed rate is scored on the true gains, and the rate
// gradient is routed back through each TX's own net. objective is the batch
// mean relaxed sum rate.
struct JointBatchPass {
  double objective = 0.0;
  std::vector<MlpGrads> grads;
};
JointBatchPass joint_batch_pass(const PolicySet& policies,
                                std::span<const ChannelSample> batch,
                                double noise_power, double dropout_rate,
                                std::uint64_t dropout_seed);

// Batch mean relaxed objective with eval-mode (deterministic) fractions.
double joint_objective(const PolicySet& policies, std::span<const ChannelSample> batch,
                       double noise_power);

// config.steps Adam ascent steps on the Monte-Carlo relaxed objective.
// Returns the per-step batch objective.
std::vector<double> train_joint(PolicySet& policies,
                                std::span<const ChannelSample> train_set,
                                const TrainConfig& config, double noise_power,
                                std::uint64_t train_domain,
                                const TrainHooks& hooks = {});

// Same pass for one K-output local net: all K relaxed powers come from TX
// tx_index's net applied to its own estimate.
struct LocalBatchPass {
  double objective = 0.0;
  MlpGrads grads;
};
LocalBatchPass local_batch_pass(const PolicySet& policies, int tx_index,
                                std::span<const ChannelSample> batch,
                                double noise_power, double dropout_rate,
                                std::uint64_t dropout_seed);

double local_objective(const PolicySet& policies, int tx_index,
                       std::span<const ChannelSample> batch, double noise_power);

// Trains net tx_index of a LocallyRobust set in isolation.
std::vector<double> train_locally_robust(PolicySet& policies, int tx_index,
                                         std::span<const ChannelSample> train_set,
                                         const TrainConfig& config, double noise_power,
                                         std::uint64_t train_domain,
                                         const TrainHooks& hooks = {});

// Monte-Carlo estimate of the expected sum rate plus per-TX transmit
// frequencies for any decision map.
EvalReport evaluate_policy(const DecisionFn& decide,
                           std::span<const ChannelSample> eval_set, double p_max,
                           double noise_power);

// Full pipeline for one scenario point: sample the training set, initialize,
// pretrain, then run the requested training. objectives holds one curve for
// Cdnn and one per TX for LocallyRobust.
struct TrainedPolicy {
  PolicySet policies;
  std::vector<std::vector<double>> objectives;
};
TrainedPolicy run_training(int k_users, PolicyKind kind, const TrainConfig& config,
                           const GainVarianceSpec& variance, const CsiNoiseSpec& noise,
                           double p_max, double noise_power, std::uint64_t point_seed,
                           bool pretrain_only = false, const TrainHooks& hooks = {});

}  // namespace declink
