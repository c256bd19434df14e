#pragma once

#include <functional>
#include <span>
#include <string>

#include "mlp.hpp"
#include "rate.hpp"

namespace declink {

enum class PolicyKind { Cdnn, LocallyRobust };

// Frozen per-coordinate input standardization: x -> (x - mean) / scale.
struct Standardization {
  Vec mean;
  Vec scale;

  Mat apply(const Mat& inputs) const;
};

// One TX's deployed network plus the preprocessing frozen at training time.
// deploy_component picks which output drives the binary decision (always 0
// for single-output nets; the TX's own index for K-output local nets).
struct TxPolicy {
  MlpArchitecture arch;
  MlpParams params;
  Standardization standardize;
  int deploy_component = 0;
};

struct PolicySet {
  int k_users = 0;
  PolicyKind kind = PolicyKind::Cdnn;
  double threshold = 0.5;
  double p_max = 1.0;
  std::uint64_t seed = 0;
  std::vector<TxPolicy> tx;

  // Eval-mode sigmoid output used as TX j's transmit fraction.
  double fraction(int tx_index, const Mat& estimate) const;
  // Thresholded deployment decision for TX j.
  bool decide(int tx_index, const Mat& estimate) const;
  PowerDecision decide_all(const ChannelSample& sample) const;
};

// Flatten a K x K matrix row-major into a length-K^2 row vector.
Vec flatten_row_major(const Mat& m);

// Versioned binary checkpoint container (layout documented in the README).
void save_policy_set(const PolicySet& policies, const std::string& path);
PolicySet load_policy_set(const std::string& path);

// Maps a channel realization to a binary schedule; how every policy,
// learned or baseline, is evaluated.
using DecisionFn = std::function<PowerDecision(const ChannelSample&)>;

DecisionFn perfect_csi_policy(double p_max, double noise_power);
DecisionFn naive_policy(double p_max, double noise_power);
DecisionFn tdma_policy(int active_tx, int k_users, double p_max);
DecisionFn always_on_policy(int k_users, double p_max);
DecisionFn deployed_policy(const PolicySet& policies);

// All K outputs of one locally trained net deployed as the joint schedule;
// only meaningful for LocallyRobust sets.
DecisionFn local_full_policy(const PolicySet& policies, int tx_index);

}  // namespace declink
