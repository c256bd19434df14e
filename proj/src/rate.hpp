#pragma once

#include <vector>

#include "channel.hpp"

namespace declink {

// Binary on/off schedule; an active TX transmits at p_max.
struct PowerDecision {
  std::vector<std::uint8_t> on;
  double p_max = 1.0;

  int k_users() const { return static_cast<int>(on.size()); }
  Vec powers() const;
};

// Largest K accepted by the exhaustive 2^K enumeration.
inline constexpr int kMaxExhaustiveUsers = 20;

// Instantaneous sum rate in bits per channel use with interference treated
// as noise. Accepts any nonnegative power vector, binary or relaxed.
double sum_rate(const Mat& gains, const Vec& powers, double noise_power = 1.0);

struct RateGrad {
  double rate = 0.0;
  Vec grad;  // d rate / d fraction_j
};

// Sum rate at powers = fractions * p_max together with its exact gradient
// with respect to each fraction. At integral fractions the rate equals the
// binary sum_rate bit-for-bit.
RateGrad relaxed_sum_rate_with_grad(const Mat& gains, const Vec& fractions,
                                    double p_max, double noise_power = 1.0);

// Best binary schedule by full enumeration. Decisions are encoded with TX 0
// as the most significant bit and "transmit" = 1; ties keep the lowest code.
PowerDecision exhaustive_best(const Mat& gains, double p_max,
                              double noise_power = 1.0);

// Full decision a TX would pick if its estimate were the exact shared
// channel (the perfect-CSI solver run on the estimate).
PowerDecision naive_full_decision(const Mat& estimate, double p_max,
                                  double noise_power = 1.0);

// Component tx_index of naive_full_decision; the other components are
// auxiliary and discarded.
bool naive_decision(const Mat& estimate, int tx_index, double p_max,
                    double noise_power = 1.0);

// Exactly one TX active.
PowerDecision tdma_decision(int active_tx, int k_users, double p_max);

// Every TX active.
PowerDecision always_on(int k_users, double p_max);

}  // namespace declink
