#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rng.hpp"

namespace declink {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Mean power of each channel gain entry; (i,k) scales the gain from TX k to
// RX i. Defaults to all-ones.
struct GainVarianceSpec {
  Mat variances;

  static GainVarianceSpec ones(int k_users);
  void validate(int k_users) const;
};

// Per-TX CSI noise standard deviations. sigma[j](i,k) in [0,1]: 0 means TX j
// knows gain (i,k) exactly, 1 means it sees pure noise. sigma_bar is the
// matching mixing weight with sigma_bar^2 + sigma^2 = 1 elementwise.
// When shared_delta is set, every TX reuses one noise draw per channel
// realization, which makes identical sigma matrices yield identical
// estimates (the centralized configuration).
struct CsiNoiseSpec {
  std::vector<Mat> sigma;
  std::vector<Mat> sigma_bar;
  bool shared_delta = false;

  static CsiNoiseSpec from_sigma(std::vector<Mat> sigma, bool shared_delta = false);
  int k_users() const { return static_cast<int>(sigma.size()); }
};

// One joint channel realization: the true gains plus what each TX sees.
struct ChannelSample {
  Mat gains;
  std::vector<Mat> estimates;  // estimates[j] is TX j's view
};

// sqrt(1 - sigma^2) elementwise; rejects entries outside [0,1].
Mat sigma_bar(const Mat& sigma);

// One gain matrix draw: unit-mean exponential per entry, scaled by the
// variance spec.
Mat sample_gains(int k_users, const GainVarianceSpec& variance, Rng& rng);

// Deterministic mixing step: sigma_bar .* gains + sigma .* delta.
Mat mix_estimate(const Mat& gains, const Mat& sigma, const Mat& delta);

// Per-TX estimates for one realization. Noise draws come from the same
// scaled exponential family as the gains, so sigma = 1 produces an
// independent but statistically identical matrix.
std::vector<Mat> sample_estimates(const Mat& gains, const GainVarianceSpec& variance,
                                  const CsiNoiseSpec& noise, Rng& rng);

// n independent realizations. Sample i derives its own substreams from
// (domain_seed, i), so any subset can be generated independently and the
// result does not depend on worker partitioning.
std::vector<ChannelSample> sample_batch(int n, int k_users,
                                        const GainVarianceSpec& variance,
                                        const CsiNoiseSpec& noise,
                                        std::uint64_t domain_seed);

// Single sample of a batch, identical to sample_batch(...)[index].
ChannelSample sample_one(int index, int k_users, const GainVarianceSpec& variance,
                         const CsiNoiseSpec& noise, std::uint64_t domain_seed);

}  // namespace declink
