#include "rate.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace declink {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

void check_rate_inputs(const Mat& gains, const Vec& powers, double noise_power) {
  const int k = static_cast<int>(gains.rows());
  if (gains.cols() != k) fail(ErrorCode::Dimension, "gain matrix must be square");
  if (powers.size() != k) {
    std::ostringstream os;
    os << "power vector length " << powers.size() << " does not match K = " << k;
    fail(ErrorCode::Dimension, os.str());
  }
  if (!(noise_power > 0.0)) fail(ErrorCode::Domain, "noise power must be > 0");
  for (int i = 0; i < k; ++i) {
    if (!(powers(i) >= 0.0)) fail(ErrorCode::Domain, "negative transmit power");
    for (int j = 0; j < k; ++j) {
      if (!(gains(i, j) >= 0.0)) fail(ErrorCode::Domain, "negative channel gain");
    }
  }
}

}  // namespace

Vec PowerDecision::powers() const {
  Vec p(k_users());
  for (int j = 0; j < k_users(); ++j) p(j) = on[j] ? p_max : 0.0;
  return p;
}

double sum_rate(const Mat& gains, const Vec& powers, double noise_power) {
  check_rate_inputs(gains, powers, noise_power);
  const int k = static_cast<int>(gains.rows());
  double rate = 0.0;
  for (int i = 0; i < k; ++i) {
    double interference = noise_power;
    for (int l = 0; l < k; ++l)
      if (l != i) interference += gains(i, l) * powers(l);
    rate += std::log2(1.0 + gains(i, i) * powers(i) / interference);
  }
  return rate;
}

RateGrad relaxed_sum_rate_with_grad(const Mat& gains, const Vec& fractions,
                                    double p_max, double noise_power) {
  const int k = static_cast<int>(gains.rows());
  if (fractions.size() != k) fail(ErrorCode::Dimension, "fraction vector length mismatch");
  for (int j = 0; j < k; ++j) {
    if (!(fractions(j) >= 0.0 && fractions(j) <= 1.0))
      fail(ErrorCode::Domain, "transmit fraction outside [0, 1]");
  }
  if (!(p_max > 0.0)) fail(ErrorCode::Domain, "p_max must be > 0");

  const Vec powers = fractions * p_max;
  check_rate_inputs(gains, powers, noise_power);

  // Per link i: signal S_i = G_ii p_i, denominator D_i = noise + sum_{l!=i} G_il p_l.
  Vec s(k), d(k);
  for (int i = 0; i < k; ++i) {
    s(i) = gains(i, i) * powers(i);
    double den = noise_power;
    for (int l = 0; l < k; ++l)
      if (l != i) den += gains(i, l) * powers(l);
    d(i) = den;
  }

  RateGrad out;
  out.rate = 0.0;
  for (int i = 0; i < k; ++i) out.rate += std::log2(1.0 + s(i) / d(i));

  // d rate / d p_j = G_jj / (ln2 (S_j + D_j))
  //                + sum_{i!=j} G_ij (1/(S_i + D_i) - 1/D_i) / ln2
  out.grad = Vec::Zero(k);
  for (int j = 0; j < k; ++j) {
    double g = gains(j, j) / ((s(j) + d(j)) * kLn2);
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      g += gains(i, j) * (1.0 / (s(i) + d(i)) - 1.0 / d(i)) / kLn2;
    }
    out.grad(j) = g * p_max;
  }
  return out;
}

PowerDecision exhaustive_best(const Mat& gains, double p_max, double noise_power) {
  const int k = static_cast<int>(gains.rows());
  if (k < 1) fail(ErrorCode::InvalidArgument, "gain matrix must be at least 1x1");
  if (k > kMaxExhaustiveUsers) {
    std::ostringstream os;
    os << "exhaustive enumeration supports K <= " << kMaxExhaustiveUsers
       << ", got K = " << k;
    fail(ErrorCode::Capacity, os.str());
  }

  PowerDecision best;
  best.p_max = p_max;
  best.on.assign(static_cast<std::size_t>(k), 0);
  double best_rate = -1.0;
  Vec powers(k);
  std::vector<std::uint8_t> on(static_cast<std::size_t>(k), 0);
  const std::uint32_t codes = 1u << k;
  for (std::uint32_t code = 0; code < codes; ++code) {
    for (int j = 0; j < k; ++j) {
      on[j] = static_cast<std::uint8_t>((code >> (k - 1 - j)) & 1u);
      powers(j) = on[j] ? p_max : 0.0;
    }
    const double rate = sum_rate(gains, powers, noise_power);
    if (rate > best_rate) {  // strict: ties keep the lowest code
      best_rate = rate;
      best.on = on;
    }
  }
  return best;
}

PowerDecision naive_full_decision(const Mat& estimate, double p_max, double noise_power) {
  return exhaustive_best(estimate, p_max, noise_power);
}

bool naive_decision(const Mat& estimate, int tx_index, double p_max, double noise_power) {
  const int k = static_cast<int>(estimate.rows());
  if (tx_index < 0 || tx_index >= k) fail(ErrorCode::InvalidArgument, "tx_index out of range");
  return naive_full_decision(estimate, p_max, noise_power).on[tx_index] != 0;
}

PowerDecision tdma_decision(int active_tx, int k_users, double p_max) {
  if (active_tx < 0 || active_tx >= k_users) {
    std::ostringstream os;
    os << "active TX index " << active_tx << " out of range [0, " << k_users << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  PowerDecision d;
  d.p_max = p_max;
  d.on.assign(static_cast<std::size_t>(k_users), 0);
  d.on[active_tx] = 1;
  return d;
}

PowerDecision always_on(int k_users, double p_max) {
  PowerDecision d;
  d.p_max = p_max;
  d.on.assign(static_cast<std::size_t>(k_users), 1);
  return d;
}

}  // namespace declink
