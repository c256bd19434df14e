#include "channel.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace declink {

namespace {

void check_square(const Mat& m, int k, const char* what) {
  if (m.rows() != k || m.cols() != k) {
    std::ostringstream os;
    os << what << " must be " << k << "x" << k << ", got " << m.rows() << "x"
       << m.cols();
    fail(ErrorCode::Dimension, os.str());
  }
}

}  // namespace

GainVarianceSpec GainVarianceSpec::ones(int k_users) {
  return GainVarianceSpec{Mat::Ones(k_users, k_users)};
}

void GainVarianceSpec::validate(int k_users) const {
  check_square(variances, k_users, "gain variance");
  for (int i = 0; i < variances.rows(); ++i) {
    for (int k = 0; k < variances.cols(); ++k) {
      double v = variances(i, k);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "gain variance entry (" << i << "," << k << ") = " << v
           << " must be finite and >= 0";
        fail(ErrorCode::Domain, os.str());
      }
    }
  }
}

Mat sigma_bar(const Mat& sigma) {
  Mat out(sigma.rows(), sigma.cols());
  for (int i = 0; i < sigma.rows(); ++i) {
    for (int k = 0; k < sigma.cols(); ++k) {
      double s = sigma(i, k);
      if (!(s >= 0.0 && s <= 1.0)) {
        std::ostringstream os;
        os << "sigma entry (" << i << "," << k << ") = " << s
           << " outside [0, 1]";
        fail(ErrorCode::Domain, os.str());
      }
      out(i, k) = std::sqrt(1.0 - s * s);
    }
  }
  return out;
}

CsiNoiseSpec CsiNoiseSpec::from_sigma(std::vector<Mat> sigma, bool shared_delta) {
  if (sigma.empty()) fail(ErrorCode::InvalidArgument, "CSI noise spec needs at least one TX");
  const int k = static_cast<int>(sigma.size());
  CsiNoiseSpec spec;
  spec.shared_delta = shared_delta;
  spec.sigma_bar.reserve(sigma.size());
  for (const Mat& s : sigma) {
    check_square(s, k, "sigma");
    spec.sigma_bar.push_back(declink::sigma_bar(s));
  }
  spec.sigma = std::move(sigma);
  return spec;
}

Mat sample_gains(int k_users, const GainVarianceSpec& variance, Rng& rng) {
  if (k_users < 1) fail(ErrorCode::InvalidArgument, "k_users must be >= 1");
  variance.validate(k_users);
  Mat g(k_users, k_users);
  for (int i = 0; i < k_users; ++i)
    for (int k = 0; k < k_users; ++k)
      g(i, k) = variance.variances(i, k) * rng.exp_unit_mean();
  return g;
}

Mat mix_estimate(const Mat& gains, const Mat& sigma, const Mat& delta) {
  if (sigma.rows() != gains.rows() || sigma.cols() != gains.cols() ||
      delta.rows() != gains.rows() || delta.cols() != gains.cols()) {
    fail(ErrorCode::Dimension, "estimate mixing requires equal-sized matrices");
  }
  return sigma_bar(sigma).cwiseProduct(gains) + sigma.cwiseProduct(delta);
}

std::vector<Mat> sample_estimates(const Mat& gains, const GainVarianceSpec& variance,
                                  const CsiNoiseSpec& noise, Rng& rng) {
  const int k = static_cast<int>(gains.rows());
  check_square(gains, k, "gains");
  variance.validate(k);
  if (noise.k_users() != k) {
    fail(ErrorCode::Dimension, "CSI noise spec TX count does not match gain matrix");
  }

  std::vector<Mat> estimates;
  estimates.reserve(noise.sigma.size());
  Mat shared;
  if (noise.shared_delta) shared = sample_gains(k, variance, rng);
  for (int j = 0; j < k; ++j) {
    const Mat delta = noise.shared_delta ? shared : sample_gains(k, variance, rng);
    estimates.push_back(noise.sigma_bar[j].cwiseProduct(gains) +
                        noise.sigma[j].cwiseProduct(delta));
  }
  return estimates;
}

ChannelSample sample_one(int index, int k_users, const GainVarianceSpec& variance,
                         const CsiNoiseSpec& noise, std::uint64_t domain_seed) {
  ChannelSample s;
  Rng gain_rng(derive_stream(domain_seed, Role::Gains, static_cast<std::uint64_t>(index)));
  s.gains = sample_gains(k_users, variance, gain_rng);
  Rng est_rng(derive_stream(domain_seed, Role::Estimates, static_cast<std::uint64_t>(index)));
  s.estimates = sample_estimates(s.gains, variance, noise, est_rng);
  return s;
}

std::vector<ChannelSample> sample_batch(int n, int k_users,
                                        const GainVarianceSpec& variance,
                                        const CsiNoiseSpec& noise,
                                        std::uint64_t domain_seed) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
  std::vector<ChannelSample> batch;
  batch.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    batch.push_back(sample_one(i, k_users, variance, noise, domain_seed));
  return batch;
}

}  // namespace declink
