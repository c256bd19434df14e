#include "policy.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>

#include "errors.hpp"

namespace declink {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'K', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* data, std::size_t n, const std::string& path) {
  if (std::fwrite(data, 1, n, f) != n)
    fail(ErrorCode::Io, "short write to checkpoint file " + path);
}

void read_bytes(std::FILE* f, void* data, std::size_t n, const std::string& path) {
  if (std::fread(data, 1, n, f) != n)
    fail(ErrorCode::Io, "truncated checkpoint file " + path);
}

template <typename T>
void write_pod(std::FILE* f, T v, const std::string& path) {
  write_bytes(f, &v, sizeof(T), path);
}

template <typename T>
T read_pod(std::FILE* f, const std::string& path) {
  T v{};
  read_bytes(f, &v, sizeof(T), path);
  return v;
}

}  // namespace

Mat Standardization::apply(const Mat& inputs) const {
  if (inputs.cols() != mean.size() || inputs.cols() != scale.size())
    fail(ErrorCode::Dimension, "standardization width mismatch");
  Mat out = inputs;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

Vec flatten_row_major(const Mat& m) {
  Vec v(m.size());
  int idx = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) v(idx++) = m(i, j);
  return v;
}

double PolicySet::fraction(int tx_index, const Mat& estimate) const {
  if (tx_index < 0 || tx_index >= k_users)
    fail(ErrorCode::InvalidArgument, "tx_index out of range");
  const TxPolicy& p = tx[tx_index];
  Mat input = flatten_row_major(estimate).transpose();
  const Mat y = mlp_forward(p.params, p.standardize.apply(input));
  return y(0, p.deploy_component);
}

bool PolicySet::decide(int tx_index, const Mat& estimate) const {
  return fraction(tx_index, estimate) >= threshold;
}

PowerDecision PolicySet::decide_all(const ChannelSample& sample) const {
  if (static_cast<int>(sample.estimates.size()) != k_users)
    fail(ErrorCode::Dimension, "sample TX count does not match policy set");
  PowerDecision d;
  d.p_max = p_max;
  d.on.resize(static_cast<std::size_t>(k_users));
  for (int j = 0; j < k_users; ++j)
    d.on[j] = decide(j, sample.estimates[j]) ? 1 : 0;
  return d;
}

void save_policy_set(const PolicySet& policies, const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(ErrorCode::Io, "cannot open checkpoint file for writing: " + path);
  std::FILE* fp = f.get();

  write_bytes(fp, kMagic, sizeof(kMagic), path);
  write_pod<std::uint32_t>(fp, kVersion, path);
  write_pod<std::uint32_t>(fp, policies.kind == PolicyKind::Cdnn ? 0u : 1u, path);
  write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(policies.k_users), path);
  write_pod<double>(fp, policies.threshold, path);
  write_pod<double>(fp, policies.p_max, path);
  write_pod<std::uint64_t>(fp, policies.seed, path);
  write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(policies.tx.size()), path);

  for (const TxPolicy& p : policies.tx) {
    write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(p.arch.layer_sizes.size()), path);
    for (int s : p.arch.layer_sizes)
      write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(s), path);
    write_pod<double>(fp, p.arch.dropout_rate, path);
    write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(p.deploy_component), path);
    for (std::size_t l = 0; l < p.params.w.size(); ++l) {
      // Row-major weight dump, one row (output unit) at a time.
      const Mat& w = p.params.w[l];
      for (int r = 0; r < w.rows(); ++r)
        for (int c = 0; c < w.cols(); ++c) write_pod<double>(fp, w(r, c), path);
      const Vec& b = p.params.b[l];
      for (int r = 0; r < b.size(); ++r) write_pod<double>(fp, b(r), path);
    }
    for (int i = 0; i < p.standardize.mean.size(); ++i)
      write_pod<double>(fp, p.standardize.mean(i), path);
    for (int i = 0; i < p.standardize.scale.size(); ++i)
      write_pod<double>(fp, p.standardize.scale(i), path);
  }
}

PolicySet load_policy_set(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(ErrorCode::Io, "cannot open checkpoint file: " + path);
  std::FILE* fp = f.get();

  char magic[8];
  read_bytes(fp, magic, sizeof(magic), path);
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    fail(ErrorCode::Parse, "not a checkpoint file: " + path);
  const auto version = read_pod<std::uint32_t>(fp, path);
  if (version != kVersion) {
    std::ostringstream os;
    os << "unsupported checkpoint version " << version << " in " << path;
    fail(ErrorCode::Parse, os.str());
  }

  PolicySet out;
  const auto kind = read_pod<std::uint32_t>(fp, path);
  if (kind > 1) fail(ErrorCode::Parse, "unknown policy kind in " + path);
  out.kind = kind == 0 ? PolicyKind::Cdnn : PolicyKind::LocallyRobust;
  out.k_users = static_cast<int>(read_pod<std::uint32_t>(fp, path));
  out.threshold = read_pod<double>(fp, path);
  out.p_max = read_pod<double>(fp, path);
  out.seed = read_pod<std::uint64_t>(fp, path);
  const auto n_tx = read_pod<std::uint32_t>(fp, path);
  if (out.k_users < 1 || n_tx != static_cast<std::uint32_t>(out.k_users))
    fail(ErrorCode::Parse, "inconsistent TX count in " + path);

  for (std::uint32_t t = 0; t < n_tx; ++t) {
    TxPolicy p;
    const auto n_sizes = read_pod<std::uint32_t>(fp, path);
    if (n_sizes < 2 || n_sizes > 64) fail(ErrorCode::Parse, "bad layer count in " + path);
    for (std::uint32_t i = 0; i < n_sizes; ++i) {
      const auto s = read_pod<std::uint32_t>(fp, path);
      if (s < 1 || s > 1u << 20) fail(ErrorCode::Parse, "bad layer size in " + path);
      p.arch.layer_sizes.push_back(static_cast<int>(s));
    }
    p.arch.dropout_rate = read_pod<double>(fp, path);
    p.deploy_component = static_cast<int>(read_pod<std::uint32_t>(fp, path));
    if (p.deploy_component >= p.arch.output_width())
      fail(ErrorCode::Parse, "deploy component out of range in " + path);
    for (int l = 0; l + 1 < static_cast<int>(p.arch.layer_sizes.size()); ++l) {
      const int fan_in = p.arch.layer_sizes[l];
      const int fan_out = p.arch.layer_sizes[l + 1];
      Mat w(fan_out, fan_in);
      for (int r = 0; r < fan_out; ++r)
        for (int c = 0; c < fan_in; ++c) w(r, c) = read_pod<double>(fp, path);
      Vec b(fan_out);
      for (int r = 0; r < fan_out; ++r) b(r) = read_pod<double>(fp, path);
      p.params.w.push_back(std::move(w));
      p.params.b.push_back(std::move(b));
    }
    const int in = p.arch.input_width();
    p.standardize.mean = Vec(in);
    p.standardize.scale = Vec(in);
    for (int i = 0; i < in; ++i) p.standardize.mean(i) = read_pod<double>(fp, path);
    for (int i = 0; i < in; ++i) p.standardize.scale(i) = read_pod<double>(fp, path);
    out.tx.push_back(std::move(p));
  }
  return out;
}

DecisionFn perfect_csi_policy(double p_max, double noise_power) {
  return [p_max, noise_power](const ChannelSample& s) {
    return exhaustive_best(s.gains, p_max, noise_power);
  };
}

DecisionFn naive_policy(double p_max, double noise_power) {
  return [p_max, noise_power](const ChannelSample& s) {
    PowerDecision d;
    d.p_max = p_max;
    const int k = static_cast<int>(s.estimates.size());
    d.on.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
      d.on[j] = naive_decision(s.estimates[j], j, p_max, noise_power) ? 1 : 0;
    return d;
  };
}

DecisionFn tdma_policy(int active_tx, int k_users, double p_max) {
  PowerDecision d = tdma_decision(active_tx, k_users, p_max);
  return [d](const ChannelSample&) { return d; };
}

DecisionFn always_on_policy(int k_users, double p_max) {
  PowerDecision d = always_on(k_users, p_max);
  return [d](const ChannelSample&) { return d; };
}

DecisionFn deployed_policy(const PolicySet& policies) {
  PolicySet copy = policies;
  return [copy = std::move(copy)](const ChannelSample& s) { return copy.decide_all(s); };
}

DecisionFn local_full_policy(const PolicySet& policies, int tx_index) {
  if (tx_index < 0 || tx_index >= policies.k_users)
    fail(ErrorCode::InvalidArgument, "tx_index out of range");
  const TxPolicy p = policies.tx[tx_index];
  const double threshold = policies.threshold;
  const double p_max = policies.p_max;
  const int k = policies.k_users;
  if (p.arch.output_width() != k)
    fail(ErrorCode::InvalidArgument, "full local deployment needs a K-output net");
  return [p, threshold, p_max, k, tx_index](const ChannelSample& s) {
    Mat input = flatten_row_major(s.estimates[tx_index]).transpose();
    const Mat y = mlp_forward(p.params, p.standardize.apply(input));
    PowerDecision d;
    d.p_max = p_max;
    d.on.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) d.on[j] = y(0, j) >= threshold ? 1 : 0;
    return d;
  };
}

}  // namespace declink
