#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "errors.hpp"

namespace declink {

namespace {

// Contiguous minibatches over a shuffled index set, reshuffled every epoch
// from a seed-derived stream. Incomplete trailing batches are skipped.
class BatchPlan {
 public:
  BatchPlan(int n, int batch_size, std::uint64_t domain, Role role, std::uint64_t tag)
      : n_(n), batch_(batch_size), domain_(domain), role_(role), tag_(tag),
        per_epoch_(n / batch_size), indices_(static_cast<std::size_t>(n)) {
    std::iota(indices_.begin(), indices_.end(), 0);
  }

  std::span<const int> batch_for_step(long step) {
    const long epoch = step / per_epoch_;
    const long slot = step % per_epoch_;
    if (epoch != epoch_) {
      Rng rng(derive_stream(domain_, role_, tag_, static_cast<std::uint64_t>(epoch)));
      for (int i = n_ - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(indices_[i], indices_[j]);
      }
      epoch_ = epoch;
    }
    return std::span<const int>(indices_).subspan(static_cast<std::size_t>(slot) * batch_,
                                                  static_cast<std::size_t>(batch_));
  }

 private:
  int n_;
  int batch_;
  std::uint64_t domain_;
  Role role_;
  std::uint64_t tag_;
  long per_epoch_;
  long epoch_ = -1;
  std::vector<int> indices_;
};

Mat gather_rows(const Mat& all, std::span<const int> rows) {
  Mat out(static_cast<int>(rows.size()), all.cols());
  for (int i = 0; i < out.rows(); ++i) out.row(i) = all.row(rows[i]);
  return out;
}

constexpr std::uint64_t kJointTag = ~0ull;

void check_diverged(double value, long step, const char* what) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << what << " became non-finite at step " << step;
    fail(ErrorCode::Diverged, os.str());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (n_train < 1) fail(ErrorCode::InvalidArgument, "n_train must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (batch_size > n_train)
    fail(ErrorCode::InvalidArgument, "batch_size must not exceed n_train");
  if (steps < 1) fail(ErrorCode::InvalidArgument, "steps must be >= 1");
  if (pretrain_steps < 0) fail(ErrorCode::InvalidArgument, "pretrain_steps must be >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    fail(ErrorCode::Domain, "dropout_rate must lie in [0, 1)");
  if (hidden_sizes.empty()) fail(ErrorCode::InvalidArgument, "need at least one hidden layer");
  for (int h : hidden_sizes)
    if (h < 1) fail(ErrorCode::InvalidArgument, "hidden sizes must be >= 1");
}

Standardization fit_standardization(const Mat& inputs) {
  Standardization s;
  s.mean = inputs.colwise().mean();
  Mat centered = inputs.rowwise() - s.mean.transpose();
  Vec var = centered.cwiseProduct(centered).colwise().mean();
  s.scale = var.cwiseSqrt();
  // Constant coordinates pass through unscaled.
  for (int i = 0; i < s.scale.size(); ++i)
    if (s.scale(i) < 1e-12) s.scale(i) = 1.0;
  return s;
}

Mat stack_estimates(std::span<const ChannelSample> samples, int tx_index) {
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "empty sample set");
  const int k = static_cast<int>(samples[0].gains.rows());
  if (tx_index < 0 || tx_index >= k) fail(ErrorCode::InvalidArgument, "tx_index out of range");
  Mat out(static_cast<int>(samples.size()), k * k);
  for (int i = 0; i < out.rows(); ++i)
    out.row(i) = flatten_row_major(samples[i].estimates[tx_index]).transpose();
  return out;
}

Mat stack_gains(std::span<const ChannelSample> samples) {
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "empty sample set");
  const int k = static_cast<int>(samples[0].gains.rows());
  Mat out(static_cast<int>(samples.size()), k * k);
  for (int i = 0; i < out.rows(); ++i)
    out.row(i) = flatten_row_major(samples[i].gains).transpose();
  return out;
}

PolicySet init_policies(int k_users, PolicyKind kind, const TrainConfig& config,
                        std::span<const ChannelSample> train_set, double p_max,
                        std::uint64_t train_domain) {
  config.validate();
  if (k_users < 1) fail(ErrorCode::InvalidArgument, "k_users must be >= 1");

  PolicySet set;
  set.k_users = k_users;
  set.kind = kind;
  set.p_max = p_max;
  const int n_out = kind == PolicyKind::Cdnn ? 1 : k_users;

  for (int j = 0; j < k_users; ++j) {
    TxPolicy p;
    p.arch.layer_sizes.push_back(k_users * k_users);
    for (int h : config.hidden_sizes) p.arch.layer_sizes.push_back(h);
    p.arch.layer_sizes.push_back(n_out);
    p.arch.dropout_rate = config.dropout_rate;
    p.deploy_component = kind == PolicyKind::Cdnn ? 0 : j;
    Rng rng(derive_stream(train_domain, Role::InitParams, static_cast<std::uint64_t>(j)));
    p.params = init_params(p.arch, rng);
    p.standardize = fit_standardization(stack_estimates(train_set, j));
    set.tx.push_back(std::move(p));
  }
  return set;
}

std::vector<double> pretrain_naive(PolicySet& policies, int tx_index,
                                   std::span<const ChannelSample> train_set,
                                   const TrainConfig& config, double noise_power,
                                   std::uint64_t train_domain) {
  config.validate();
  if (train_set.empty()) fail(ErrorCode::InvalidArgument, "empty training set");
  if (tx_index < 0 || tx_index >= policies.k_users)
    fail(ErrorCode::InvalidArgument, "tx_index out of range");
  std::vector<double> losses;
  if (config.pretrain_steps == 0) return losses;

  TxPolicy& p = policies.tx[tx_index];
  const int n = static_cast<int>(train_set.size());
  const int n_out = p.arch.output_width();

  // Inputs and labels follow the configured codebook reading: by default the
  // net trains on the estimate it will see in deployment, labeled by the
  // exact-CSI solver applied to that same estimate.
  const bool from_truth = config.pretrain_labels_from == PretrainLabels::Truth;
  Mat inputs = from_truth ? stack_gains(train_set) : stack_estimates(train_set, tx_index);
  Mat labels(n, n_out);
  for (int i = 0; i < n; ++i) {
    const Mat& basis = from_truth ? train_set[i].gains : train_set[i].estimates[tx_index];
    const PowerDecision full = naive_full_decision(basis, policies.p_max, noise_power);
    if (n_out == 1) {
      labels(i, 0) = full.on[tx_index] ? 1.0 : 0.0;
    } else {
      for (int j = 0; j < n_out; ++j) labels(i, j) = full.on[j] ? 1.0 : 0.0;
    }
  }
  const Mat std_inputs = p.standardize.apply(inputs);

  AdamState adam = AdamState::like(p.params);
  BatchPlan plan(n, config.batch_size, train_domain, Role::PretrainShuffle,
                 static_cast<std::uint64_t>(tx_index));
  losses.reserve(static_cast<std::size_t>(config.pretrain_steps));

  for (long step = 0; step < config.pretrain_steps; ++step) {
    const auto idx = plan.batch_for_step(step);
    const Mat x = gather_rows(std_inputs, idx);
    const Mat y = gather_rows(labels, idx);

    Rng dropout_rng(derive_stream(train_domain, Role::PretrainDropout,
                                  static_cast<std::uint64_t>(tx_index),
                                  static_cast<std::uint64_t>(step)));
    ForwardCache cache;
    const Mat out = mlp_forward_train(p.params, x, config.dropout_rate, dropout_rng, &cache);

    const double inv = 1.0 / (static_cast<double>(x.rows()) * n_out);
    double loss = 0.0;
    Mat dout(out.rows(), out.cols());
    for (int i = 0; i < out.rows(); ++i) {
      for (int j = 0; j < out.cols(); ++j) {
        const double prob = out(i, j);
        const double label = y(i, j);
        loss -= inv * (label * std::log(prob) + (1.0 - label) * std::log(1.0 - prob));
        dout(i, j) = inv * (prob - label) / (prob * (1.0 - prob));
      }
    }
    check_diverged(loss, step, "pretraining loss");
    losses.push_back(loss);

    const MlpGrads grads = mlp_backward(p.params, cache, dout);
    adam_step(p.params, grads, adam, config.learning_rate, StepDirection::Descent);
  }
  return losses;
}

JointBatchPass joint_batch_pass(const PolicySet& policies,
                                std::span<const ChannelSample> batch,
                                double noise_power, double dropout_rate,
                                std::uint64_t dropout_seed) {
  const int k = policies.k_users;
  const int n = static_cast<int>(batch.size());
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty batch");

  std::vector<ForwardCache> caches(static_cast<std::size_t>(k));
  Mat fractions(n, k);
  for (int j = 0; j < k; ++j) {
    const TxPolicy& p = policies.tx[j];
    const Mat x = p.standardize.apply(stack_estimates(batch, j));
    Mat y;
    if (dropout_rate > 0.0) {
      Rng rng(derive_stream(dropout_seed, Role::JointDropout, static_cast<std::uint64_t>(j)));
      y = mlp_forward_train(p.params, x, dropout_rate, rng, &caches[j]);
    } else {
      y = mlp_forward(p.params, x, &caches[j]);
    }
    fractions.col(j) = y.col(0);
  }

  JointBatchPass pass;
  const double inv = 1.0 / n;
  std::vector<Mat> douts(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) douts[j] = Mat::Zero(n, 1);
  for (int i = 0; i < n; ++i) {
    const RateGrad rg = relaxed_sum_rate_with_grad(batch[i].gains, fractions.row(i).transpose(),
                                                   policies.p_max, noise_power);
    pass.objective += inv * rg.rate;
    for (int j = 0; j < k; ++j) douts[j](i, 0) = inv * rg.grad(j);
  }

  pass.grads.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    pass.grads.push_back(mlp_backward(policies.tx[j].params, caches[j], douts[j]));
  return pass;
}

double joint_objective(const PolicySet& policies, std::span<const ChannelSample> batch,
                       double noise_power) {
  const int k = policies.k_users;
  const int n = static_cast<int>(batch.size());
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  Mat fractions(n, k);
  for (int j = 0; j < k; ++j) {
    const TxPolicy& p = policies.tx[j];
    fractions.col(j) = mlp_forward(p.params, p.standardize.apply(stack_estimates(batch, j))).col(0);
  }
  double objective = 0.0;
  for (int i = 0; i < n; ++i) {
    objective += relaxed_sum_rate_with_grad(batch[i].gains, fractions.row(i).transpose(),
                                            policies.p_max, noise_power)
                     .rate;
  }
  return objective / n;
}

std::vector<double> train_joint(PolicySet& policies,
                                std::span<const ChannelSample> train_set,
                                const TrainConfig& config, double noise_power,
                                std::uint64_t train_domain, const TrainHooks& hooks) {
  config.validate();
  if (policies.kind != PolicyKind::Cdnn)
    fail(ErrorCode::InvalidArgument, "joint training expects single-output policy nets");
  const int n = static_cast<int>(train_set.size());
  if (n < config.batch_size) fail(ErrorCode::InvalidArgument, "training set smaller than batch");

  std::vector<AdamState> adam;
  adam.reserve(policies.tx.size());
  for (const TxPolicy& p : policies.tx) adam.push_back(AdamState::like(p.params));

  BatchPlan plan(n, config.batch_size, train_domain, Role::JointShuffle, kJointTag);
  std::vector<double> objective;
  objective.reserve(static_cast<std::size_t>(config.steps));

  std::vector<ChannelSample> batch(static_cast<std::size_t>(config.batch_size));
  for (long step = 0; step < config.steps; ++step) {
    const auto idx = plan.batch_for_step(step);
    for (int i = 0; i < config.batch_size; ++i) batch[i] = train_set[idx[i]];

    const std::uint64_t dropout_seed =
        derive_stream(train_domain, Role::JointDropout, kJointTag,
                      static_cast<std::uint64_t>(step));
    JointBatchPass pass =
        joint_batch_pass(policies, batch, noise_power, config.dropout_rate, dropout_seed);
    check_diverged(pass.objective, step, "joint training objective");
    objective.push_back(pass.objective);

    for (int j = 0; j < policies.k_users; ++j) {
      adam_step(policies.tx[j].params, pass.grads[j], adam[j], config.learning_rate,
                StepDirection::Ascent);
    }
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 &&
        (step + 1) % hooks.checkpoint_every == 0) {
      hooks.on_checkpoint(step + 1, policies);
    }
  }
  return objective;
}

LocalBatchPass local_batch_pass(const PolicySet& policies, int tx_index,
                                std::span<const ChannelSample> batch,
                                double noise_power, double dropout_rate,
                                std::uint64_t dropout_seed) {
  const int k = policies.k_users;
  const int n = static_cast<int>(batch.size());
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  const TxPolicy& p = policies.tx[tx_index];
  if (p.arch.output_width() != k)
    fail(ErrorCode::InvalidArgument, "local training expects a K-output net");

  const Mat x = p.standardize.apply(stack_estimates(batch, tx_index));
  ForwardCache cache;
  Mat fractions;
  if (dropout_rate > 0.0) {
    Rng rng(derive_stream(dropout_seed, Role::JointDropout, static_cast<std::uint64_t>(tx_index)));
    fractions = mlp_forward_train(p.params, x, dropout_rate, rng, &cache);
  } else {
    fractions = mlp_forward(p.params, x, &cache);
  }

  LocalBatchPass pass;
  const double inv = 1.0 / n;
  Mat dout = Mat::Zero(n, k);
  for (int i = 0; i < n; ++i) {
    const RateGrad rg = relaxed_sum_rate_with_grad(batch[i].gains, fractions.row(i).transpose(),
                                                   policies.p_max, noise_power);
    pass.objective += inv * rg.rate;
    dout.row(i) = inv * rg.grad.transpose();
  }
  pass.grads = mlp_backward(p.params, cache, dout);
  return pass;
}

double local_objective(const PolicySet& policies, int tx_index,
                       std::span<const ChannelSample> batch, double noise_power) {
  const int n = static_cast<int>(batch.size());
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  const TxPolicy& p = policies.tx[tx_index];
  const Mat fractions = mlp_forward(p.params, p.standardize.apply(stack_estimates(batch, tx_index)));
  double objective = 0.0;
  for (int i = 0; i < n; ++i) {
    objective += relaxed_sum_rate_with_grad(batch[i].gains, fractions.row(i).transpose(),
                                            policies.p_max, noise_power)
                     .rate;
  }
  return objective / n;
}

std::vector<double> train_locally_robust(PolicySet& policies, int tx_index,
                                         std::span<const ChannelSample> train_set,
                                         const TrainConfig& config, double noise_power,
                                         std::uint64_t train_domain, const TrainHooks& hooks) {
  config.validate();
  if (policies.kind != PolicyKind::LocallyRobust)
    fail(ErrorCode::InvalidArgument, "local training expects a LocallyRobust policy set");
  const int n = static_cast<int>(train_set.size());
  if (n < config.batch_size) fail(ErrorCode::InvalidArgument, "training set smaller than batch");

  TxPolicy& p = policies.tx[tx_index];
  AdamState adam = AdamState::like(p.params);
  BatchPlan plan(n, config.batch_size, train_domain, Role::JointShuffle,
                 static_cast<std::uint64_t>(tx_index));
  std::vector<double> objective;
  objective.reserve(static_cast<std::size_t>(config.steps));

  std::vector<ChannelSample> batch(static_cast<std::size_t>(config.batch_size));
  for (long step = 0; step < config.steps; ++step) {
    const auto idx = plan.batch_for_step(step);
    for (int i = 0; i < config.batch_size; ++i) batch[i] = train_set[idx[i]];

    const std::uint64_t dropout_seed =
        derive_stream(train_domain, Role::JointDropout, static_cast<std::uint64_t>(tx_index),
                      static_cast<std::uint64_t>(step));
    LocalBatchPass pass =
        local_batch_pass(policies, tx_index, batch, noise_power, config.dropout_rate, dropout_seed);
    check_diverged(pass.objective, step, "local training objective");
    objective.push_back(pass.objective);

    adam_step(p.params, pass.grads, adam, config.learning_rate, StepDirection::Ascent);
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 &&
        (step + 1) % hooks.checkpoint_every == 0) {
      hooks.on_checkpoint(step + 1, policies);
    }
  }
  return objective;
}

EvalReport evaluate_policy(const DecisionFn& decide,
                           std::span<const ChannelSample> eval_set, double p_max,
                           double noise_power) {
  if (eval_set.empty()) fail(ErrorCode::InvalidArgument, "empty evaluation set");
  const int k = static_cast<int>(eval_set[0].gains.rows());
  const int n = static_cast<int>(eval_set.size());

  EvalReport report;
  report.n_eval = n;
  report.transmit_fraction = Vec::Zero(k);
  Vec powers(k);
  double sum = 0.0, sum_sq = 0.0;
  for (const ChannelSample& s : eval_set) {
    const PowerDecision d = decide(s);
    if (d.k_users() != k) fail(ErrorCode::Dimension, "decision length mismatch");
    for (int j = 0; j < k; ++j) powers(j) = d.on[j] ? p_max : 0.0;
    const double r = sum_rate(s.gains, powers, noise_power);
    sum += r;
    sum_sq += r * r;
    for (int j = 0; j < k; ++j)
      if (d.on[j]) report.transmit_fraction(j) += 1.0;
  }
  report.expected_sum_rate = sum / n;
  report.transmit_fraction /= static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
    report.confidence_halfwidth = 1.96 * std::sqrt(var / n);
  }
  return report;
}

TrainedPolicy run_training(int k_users, PolicyKind kind, const TrainConfig& config,
                           const GainVarianceSpec& variance, const CsiNoiseSpec& noise,
                           double p_max, double noise_power, std::uint64_t point_seed,
                           bool pretrain_only, const TrainHooks& hooks) {
  config.validate();
  const std::uint64_t train_domain = derive_stream(point_seed, Role::TrainDomain);
  const std::vector<ChannelSample> train_set =
      sample_batch(config.n_train, k_users, variance, noise, train_domain);

  TrainedPolicy out;
  out.policies = init_policies(k_users, kind, config, train_set, p_max, train_domain);
  out.policies.seed = point_seed;
  for (int j = 0; j < k_users; ++j)
    pretrain_naive(out.policies, j, train_set, config, noise_power, train_domain);
  if (pretrain_only) return out;

  if (kind == PolicyKind::Cdnn) {
    out.objectives.push_back(
        train_joint(out.policies, train_set, config, noise_power, train_domain, hooks));
  } else {
    for (int j = 0; j < k_users; ++j) {
      out.objectives.push_back(train_locally_robust(out.policies, j, train_set, config,
                                                    noise_power, train_domain, hooks));
    }
  }
  return out;
}

}  // namespace declink
