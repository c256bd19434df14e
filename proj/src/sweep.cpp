#include "sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "errors.hpp"

namespace declink {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

bool is_learned(PolicyChoice p) {
  return p == PolicyChoice::Cdnn || p == PolicyChoice::LocallyRobust;
}

std::string checkpoint_base(const std::string& dir, const ScenarioConfig& config,
                            PolicyChoice choice, double sigma, std::uint64_t seed) {
  return dir + "/" + config.name + "_" + policy_name(choice) + "_sigma" + fmt6(sigma) +
         "_seed" + std::to_string(seed);
}

void write_objective_log(const std::string& path, const std::vector<double>& objective) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open objective log for writing: " + path);
  for (std::size_t i = 0; i < objective.size(); ++i)
    out << (i + 1) << '\t' << fmt6(objective[i]) << '\n';
}

TrainedPolicy train_choice(const ScenarioConfig& config, PolicyChoice choice, double sigma,
                           std::uint64_t point_seed, const std::string& checkpoint_dir,
                           std::uint64_t root_seed) {
  const CsiNoiseSpec noise = instantiate_noise(config, sigma);
  const PolicyKind kind =
      choice == PolicyChoice::Cdnn ? PolicyKind::Cdnn : PolicyKind::LocallyRobust;

  TrainHooks hooks;
  std::string base;
  if (!checkpoint_dir.empty()) {
    base = checkpoint_base(checkpoint_dir, config, choice, sigma, root_seed);
    hooks.on_checkpoint = [base](long step, const PolicySet& p) {
      save_policy_set(p, base + "_step" + std::to_string(step) + ".ckpt");
    };
  }
  TrainedPolicy trained =
      run_training(config.k_users, kind, config.train, config.gain_variance, noise,
                   config.p_max, config.noise_power, point_seed, /*pretrain_only=*/false, hooks);
  if (!base.empty()) {
    save_policy_set(trained.policies, base + ".ckpt");
    if (trained.objectives.size() == 1) {
      write_objective_log(base + ".objective.tsv", trained.objectives[0]);
    } else {
      for (std::size_t j = 0; j < trained.objectives.size(); ++j)
        write_objective_log(base + "_tx" + std::to_string(j + 1) + ".objective.tsv",
                            trained.objectives[j]);
    }
  }
  return trained;
}

}  // namespace

std::string csv_header() {
  return "scenario,sigma,policy,metric,tx_index,value,ci_halfwidth,n_eval,seed";
}

std::string csv_line(const SweepRow& row) {
  std::string line = row.scenario + "," + fmt6(row.sigma) + "," + row.policy + "," +
                     row.metric + ",";
  if (row.tx_index > 0) line += std::to_string(row.tx_index);
  line += "," + fmt6(row.value) + "," + fmt6(row.ci_halfwidth) + "," +
          std::to_string(row.n_eval) + "," + std::to_string(row.seed);
  return line;
}

void write_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open CSV for writing: " + path);
  out << csv_header() << '\n';
  for (const SweepRow& row : rows) out << csv_line(row) << '\n';
  if (!out) fail(ErrorCode::Io, "short write to CSV: " + path);
}

std::vector<ChannelSample> make_eval_set(const ScenarioConfig& config, double sigma,
                                         std::uint64_t root_seed, int sigma_index) {
  const CsiNoiseSpec noise = instantiate_noise(config, sigma);
  const std::uint64_t point_seed =
      derive_stream(root_seed, Role::SigmaPoint, static_cast<std::uint64_t>(sigma_index));
  const std::uint64_t eval_domain = derive_stream(point_seed, Role::EvalDomain);
  return sample_batch(config.n_eval, config.k_users, config.gain_variance, noise, eval_domain);
}

EvalReport evaluate_policy_choice(const ScenarioConfig& config, PolicyChoice choice,
                                  double sigma, std::uint64_t root_seed, int sigma_index,
                                  const PolicySet* learned,
                                  std::span<const ChannelSample> eval_set,
                                  int* tdma_tx_out) {
  switch (choice) {
    case PolicyChoice::PerfectCsi:
      return evaluate_policy(perfect_csi_policy(config.p_max, config.noise_power), eval_set,
                             config.p_max, config.noise_power);
    case PolicyChoice::Naive:
      return evaluate_policy(naive_policy(config.p_max, config.noise_power), eval_set,
                             config.p_max, config.noise_power);
    case PolicyChoice::AlwaysOn:
      return evaluate_policy(always_on_policy(config.k_users, config.p_max), eval_set,
                             config.p_max, config.noise_power);
    case PolicyChoice::Tdma: {
      // Strongest fixed single-TX baseline, selected on the evaluation set.
      EvalReport best;
      int best_tx = -1;
      for (int j = 0; j < config.k_users; ++j) {
        EvalReport r = evaluate_policy(tdma_policy(j, config.k_users, config.p_max), eval_set,
                                       config.p_max, config.noise_power);
        if (best_tx < 0 || r.expected_sum_rate > best.expected_sum_rate) {
          best = r;
          best_tx = j;
        }
      }
      if (tdma_tx_out) *tdma_tx_out = best_tx;
      return best;
    }
    case PolicyChoice::Cdnn:
    case PolicyChoice::LocallyRobust: {
      PolicySet trained;
      if (learned == nullptr) {
        const std::uint64_t point_seed = derive_stream(root_seed, Role::SigmaPoint,
                                                       static_cast<std::uint64_t>(sigma_index));
        trained = train_choice(config, choice, sigma, point_seed, "", root_seed).policies;
        learned = &trained;
      }
      return evaluate_policy(deployed_policy(*learned), eval_set, config.p_max,
                             config.noise_power);
    }
  }
  fail(ErrorCode::Internal, "unhandled policy choice");
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& config,
                                const std::vector<double>& sigma_grid,
                                std::uint64_t root_seed, const std::string& csv_path,
                                int jobs, const std::string& checkpoint_dir) {
  config.validate();
  if (sigma_grid.empty()) fail(ErrorCode::InvalidArgument, "sigma grid must not be empty");
  for (double s : sigma_grid)
    if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::Domain, "sigma grid values must lie in [0, 1]");
  if (jobs < 1) jobs = 1;

  std::vector<std::vector<SweepRow>> per_point(sigma_grid.size());

  auto run_point = [&](int index) {
    const double sigma = sigma_grid[static_cast<std::size_t>(index)];
    const std::uint64_t point_seed =
        derive_stream(root_seed, Role::SigmaPoint, static_cast<std::uint64_t>(index));
    const std::vector<ChannelSample> eval_set =
        make_eval_set(config, sigma, root_seed, index);

    std::vector<SweepRow>& rows = per_point[static_cast<std::size_t>(index)];
    for (PolicyChoice choice : config.policies) {
      SweepRow base;
      base.scenario = config.name;
      base.sigma = sigma;
      base.policy = policy_name(choice);
      base.n_eval = config.n_eval;
      base.seed = root_seed;
      try {
        EvalReport report;
        if (is_learned(choice)) {
          const TrainedPolicy trained =
              train_choice(config, choice, sigma, point_seed, checkpoint_dir, root_seed);
          report = evaluate_policy(deployed_policy(trained.policies), eval_set, config.p_max,
                                   config.noise_power);
        } else {
          report = evaluate_policy_choice(config, choice, sigma, root_seed, index, nullptr,
                                          eval_set);
        }
        SweepRow rate = base;
        rate.metric = "sum_rate";
        rate.value = report.expected_sum_rate;
        rate.ci_halfwidth = report.confidence_halfwidth;
        rows.push_back(rate);
        for (int j = 0; j < config.k_users; ++j) {
          SweepRow frac = base;
          frac.metric = "transmit_fraction";
          frac.tx_index = j + 1;
          frac.value = report.transmit_fraction(j);
          const double f = frac.value;
          frac.ci_halfwidth = 1.96 * std::sqrt(f * (1.0 - f) / config.n_eval);
          rows.push_back(frac);
        }
      } catch (const std::exception&) {
        // Keep the sweep going; the marker row records the failure.
        SweepRow err = base;
        err.metric = "error";
        err.value = std::numeric_limits<double>::quiet_NaN();
        err.ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(err);
      }
    }
  };

  if (jobs == 1 || sigma_grid.size() == 1) {
    for (int i = 0; i < static_cast<int>(sigma_grid.size()); ++i) run_point(i);
  } else {
    std::atomic<int> next{0};
    const int workers = std::min<int>(jobs, static_cast<int>(sigma_grid.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= static_cast<int>(sigma_grid.size())) return;
          run_point(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  std::vector<SweepRow> rows;
  for (const auto& point : per_point) rows.insert(rows.end(), point.begin(), point.end());
  if (!csv_path.empty()) write_csv(rows, csv_path);
  return rows;
}

}  // namespace declink
