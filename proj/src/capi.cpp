#include "declink/declink.h"

#include <cstring>
#include <string>

#include "errors.hpp"
#include "scenario.hpp"
#include "sweep.hpp"

using namespace declink;

// Handle definitions behind the opaque C API types.
struct dlk_scenario {
  ScenarioConfig config;
};

struct dlk_policies {
  PolicySet set;
  std::vector<std::vector<double>> objectives;
};

namespace {

thread_local std::string g_last_error;

dlk_status to_status(const Error& e) {
  return static_cast<dlk_status>(static_cast<int>(e.code()));
}

template <typename Fn>
dlk_status guarded(Fn&& fn) {
  try {
    fn();
    return DLK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DLK_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DLK_ERR_INTERNAL;
  }
}

dlk_status invalid(const char* message) {
  g_last_error = message;
  return DLK_ERR_INVALID_ARGUMENT;
}

Mat mat_from_buffer(int k, const double* data) {
  Mat m(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = data[i * k + j];
  return m;
}

PolicyChoice choice_from_kind(dlk_policy_kind kind) {
  switch (kind) {
    case DLK_POLICY_CDNN: return PolicyChoice::Cdnn;
    case DLK_POLICY_LOCALLY_ROBUST: return PolicyChoice::LocallyRobust;
    case DLK_POLICY_NAIVE: return PolicyChoice::Naive;
    case DLK_POLICY_PERFECT_CSI: return PolicyChoice::PerfectCsi;
    case DLK_POLICY_TDMA: return PolicyChoice::Tdma;
    case DLK_POLICY_ALWAYS_ON: return PolicyChoice::AlwaysOn;
  }
  fail(ErrorCode::InvalidArgument, "unknown policy kind");
}

}  // namespace

extern "C" {

const char* dlk_version(void) { return "declink 1.0.0"; }

const char* dlk_status_name(dlk_status status) {
  switch (status) {
    case DLK_OK: return "ok";
    case DLK_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DLK_ERR_DOMAIN: return "domain error";
    case DLK_ERR_DIMENSION: return "dimension mismatch";
    case DLK_ERR_CAPACITY: return "capacity exceeded";
    case DLK_ERR_PARSE: return "parse error";
    case DLK_ERR_VALIDATION: return "validation error";
    case DLK_ERR_IO: return "i/o error";
    case DLK_ERR_DIVERGED: return "training diverged";
    case DLK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* dlk_last_error(void) { return g_last_error.c_str(); }

int dlk_preset_count(void) { return static_cast<int>(preset_names().size()); }

const char* dlk_preset_name(int index) {
  static const std::vector<std::string> names = preset_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

dlk_status dlk_scenario_preset(const char* name, dlk_scenario** out) {
  if (!name || !out) return invalid("name and out must be non-null");
  return guarded([&] { *out = new dlk_scenario{preset_scenario(name)}; });
}

dlk_status dlk_scenario_load(const char* path, dlk_scenario** out) {
  if (!path || !out) return invalid("path and out must be non-null");
  return guarded([&] { *out = new dlk_scenario{load_scenario(path)}; });
}

void dlk_scenario_free(dlk_scenario* scenario) { delete scenario; }

int dlk_scenario_k_users(const dlk_scenario* scenario) {
  return scenario ? scenario->config.k_users : 0;
}

const char* dlk_scenario_name(const dlk_scenario* scenario) {
  return scenario ? scenario->config.name.c_str() : nullptr;
}

dlk_status dlk_scenario_json(const dlk_scenario* scenario, char** out) {
  if (!scenario || !out) return invalid("scenario and out must be non-null");
  return guarded([&] {
    const std::string text = scenario_to_json(scenario->config);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void dlk_string_free(char* s) { delete[] s; }

dlk_status dlk_sigma_bar(int k, const double* sigma, double* out) {
  if (k < 1 || !sigma || !out) return invalid("need k >= 1 and non-null buffers");
  return guarded([&] {
    const Mat result = sigma_bar(mat_from_buffer(k, sigma));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) out[i * k + j] = result(i, j);
  });
}

dlk_status dlk_sum_rate(int k, const double* gains, const double* powers,
                        double noise_power, double* rate_out) {
  if (k < 1 || !gains || !powers || !rate_out)
    return invalid("need k >= 1 and non-null buffers");
  return guarded([&] {
    Vec p(k);
    for (int j = 0; j < k; ++j) p(j) = powers[j];
    *rate_out = sum_rate(mat_from_buffer(k, gains), p, noise_power);
  });
}

dlk_status dlk_exhaustive_best(int k, const double* gains, double p_max,
                               double noise_power, uint8_t* decisions_out) {
  if (k < 1 || !gains || !decisions_out) return invalid("need k >= 1 and non-null buffers");
  return guarded([&] {
    const PowerDecision d = exhaustive_best(mat_from_buffer(k, gains), p_max, noise_power);
    for (int j = 0; j < k; ++j) decisions_out[j] = d.on[j];
  });
}

dlk_status dlk_train(const dlk_scenario* scenario, dlk_policy_kind kind, double sigma,
                     uint64_t seed, int pretrain_only, const char* checkpoint_dir,
                     dlk_policies** out) {
  if (!scenario || !out) return invalid("scenario and out must be non-null");
  if (kind != DLK_POLICY_CDNN && kind != DLK_POLICY_LOCALLY_ROBUST)
    return invalid("only cdnn and locally_robust policies are trainable");
  return guarded([&] {
    const ScenarioConfig& config = scenario->config;
    const CsiNoiseSpec noise = instantiate_noise(config, sigma);
    const std::uint64_t point_seed = derive_stream(seed, Role::SigmaPoint, 0);
    const PolicyKind pk =
        kind == DLK_POLICY_CDNN ? PolicyKind::Cdnn : PolicyKind::LocallyRobust;

    TrainHooks hooks;
    std::string base;
    if (checkpoint_dir && checkpoint_dir[0] != '\0') {
      base = std::string(checkpoint_dir) + "/" + config.name + "_" +
             (pk == PolicyKind::Cdnn ? "cdnn" : "locally_robust");
      hooks.on_checkpoint = [base](long step, const PolicySet& p) {
        save_policy_set(p, base + "_step" + std::to_string(step) + ".ckpt");
      };
    }
    TrainedPolicy trained =
        run_training(config.k_users, pk, config.train, config.gain_variance, noise,
                     config.p_max, config.noise_power, point_seed, pretrain_only != 0, hooks);
    *out = new dlk_policies{std::move(trained.policies), std::move(trained.objectives)};
  });
}

void dlk_policies_free(dlk_policies* policies) { delete policies; }

dlk_status dlk_policies_save(const dlk_policies* policies, const char* path) {
  if (!policies || !path) return invalid("policies and path must be non-null");
  return guarded([&] { save_policy_set(policies->set, path); });
}

dlk_status dlk_policies_load(const char* path, dlk_policies** out) {
  if (!path || !out) return invalid("path and out must be non-null");
  return guarded([&] { *out = new dlk_policies{load_policy_set(path), {}}; });
}

int dlk_policies_k_users(const dlk_policies* policies) {
  return policies ? policies->set.k_users : 0;
}

dlk_status dlk_policies_kind(const dlk_policies* policies, dlk_policy_kind* out) {
  if (!policies || !out) return invalid("policies and out must be non-null");
  *out = policies->set.kind == PolicyKind::Cdnn ? DLK_POLICY_CDNN
                                                : DLK_POLICY_LOCALLY_ROBUST;
  return DLK_OK;
}

dlk_status dlk_policies_decide(const dlk_policies* policies, int tx,
                               const double* estimate, uint8_t* on_out) {
  if (!policies || !estimate || !on_out) return invalid("need non-null buffers");
  return guarded([&] {
    const int k = policies->set.k_users;
    *on_out = policies->set.decide(tx, mat_from_buffer(k, estimate)) ? 1 : 0;
  });
}

int dlk_objective_count(const dlk_policies* policies) {
  return policies ? static_cast<int>(policies->objectives.size()) : 0;
}

dlk_status dlk_objective_curve(const dlk_policies* policies, int index,
                               const double** data_out, int* len_out) {
  if (!policies || !data_out || !len_out) return invalid("need non-null buffers");
  if (index < 0 || index >= static_cast<int>(policies->objectives.size()))
    return invalid("objective curve index out of range");
  const auto& curve = policies->objectives[static_cast<std::size_t>(index)];
  *data_out = curve.data();
  *len_out = static_cast<int>(curve.size());
  return DLK_OK;
}

dlk_status dlk_evaluate(const dlk_scenario* scenario, double sigma, uint64_t seed,
                        dlk_policy_kind kind, const dlk_policies* policies,
                        dlk_eval_report* report_out, double* tx_fractions_out) {
  if (!scenario || !report_out) return invalid("scenario and report_out must be non-null");
  return guarded([&] {
    const ScenarioConfig& config = scenario->config;
    const std::vector<ChannelSample> eval_set = make_eval_set(config, sigma, seed, 0);
    EvalReport report;
    if (policies) {
      if (policies->set.k_users != config.k_users)
        fail(ErrorCode::Dimension, "policy set K does not match scenario");
      report = evaluate_policy(deployed_policy(policies->set), eval_set, config.p_max,
                               config.noise_power);
    } else {
      const PolicyChoice choice = choice_from_kind(kind);
      if (choice == PolicyChoice::Cdnn || choice == PolicyChoice::LocallyRobust)
        fail(ErrorCode::InvalidArgument,
             "learned policies need a trained handle; run dlk_train first");
      report = evaluate_policy_choice(config, choice, sigma, seed, 0, nullptr, eval_set);
    }
    report_out->expected_sum_rate = report.expected_sum_rate;
    report_out->ci_halfwidth = report.confidence_halfwidth;
    report_out->n_eval = report.n_eval;
    if (tx_fractions_out) {
      for (int j = 0; j < config.k_users; ++j)
        tx_fractions_out[j] = report.transmit_fraction(j);
    }
  });
}

dlk_status dlk_sigma_grid_parse(const char* spec, double* out, int capacity,
                                int* len_out) {
  if (!spec || !out || !len_out || capacity < 1) return invalid("need non-null buffers");
  return guarded([&] {
    const std::vector<double> grid = parse_sigma_grid(spec);
    if (static_cast<int>(grid.size()) > capacity)
      fail(ErrorCode::Capacity, "sigma grid larger than the supplied buffer");
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[i];
    *len_out = static_cast<int>(grid.size());
  });
}

dlk_status dlk_sweep_run(const dlk_scenario* scenario, const double* sigma_grid,
                         int grid_len, uint64_t seed, const char* csv_path, int jobs,
                         const char* checkpoint_dir) {
  if (!scenario || !sigma_grid || grid_len < 1 || !csv_path)
    return invalid("need a scenario, a non-empty grid, and a CSV path");
  return guarded([&] {
    std::vector<double> grid(sigma_grid, sigma_grid + grid_len);
    run_sweep(scenario->config, grid, seed, csv_path, jobs,
              checkpoint_dir ? checkpoint_dir : "");
  });
}

}  // extern "C"
