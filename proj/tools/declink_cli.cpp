// declink command-line front end. Talks to the shared library exclusively
// through the public C API.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "declink/declink.h"

namespace {

[[noreturn]] void die(dlk_status status, const std::string& context) {
  std::cerr << "error: " << context << ": " << dlk_status_name(status);
  const char* detail = dlk_last_error();
  if (detail && detail[0] != '\0') std::cerr << " (" << detail << ")";
  std::cerr << "\n";
  std::exit(static_cast<int>(status));
}

void check(dlk_status status, const std::string& context) {
  if (status != DLK_OK) die(status, context);
}

struct ScenarioHandle {
  dlk_scenario* ptr = nullptr;
  ~ScenarioHandle() { dlk_scenario_free(ptr); }
};

struct PoliciesHandle {
  dlk_policies* ptr = nullptr;
  ~PoliciesHandle() { dlk_policies_free(ptr); }
};

// A scenario reference is either a bundled preset name or a JSON file path.
void resolve_scenario(const std::string& ref, ScenarioHandle& out) {
  for (int i = 0; i < dlk_preset_count(); ++i) {
    if (ref == dlk_preset_name(i)) {
      check(dlk_scenario_preset(ref.c_str(), &out.ptr), "loading preset " + ref);
      return;
    }
  }
  check(dlk_scenario_load(ref.c_str(), &out.ptr), "loading scenario " + ref);
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string policy_label(dlk_policy_kind kind) {
  switch (kind) {
    case DLK_POLICY_CDNN: return "cdnn";
    case DLK_POLICY_LOCALLY_ROBUST: return "locally_robust";
    case DLK_POLICY_NAIVE: return "naive";
    case DLK_POLICY_PERFECT_CSI: return "perfect_csi";
    case DLK_POLICY_TDMA: return "tdma";
    case DLK_POLICY_ALWAYS_ON: return "always_on";
  }
  return "unknown";
}

dlk_policy_kind policy_from_label(const std::string& name) {
  for (int k = 0; k <= DLK_POLICY_ALWAYS_ON; ++k) {
    const auto kind = static_cast<dlk_policy_kind>(k);
    if (name == policy_label(kind)) return kind;
  }
  std::cerr << "error: unknown policy '" << name << "'\n";
  std::exit(static_cast<int>(DLK_ERR_INVALID_ARGUMENT));
}

std::string checkpoint_base(const std::string& dir, const std::string& scenario,
                            const std::string& policy, double sigma, uint64_t seed) {
  return dir + "/" + scenario + "_" + policy + "_sigma" + fmt6(sigma) + "_seed" +
         std::to_string(seed);
}

void write_eval_rows(std::ostream& os, const std::string& scenario, double sigma,
                     const std::string& policy, const dlk_eval_report& report,
                     const std::vector<double>& fractions, uint64_t seed) {
  os << "scenario,sigma,policy,metric,tx_index,value,ci_halfwidth,n_eval,seed\n";
  os << scenario << ',' << fmt6(sigma) << ',' << policy << ",sum_rate,,"
     << fmt6(report.expected_sum_rate) << ',' << fmt6(report.ci_halfwidth) << ','
     << report.n_eval << ',' << seed << '\n';
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    const double f = fractions[j];
    const double ci = 1.96 * std::sqrt(f * (1.0 - f) / report.n_eval);
    os << scenario << ',' << fmt6(sigma) << ',' << policy << ",transmit_fraction,"
       << (j + 1) << ',' << fmt6(f) << ',' << fmt6(ci) << ',' << report.n_eval << ','
       << seed << '\n';
  }
}

void save_training_outputs(const PoliciesHandle& trained, const std::string& dir,
                           const std::string& scenario, const std::string& policy,
                           double sigma, uint64_t seed, bool pretrain_only) {
  std::filesystem::create_directories(dir);
  std::string base = checkpoint_base(dir, scenario, policy, sigma, seed);
  if (pretrain_only) base += "_pretrain";
  check(dlk_policies_save(trained.ptr, (base + ".ckpt").c_str()), "saving checkpoint");
  std::cout << "checkpoint: " << base << ".ckpt\n";

  const int curves = dlk_objective_count(trained.ptr);
  for (int c = 0; c < curves; ++c) {
    const double* data = nullptr;
    int len = 0;
    check(dlk_objective_curve(trained.ptr, c, &data, &len), "reading objective curve");
    const std::string path =
        curves == 1 ? base + ".objective.tsv"
                    : base + "_tx" + std::to_string(c + 1) + ".objective.tsv";
    std::ofstream log(path);
    for (int i = 0; i < len; ++i) log << (i + 1) << '\t' << fmt6(data[i]) << '\n';
    std::cout << "objective log: " << path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"declink: decentralized link scheduling in interference channels"};
  app.require_subcommand(1);

  std::string scenario_ref, out_path, checkpoint_dir = ".", checkpoint_file, grid_spec;
  std::string policy_name = "cdnn";
  double sigma = 0.0;
  uint64_t seed = 0;
  int jobs = 1;
  std::string dump_name;

  auto* presets = app.add_subcommand("presets", "List bundled scenario presets");
  presets->add_option("--dump", dump_name, "Print one preset as scenario JSON");

  auto* pretrain = app.add_subcommand("pretrain", "Supervised initialization only");
  auto* train = app.add_subcommand("train", "Pretrain and train a learned policy");
  for (CLI::App* cmd : {pretrain, train}) {
    cmd->add_option("--scenario", scenario_ref, "Preset name or scenario JSON path")
        ->required();
    cmd->add_option("--sigma", sigma, "CSI quality parameter in [0,1]");
    cmd->add_option("--seed", seed, "Root seed");
    cmd->add_option("--policy", policy_name, "cdnn or locally_robust");
    cmd->add_option("--checkpoint-dir", checkpoint_dir, "Output directory");
  }

  auto* eval = app.add_subcommand("eval", "Evaluate one policy at one sigma point");
  eval->add_option("--scenario", scenario_ref, "Preset name or scenario JSON path")
      ->required();
  eval->add_option("--sigma", sigma, "CSI quality parameter in [0,1]");
  eval->add_option("--seed", seed, "Root seed");
  eval->add_option("--policy", policy_name, "Baseline policy to evaluate");
  eval->add_option("--checkpoint", checkpoint_file, "Trained policy checkpoint");
  eval->add_option("--out", out_path, "Write CSV here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Sigma sweep with training per point");
  sweep->add_option("--scenario", scenario_ref, "Preset name or scenario JSON path")
      ->required();
  sweep->add_option("--sigma-grid", grid_spec, "Grid as a:b:step")->required();
  sweep->add_option("--seed", seed, "Root seed");
  sweep->add_option("--out", out_path, "Output CSV path")->required();
  sweep->add_option("--jobs", jobs, "Parallel sigma points");
  sweep->add_option("--checkpoint-dir", checkpoint_dir, "Save checkpoints here");
  bool sweep_checkpoints = false;
  sweep->add_flag("--save-checkpoints", sweep_checkpoints,
                  "Write per-point checkpoints into --checkpoint-dir");

  CLI11_PARSE(app, argc, argv);

  if (presets->parsed()) {
    if (!dump_name.empty()) {
      ScenarioHandle scn;
      check(dlk_scenario_preset(dump_name.c_str(), &scn.ptr), "loading preset " + dump_name);
      char* text = nullptr;
      check(dlk_scenario_json(scn.ptr, &text), "rendering scenario");
      std::cout << text;
      dlk_string_free(text);
      return 0;
    }
    for (int i = 0; i < dlk_preset_count(); ++i) {
      ScenarioHandle scn;
      check(dlk_scenario_preset(dlk_preset_name(i), &scn.ptr), "loading preset");
      std::cout << dlk_preset_name(i) << "  (K=" << dlk_scenario_k_users(scn.ptr) << ")\n";
    }
    return 0;
  }

  if (pretrain->parsed() || train->parsed()) {
    const bool pretrain_only = pretrain->parsed();
    const dlk_policy_kind kind = policy_from_label(policy_name);
    if (kind != DLK_POLICY_CDNN && kind != DLK_POLICY_LOCALLY_ROBUST) {
      std::cerr << "error: only cdnn and locally_robust can be trained\n";
      return static_cast<int>(DLK_ERR_INVALID_ARGUMENT);
    }
    ScenarioHandle scn;
    resolve_scenario(scenario_ref, scn);
    PoliciesHandle trained;
    check(dlk_train(scn.ptr, kind, sigma, seed, pretrain_only ? 1 : 0, nullptr, &trained.ptr),
          "training");
    save_training_outputs(trained, checkpoint_dir, dlk_scenario_name(scn.ptr),
                          policy_label(kind), sigma, seed, pretrain_only);
    return 0;
  }

  if (eval->parsed()) {
    ScenarioHandle scn;
    resolve_scenario(scenario_ref, scn);
    const int k = dlk_scenario_k_users(scn.ptr);
    std::vector<double> fractions(static_cast<std::size_t>(k), 0.0);
    dlk_eval_report report{};
    std::string label;

    if (!checkpoint_file.empty()) {
      PoliciesHandle loaded;
      check(dlk_policies_load(checkpoint_file.c_str(), &loaded.ptr), "loading checkpoint");
      dlk_policy_kind kind = DLK_POLICY_CDNN;
      check(dlk_policies_kind(loaded.ptr, &kind), "reading checkpoint kind");
      label = policy_label(kind);
      check(dlk_evaluate(scn.ptr, sigma, seed, kind, loaded.ptr, &report, fractions.data()),
            "evaluating checkpoint");
    } else {
      const dlk_policy_kind kind = policy_from_label(policy_name);
      label = policy_label(kind);
      check(dlk_evaluate(scn.ptr, sigma, seed, kind, nullptr, &report, fractions.data()),
            "evaluating policy");
    }

    if (out_path.empty()) {
      write_eval_rows(std::cout, dlk_scenario_name(scn.ptr), sigma, label, report,
                      fractions, seed);
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) die(DLK_ERR_IO, "opening " + out_path);
      write_eval_rows(out, dlk_scenario_name(scn.ptr), sigma, label, report, fractions, seed);
    }
    return 0;
  }

  if (sweep->parsed()) {
    ScenarioHandle scn;
    resolve_scenario(scenario_ref, scn);
    std::vector<double> grid(1024);
    int grid_len = 0;
    check(dlk_sigma_grid_parse(grid_spec.c_str(), grid.data(),
                               static_cast<int>(grid.size()), &grid_len),
          "parsing sigma grid");
    const char* ckpt = nullptr;
    if (sweep_checkpoints) {
      std::filesystem::create_directories(checkpoint_dir);
      ckpt = checkpoint_dir.c_str();
    }
    check(dlk_sweep_run(scn.ptr, grid.data(), grid_len, seed, out_path.c_str(), jobs, ckpt),
          "running sweep");
    std::cout << "wrote " << out_path << " (" << grid_len << " sigma points)\n";
    return 0;
  }

  return 0;
}
