#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenario.hpp"

namespace declink {

// One CSV record: a rate row (tx_index = 0, metric "sum_rate"), a per-TX
// transmit-fraction row (tx_index 1-based), or an error marker.
struct SweepRow {
  std::string scenario;
  double sigma = 0.0;
  std::string policy;
  std::string metric;  // "sum_rate", "transmit_fraction", or "error"
  int tx_index = 0;
  double value = 0.0;
  double ci_halfwidth = 0.0;
  int n_eval = 0;
  std::uint64_t seed = 0;
};

std::string csv_header();
std::string csv_line(const SweepRow& row);
void write_csv(const std::vector<SweepRow>& rows, const std::string& path);

// Evaluation set for one sweep point; sigma_index keys the point's seed
// domain (standalone runs use index 0, identical to a one-point grid).
std::vector<ChannelSample> make_eval_set(const ScenarioConfig& config, double sigma,
                                         std::uint64_t root_seed, int sigma_index = 0);

// Train (when needed) and evaluate one policy at one sweep point. learned
// may supply an already trained policy set; tdma_tx_out reports which TX the
// TDMA baseline settled on.
EvalReport evaluate_policy_choice(const ScenarioConfig& config, PolicyChoice choice,
                                  double sigma, std::uint64_t root_seed, int sigma_index,
                                  const PolicySet* learned,
                                  std::span<const ChannelSample> eval_set,
                                  int* tdma_tx_out = nullptr);

// Full sweep: per sigma, train the learned policies and score every
// requested policy on that point's evaluation set. Rows arrive in grid
// order, policies in the order the scenario lists them. Training failures
// become error-marker rows. When csv_path is non-empty the rows are also
// written as CSV; when checkpoint_dir is non-empty each learned policy's
// final checkpoint and objective log land there.
std::vector<SweepRow> run_sweep(const ScenarioConfig& config,
                                const std::vector<double>& sigma_grid,
                                std::uint64_t root_seed, const std::string& csv_path,
                                int jobs = 1, const std::string& checkpoint_dir = "");

}  // namespace declink
