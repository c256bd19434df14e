#include "scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace declink {

using nlohmann::json;

namespace {

constexpr const char* kPolicyNames[] = {"cdnn",        "locally_robust", "naive",
                                        "perfect_csi", "tdma",           "always_on"};

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(ErrorCode::Validation, path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known) bad(path, "unknown key '" + it.key() + "'");
  }
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) bad(path, std::string("missing required key '") + key + "'");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) bad(path + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback,
            bool required = false) {
  if (!obj.contains(key)) {
    if (required) bad(path, std::string("missing required key '") + key + "'");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

SigmaEntry parse_sigma_entry(const json& v, const std::string& path) {
  SigmaEntry e;
  if (v.is_number()) {
    e.is_sigma = false;
    e.value = v.get<double>();
    return e;
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "sigma") {
      e.is_sigma = true;
      e.value = 1.0;
      return e;
    }
    double coeff = 0.0;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%lf*sigma%n", &coeff, &consumed) == 1 &&
        consumed == static_cast<int>(s.size())) {
      e.is_sigma = true;
      e.value = coeff;
      return e;
    }
    bad(path, "expected a number, \"sigma\", or \"<coeff>*sigma\", got \"" + s + "\"");
  }
  bad(path, "expected a number or a sigma expression");
}

Mat parse_matrix(const json& v, int k, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != k)
    bad(path, "expected an array of " + std::to_string(k) + " rows");
  Mat m(k, k);
  for (int i = 0; i < k; ++i) {
    const json& row = v.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != k)
      bad(path + "[" + std::to_string(i) + "]",
          "expected an array of " + std::to_string(k) + " numbers");
    for (int j = 0; j < k; ++j) {
      const json& cell = row.at(j);
      if (!cell.is_number())
        bad(path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
            "expected a number");
      m(i, j) = cell.get<double>();
    }
  }
  return m;
}

json sigma_entry_to_json(const SigmaEntry& e) {
  if (!e.is_sigma) return json(e.value);
  if (e.value == 1.0) return json("sigma");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g*sigma", e.value);
  return json(std::string(buf));
}

std::vector<SigmaEntry> uniform_sigma_template(int k, double coeff) {
  std::vector<SigmaEntry> t(static_cast<std::size_t>(k) * k);
  for (auto& e : t) {
    e.is_sigma = true;
    e.value = coeff;
  }
  return t;
}

std::vector<SigmaEntry> zero_sigma_template(int k) {
  return std::vector<SigmaEntry>(static_cast<std::size_t>(k) * k);
}

std::vector<PolicyChoice> all_policies() {
  return {PolicyChoice::Cdnn, PolicyChoice::LocallyRobust, PolicyChoice::Naive,
          PolicyChoice::PerfectCsi, PolicyChoice::Tdma, PolicyChoice::AlwaysOn};
}

TrainConfig parse_train(const json& obj, const std::string& path) {
  TrainConfig t;
  check_keys(obj, path,
             {"n_train", "batch_size", "steps", "learning_rate", "dropout_rate", "seed",
              "pretrain_steps", "pretrain_labels_from", "hidden_sizes"});
  t.n_train = get_int(obj, path, "n_train", t.n_train);
  t.batch_size = get_int(obj, path, "batch_size", t.batch_size);
  t.steps = get_int(obj, path, "steps", t.steps);
  t.learning_rate = get_number(obj, path, "learning_rate", t.learning_rate);
  t.dropout_rate = get_number(obj, path, "dropout_rate", t.dropout_rate);
  if (obj.contains("seed")) {
    const json& v = obj.at("seed");
    if (!v.is_number_unsigned() && !v.is_number_integer()) bad(path + ".seed", "expected an integer");
    t.seed = v.get<std::uint64_t>();
  }
  t.pretrain_steps = get_int(obj, path, "pretrain_steps", t.pretrain_steps);
  if (obj.contains("pretrain_labels_from")) {
    const json& v = obj.at("pretrain_labels_from");
    if (!v.is_string()) bad(path + ".pretrain_labels_from", "expected a string");
    const std::string s = v.get<std::string>();
    if (s == "estimate") {
      t.pretrain_labels_from = PretrainLabels::Estimate;
    } else if (s == "truth") {
      t.pretrain_labels_from = PretrainLabels::Truth;
    } else {
      bad(path + ".pretrain_labels_from", "expected \"estimate\" or \"truth\"");
    }
  }
  if (obj.contains("hidden_sizes")) {
    const json& v = obj.at("hidden_sizes");
    if (!v.is_array() || v.empty()) bad(path + ".hidden_sizes", "expected a non-empty array");
    t.hidden_sizes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v.at(i).is_number_integer())
        bad(path + ".hidden_sizes[" + std::to_string(i) + "]", "expected an integer");
      t.hidden_sizes.push_back(v.at(i).get<int>());
    }
  }
  return t;
}

}  // namespace

const char* policy_name(PolicyChoice p) { return kPolicyNames[static_cast<int>(p)]; }

PolicyChoice policy_from_name(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kPolicyNames[i]) return static_cast<PolicyChoice>(i);
  fail(ErrorCode::Validation, "unknown policy '" + name + "'");
}

void ScenarioConfig::validate() const {
  if (name.empty()) fail(ErrorCode::Validation, "scenario name must not be empty");
  if (k_users < 1 || k_users > kMaxExhaustiveUsers)
    fail(ErrorCode::Validation, "k_users must lie in [1, 20]");
  if (!(p_max > 0.0)) fail(ErrorCode::Validation, "p_max must be > 0");
  if (!(noise_power > 0.0)) fail(ErrorCode::Validation, "noise_power must be > 0");
  gain_variance.validate(k_users);
  if (static_cast<int>(csi_template.size()) != k_users)
    fail(ErrorCode::Validation, "csi_template must have one matrix per TX");
  for (int j = 0; j < k_users; ++j) {
    if (static_cast<int>(csi_template[j].size()) != k_users * k_users)
      fail(ErrorCode::Validation,
           "csi_template[" + std::to_string(j) + "] must be " + std::to_string(k_users) +
               "x" + std::to_string(k_users));
    for (std::size_t i = 0; i < csi_template[j].size(); ++i) {
      const SigmaEntry& e = csi_template[j][i];
      // Entries are affine in sigma, so the [0,1] range over the whole sweep
      // axis is pinned by the endpoints.
      for (double s : {0.0, 1.0}) {
        const double v = e.resolve(s);
        if (!(v >= 0.0 && v <= 1.0)) {
          std::ostringstream os;
          os << "csi_template[" << j << "] entry " << i << " resolves to " << v
             << " at sigma=" << s << ", outside [0, 1]";
          fail(ErrorCode::Validation, os.str());
        }
      }
    }
  }
  if (n_eval < 1) fail(ErrorCode::Validation, "n_eval must be >= 1");
  if (policies.empty()) fail(ErrorCode::Validation, "policies must not be empty");
  std::set<int> seen;
  for (PolicyChoice p : policies)
    if (!seen.insert(static_cast<int>(p)).second)
      fail(ErrorCode::Validation, std::string("duplicate policy '") + policy_name(p) + "'");
  train.validate();
}

ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, origin + ": " + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::Parse, origin + ": top-level value must be an object");

  const std::string path = origin;
  check_keys(root, path,
             {"name", "k_users", "p_max", "noise_power", "gain_variance", "csi_template",
              "shared_estimate", "n_eval", "policies", "train"});

  ScenarioConfig c;
  if (!root.contains("name") || !root.at("name").is_string())
    bad(path, "missing or non-string 'name'");
  c.name = root.at("name").get<std::string>();
  c.k_users = get_int(root, path, "k_users", 0, /*required=*/true);
  if (c.k_users < 1 || c.k_users > kMaxExhaustiveUsers) bad(path + ".k_users", "must lie in [1, 20]");
  c.p_max = get_number(root, path, "p_max", 1.0);
  c.noise_power = get_number(root, path, "noise_power", 1.0);
  c.gain_variance = root.contains("gain_variance")
                        ? GainVarianceSpec{parse_matrix(root.at("gain_variance"), c.k_users,
                                                        path + ".gain_variance")}
                        : GainVarianceSpec::ones(c.k_users);

  if (!root.contains("csi_template")) bad(path, "missing required key 'csi_template'");
  const json& tmpl = root.at("csi_template");
  if (!tmpl.is_array() || static_cast<int>(tmpl.size()) != c.k_users)
    bad(path + ".csi_template", "expected one matrix per TX");
  for (int j = 0; j < c.k_users; ++j) {
    const json& m = tmpl.at(j);
    const std::string mpath = path + ".csi_template[" + std::to_string(j) + "]";
    if (!m.is_array() || static_cast<int>(m.size()) != c.k_users)
      bad(mpath, "expected " + std::to_string(c.k_users) + " rows");
    std::vector<SigmaEntry> entries;
    for (int r = 0; r < c.k_users; ++r) {
      const json& row = m.at(r);
      if (!row.is_array() || static_cast<int>(row.size()) != c.k_users)
        bad(mpath + "[" + std::to_string(r) + "]",
            "expected " + std::to_string(c.k_users) + " entries");
      for (int col = 0; col < c.k_users; ++col) {
        entries.push_back(parse_sigma_entry(
            row.at(col), mpath + "[" + std::to_string(r) + "][" + std::to_string(col) + "]"));
      }
    }
    c.csi_template.push_back(std::move(entries));
  }

  c.shared_estimate = get_bool(root, path, "shared_estimate", false);
  c.n_eval = get_int(root, path, "n_eval", c.n_eval);
  if (root.contains("policies")) {
    const json& v = root.at("policies");
    if (!v.is_array()) bad(path + ".policies", "expected an array of policy names");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v.at(i).is_string())
        bad(path + ".policies[" + std::to_string(i) + "]", "expected a string");
      c.policies.push_back(policy_from_name(v.at(i).get<std::string>()));
    }
  } else {
    c.policies = all_policies();
  }
  c.train = root.contains("train") ? parse_train(root.at("train"), path + ".train")
                                   : TrainConfig{};
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) fail(ErrorCode::Io, "cannot open scenario file: " + file_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str(), file_path);
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json root;
  root["name"] = c.name;
  root["k_users"] = c.k_users;
  root["p_max"] = c.p_max;
  root["noise_power"] = c.noise_power;
  json var = json::array();
  for (int i = 0; i < c.k_users; ++i) {
    json row = json::array();
    for (int j = 0; j < c.k_users; ++j) row.push_back(c.gain_variance.variances(i, j));
    var.push_back(row);
  }
  root["gain_variance"] = var;
  json tmpl = json::array();
  for (int t = 0; t < c.k_users; ++t) {
    json m = json::array();
    for (int i = 0; i < c.k_users; ++i) {
      json row = json::array();
      for (int j = 0; j < c.k_users; ++j)
        row.push_back(sigma_entry_to_json(c.csi_template[t][i * c.k_users + j]));
      m.push_back(row);
    }
    tmpl.push_back(m);
  }
  root["csi_template"] = tmpl;
  root["shared_estimate"] = c.shared_estimate;
  root["n_eval"] = c.n_eval;
  json pols = json::array();
  for (PolicyChoice p : c.policies) pols.push_back(policy_name(p));
  root["policies"] = pols;
  json train;
  train["n_train"] = c.train.n_train;
  train["batch_size"] = c.train.batch_size;
  train["steps"] = c.train.steps;
  train["learning_rate"] = c.train.learning_rate;
  train["dropout_rate"] = c.train.dropout_rate;
  train["seed"] = c.train.seed;
  train["pretrain_steps"] = c.train.pretrain_steps;
  train["pretrain_labels_from"] =
      c.train.pretrain_labels_from == PretrainLabels::Estimate ? "estimate" : "truth";
  train["hidden_sizes"] = c.train.hidden_sizes;
  root["train"] = train;
  return root.dump(2) + "\n";
}

std::vector<std::string> preset_names() {
  return {"centralized_2user", "distributed_2user", "distributed_3user"};
}

ScenarioConfig preset_scenario(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.policies = all_policies();
  if (name == "centralized_2user") {
    // Both TXs share one estimate draw; the gain from TX 2 to RX 1 is
    // attenuated, and its estimate entry carries full noise.
    c.k_users = 2;
    c.gain_variance = GainVarianceSpec::ones(2);
    c.gain_variance.variances(0, 1) = 0.25;
    std::vector<SigmaEntry> t(4);
    t[0] = SigmaEntry{false, 0.0};
    t[1] = SigmaEntry{true, 1.0};
    t[2] = SigmaEntry{true, 1.0};
    t[3] = SigmaEntry{false, 1.0};
    c.csi_template = {t, t};
    c.shared_estimate = true;
  } else if (name == "distributed_2user") {
    // TX 1's estimate degrades uniformly with sigma; TX 2 is exact.
    c.k_users = 2;
    c.gain_variance = GainVarianceSpec::ones(2);
    c.csi_template = {uniform_sigma_template(2, 1.0), zero_sigma_template(2)};
  } else if (name == "distributed_3user") {
    // TX 3 has uniformly degraded CSI; TX 1 and TX 2 are exact.
    c.k_users = 3;
    c.gain_variance = GainVarianceSpec::ones(3);
    c.csi_template = {zero_sigma_template(3), zero_sigma_template(3),
                      uniform_sigma_template(3, 1.0)};
  } else {
    fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

CsiNoiseSpec instantiate_noise(const ScenarioConfig& config, double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0))
    fail(ErrorCode::Domain, "sigma must lie in [0, 1]");
  std::vector<Mat> sigmas;
  sigmas.reserve(config.csi_template.size());
  const int k = config.k_users;
  for (int j = 0; j < k; ++j) {
    Mat m(k, k);
    for (int i = 0; i < k; ++i) {
      for (int col = 0; col < k; ++col) {
        const double v = config.csi_template[j][i * k + col].resolve(sigma);
        if (!(v >= 0.0 && v <= 1.0)) {
          std::ostringstream os;
          os << "csi_template[" << j << "](" << i << "," << col << ") resolves to " << v
             << " at sigma=" << sigma << ", outside [0, 1]";
          fail(ErrorCode::Validation, os.str());
        }
        m(i, col) = v;
      }
    }
    sigmas.push_back(std::move(m));
  }
  return CsiNoiseSpec::from_sigma(std::move(sigmas), config.shared_estimate);
}

std::vector<double> parse_sigma_grid(const std::string& spec) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  int consumed = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%n", &lo, &hi, &step, &consumed) != 3 ||
      consumed != static_cast<int>(spec.size())) {
    fail(ErrorCode::Parse, "sigma grid must have the form a:b:step, got '" + spec + "'");
  }
  if (!(step > 0.0)) fail(ErrorCode::Validation, "sigma grid step must be > 0");
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
    fail(ErrorCode::Validation, "sigma grid must lie inside [0, 1]");
  std::vector<double> grid;
  const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) grid.push_back(lo + i * step);
  // Snap the endpoint so "0:1:0.1" lands exactly on 1.
  if (!grid.empty() && std::abs(grid.back() - hi) < 1e-9) grid.back() = hi;
  return grid;
}

}  // namespace declink
