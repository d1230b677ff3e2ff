#include "galtraj/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "galtraj/errors.hpp"

namespace galtraj::cfg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed value for " + key + ": '" + value + "'");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void AppConfig::sync() {
  predictor.horizons = dataset.horizons;
  denoiser.horizons = dataset.horizons;
  run.predictor = predictor;
  run.seed = seed;
}

AppConfig default_config() {
  AppConfig c;
  c.sync();
  return c;
}

void apply_override(AppConfig& c, const std::string& key, const std::string& value) {
  auto maneuver_key = [&](const std::string& k) -> int {
    const std::string prefix = "dataset.maneuver.";
    if (k.rfind(prefix, 0) != 0) return -1;
    const auto m = world::maneuver_from_name(k.substr(prefix.size()));
    return m ? static_cast<int>(*m) : -1;
  };
  auto topology_key = [&](const std::string& k) -> int {
    const std::string prefix = "dataset.topology.";
    if (k.rfind(prefix, 0) != 0) return -1;
    const auto t = world::topology_from_name(k.substr(prefix.size()));
    return t ? static_cast<int>(*t) : -1;
  };

  if (key == "seed") c.seed = to_u64(key, value);
  else if (key == "dataset.train_count") c.dataset.count = to_int(key, value);
  else if (key == "dataset.val_count") c.val_count = to_int(key, value);
  else if (key == "dataset.agents_min") c.dataset.agents_min = to_int(key, value);
  else if (key == "dataset.agents_max") c.dataset.agents_max = to_int(key, value);
  else if (maneuver_key(key) >= 0) c.dataset.maneuver_mix.p[maneuver_key(key)] = to_double(key, value);
  else if (topology_key(key) >= 0) c.dataset.topology_mix[topology_key(key)] = to_double(key, value);
  else if (key == "horizons.t_h") c.dataset.horizons.t_h = to_int(key, value);
  else if (key == "horizons.t_f") c.dataset.horizons.t_f = to_int(key, value);
  else if (key == "horizons.dt") c.dataset.horizons.dt = to_double(key, value);
  else if (key == "predictor.hidden") c.predictor.hidden = to_int(key, value);
  else if (key == "predictor.dec_hidden") c.predictor.dec_hidden = to_int(key, value);
  else if (key == "predictor.lr") c.predictor.lr = to_double(key, value);
  else if (key == "predictor.ce_weight") c.predictor.ce_weight = to_double(key, value);
  else if (key == "predictor.batch") c.predictor.batch_scenarios = to_int(key, value);
  else if (key == "denoiser.hidden") c.denoiser.hidden = to_int(key, value);
  else if (key == "denoiser.lr") c.denoiser.lr = to_double(key, value);
  else if (key == "denoiser.batch") c.denoiser.batch_scenarios = to_int(key, value);
  else if (key == "denoiser.epochs") c.denoiser_epochs = to_int(key, value);
  else if (key == "schedule.steps") c.schedule_steps = to_int(key, value);
  else if (key == "schedule.beta_start") c.beta_start = to_double(key, value);
  else if (key == "schedule.beta_end") c.beta_end = to_double(key, value);
  else if (key == "run.total_epochs") c.run.total_epochs = to_int(key, value);
  else if (key == "run.initial_fraction") c.run.initial_fraction = to_double(key, value);
  else if (key == "run.epoch_size") c.run.epoch_size = to_int(key, value);
  else if (key == "run.alpha") c.run.alpha = to_double(key, value);
  else if (key == "run.w_min") c.run.w_min = to_double(key, value);
  else if (key == "run.delta_max") c.run.delta_max = to_int(key, value);
  else if (key == "run.tau_policy") {
    if (value == "percentile") c.run.tau_policy.kind = loop::TauPolicy::Kind::kPercentile;
    else if (value == "fixed") c.run.tau_policy.kind = loop::TauPolicy::Kind::kFixed;
    else throw ConfigError("config: run.tau_policy must be 'percentile' or 'fixed'");
  } else if (key == "run.tau_value") c.run.tau_policy.value = to_double(key, value);
  else if (key == "guidance.lambda_tail") c.run.guidance.lambda_tail = to_double(key, value);
  else if (key == "guidance.lambda_rel") c.run.guidance.lambda_rel = to_double(key, value);
  else if (key == "guidance.lambda_head") c.run.guidance.lambda_head = to_double(key, value);
  else if (key == "guidance.w_offroad") c.run.guidance.w_offroad = to_double(key, value);
  else if (key == "guidance.w_repeller") c.run.guidance.w_repeller = to_double(key, value);
  else if (key == "guidance.repeller_radius") c.run.guidance.repeller_radius = to_double(key, value);
  else if (key == "eval.top_k") {
    std::vector<double> ks;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) ks.push_back(to_double(key, trim(item)));
    if (ks.empty()) throw ConfigError("config: eval.top_k must list at least one k");
    c.eval_top_k = std::move(ks);
  } else if (key == "eval.var_alpha") c.eval_var_alpha = to_int(key, value);
  else if (key == "eval.fpr_threshold") c.eval_fpr_threshold = to_double(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
  c.sync();
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  AppConfig c = default_config();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    apply_override(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

std::string canonical_string(const AppConfig& c) {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(c.seed);
  kv["dataset.train_count"] = std::to_string(c.dataset.count);
  kv["dataset.val_count"] = std::to_string(c.val_count);
  kv["dataset.agents_min"] = std::to_string(c.dataset.agents_min);
  kv["dataset.agents_max"] = std::to_string(c.dataset.agents_max);
  for (int i = 0; i < world::kManeuverCount; ++i)
    kv[std::string("dataset.maneuver.") + world::maneuver_name(static_cast<world::Maneuver>(i))] =
        fmt(c.dataset.maneuver_mix.p[i]);
  for (int i = 0; i < world::kTopologyCount; ++i)
    kv[std::string("dataset.topology.") + world::topology_name(static_cast<world::Topology>(i))] =
        fmt(c.dataset.topology_mix[i]);
  kv["horizons.t_h"] = std::to_string(c.dataset.horizons.t_h);
  kv["horizons.t_f"] = std::to_string(c.dataset.horizons.t_f);
  kv["horizons.dt"] = fmt(c.dataset.horizons.dt);
  kv["predictor.hidden"] = std::to_string(c.predictor.hidden);
  kv["predictor.dec_hidden"] = std::to_string(c.predictor.dec_hidden);
  kv["predictor.lr"] = fmt(c.predictor.lr);
  kv["predictor.ce_weight"] = fmt(c.predictor.ce_weight);
  kv["predictor.batch"] = std::to_string(c.predictor.batch_scenarios);
  kv["denoiser.hidden"] = std::to_string(c.denoiser.hidden);
  kv["denoiser.lr"] = fmt(c.denoiser.lr);
  kv["denoiser.batch"] = std::to_string(c.denoiser.batch_scenarios);
  kv["denoiser.epochs"] = std::to_string(c.denoiser_epochs);
  kv["schedule.steps"] = std::to_string(c.schedule_steps);
  kv["schedule.beta_start"] = fmt(c.beta_start);
  kv["schedule.beta_end"] = fmt(c.beta_end);
  kv["run.total_epochs"] = std::to_string(c.run.total_epochs);
  kv["run.initial_fraction"] = fmt(c.run.initial_fraction);
  kv["run.epoch_size"] = std::to_string(c.run.epoch_size);
  kv["run.alpha"] = fmt(c.run.alpha);
  kv["run.w_min"] = fmt(c.run.w_min);
  kv["run.delta_max"] = std::to_string(c.run.delta_max);
  kv["run.tau_policy"] =
      c.run.tau_policy.kind == loop::TauPolicy::Kind::kPercentile ? "percentile" : "fixed";
  kv["run.tau_value"] = fmt(c.run.tau_policy.value);
  kv["guidance.lambda_tail"] = fmt(c.run.guidance.lambda_tail);
  kv["guidance.lambda_rel"] = fmt(c.run.guidance.lambda_rel);
  kv["guidance.lambda_head"] = fmt(c.run.guidance.lambda_head);
  kv["guidance.w_offroad"] = fmt(c.run.guidance.w_offroad);
  kv["guidance.w_repeller"] = fmt(c.run.guidance.w_repeller);
  kv["guidance.repeller_radius"] = fmt(c.run.guidance.repeller_radius);
  std::string tk;
  for (double k : c.eval_top_k) tk += (tk.empty() ? "" : ",") + fmt(k);
  kv["eval.top_k"] = tk;
  kv["eval.var_alpha"] = std::to_string(c.eval_var_alpha);
  kv["eval.fpr_threshold"] = fmt(c.eval_fpr_threshold);

  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

}  // namespace galtraj::cfg
