#include "galtraj/history.hpp"

#include <fstream>

#include <json.hpp>

#include "galtraj/errors.hpp"

namespace galtraj::loop {

namespace {

using nlohmann::json;

json epoch_to_json(const EpochRecord& e) {
  json j;
  j["epoch"] = e.epoch;
  j["loop_phase"] = e.loop_phase;
  j["sampled_count"] = e.sampled_count;
  j["tail_scenario_count"] = e.tail_scenario_count;
  j["tail_agent_count"] = e.tail_agent_count;
  j["visited_agent_count"] = e.visited_agent_count;
  j["tail_agent_fraction"] = e.tail_agent_fraction;
  j["tau"] = e.tau;
  j["generated_count"] = e.generated_count;
  j["generation_failures"] = e.generation_failures;
  j["dataset_size"] = e.dataset_size;
  j["weight_min"] = e.weight_min;
  j["weight_mean"] = e.weight_mean;
  j["weight_max"] = e.weight_max;
  if (e.val_minade6) j["val_minade6"] = *e.val_minade6;
  if (e.val_minfde6) j["val_minfde6"] = *e.val_minfde6;
  return j;
}

EpochRecord epoch_from_json(const json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<int>();
  e.loop_phase = j.at("loop_phase").get<bool>();
  e.sampled_count = j.at("sampled_count").get<int>();
  e.tail_scenario_count = j.at("tail_scenario_count").get<int>();
  e.tail_agent_count = j.at("tail_agent_count").get<int>();
  e.visited_agent_count = j.at("visited_agent_count").get<int>();
  e.tail_agent_fraction = j.at("tail_agent_fraction").get<double>();
  e.tau = j.at("tau").get<double>();
  e.generated_count = j.at("generated_count").get<int>();
  e.generation_failures = j.at("generation_failures").get<int>();
  e.dataset_size = j.at("dataset_size").get<std::int64_t>();
  e.weight_min = j.at("weight_min").get<double>();
  e.weight_mean = j.at("weight_mean").get<double>();
  e.weight_max = j.at("weight_max").get<double>();
  if (j.contains("val_minade6")) e.val_minade6 = j["val_minade6"].get<double>();
  if (j.contains("val_minfde6")) e.val_minfde6 = j["val_minfde6"].get<double>();
  return e;
}

json deterministic_json(const RunHistory& h) {
  json j;
  j["method"] = h.method;
  j["seed"] = h.seed;
  j["total_epochs"] = h.total_epochs;
  j["initial_epochs"] = h.initial_epochs;
  j["epoch_size"] = h.epoch_size;
  j["alpha"] = h.alpha;
  j["w_min"] = h.w_min;
  j["overhead_reference_fraction"] = h.overhead_reference_fraction;
  json epochs = json::array();
  for (const auto& e : h.epochs) epochs.push_back(epoch_to_json(e));
  j["epochs"] = std::move(epochs);
  return j;
}

}  // namespace

void save_history(const RunHistory& history, const std::string& path) {
  json j = deterministic_json(history);
  j["meta"] = {{"created_at", history.created_at}};
  json timings = json::array();
  for (const auto& t : history.timings) {
    timings.push_back({{"mine_ms", t.mine_ms},
                       {"generate_ms", t.generate_ms},
                       {"shift_ms", t.shift_ms},
                       {"update_ms", t.update_ms},
                       {"train_ms", t.train_ms},
                       {"eval_ms", t.eval_ms},
                       {"epoch_ms", t.epoch_ms}});
  }
  j["timings"] = std::move(timings);
  std::ofstream out(path);
  if (!out) throw DataError("save_history: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("save_history: write failed for " + path);
}

RunHistory load_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_history: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("load_history: " + path + ": " + e.what());
  }
  RunHistory h;
  h.method = j.at("method").get<std::string>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.total_epochs = j.at("total_epochs").get<int>();
  h.initial_epochs = j.at("initial_epochs").get<int>();
  h.epoch_size = j.at("epoch_size").get<int>();
  h.alpha = j.at("alpha").get<double>();
  h.w_min = j.at("w_min").get<double>();
  h.overhead_reference_fraction = j.at("overhead_reference_fraction").get<double>();
  h.created_at = j.at("meta").value("created_at", "");
  for (const auto& e : j.at("epochs")) h.epochs.push_back(epoch_from_json(e));
  for (const auto& t : j.at("timings")) {
    StageTimes st;
    st.mine_ms = t.at("mine_ms").get<double>();
    st.generate_ms = t.at("generate_ms").get<double>();
    st.shift_ms = t.at("shift_ms").get<double>();
    st.update_ms = t.at("update_ms").get<double>();
    st.train_ms = t.at("train_ms").get<double>();
    st.eval_ms = t.at("eval_ms").get<double>();
    st.epoch_ms = t.at("epoch_ms").get<double>();
    h.timings.push_back(st);
  }
  return h;
}

std::string history_deterministic_digest(const RunHistory& history) {
  return deterministic_json(history).dump();
}

}  // namespace galtraj::loop
