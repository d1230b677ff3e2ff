#include "galtraj/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "galtraj/errors.hpp"

namespace galtraj::world {

namespace {

using nlohmann::json;

json points_to_json(const std::vector<geom::Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

std::vector<geom::Vec2> points_from_json(const json& arr) {
  std::vector<geom::Vec2> out;
  out.reserve(arr.size());
  for (const auto& p : arr) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

json scenario_to_json(const Scenario& s) {
  json rec;
  rec["scenario_id"] = s.scenario_id;
  rec["horizons"] = {{"t_h", s.horizons.t_h}, {"t_f", s.horizons.t_f}, {"dt", s.horizons.dt}};
  json map;
  map["lane_width"] = s.map.lane_width;
  json lanes = json::array();
  for (const auto& lane : s.map.lanes) lanes.push_back(points_to_json(lane));
  map["lanes"] = std::move(lanes);
  map["drivable_area"] = points_to_json(s.map.drivable_area);
  json conn = json::array();
  for (const auto& [a, b] : s.map.connectivity) conn.push_back({a, b});
  map["connectivity"] = std::move(conn);
  rec["map"] = std::move(map);
  json agents = json::array();
  for (const auto& t : s.agents) {
    json a;
    a["agent_id"] = t.agent_id;
    a["maneuver_label"] = maneuver_name(t.maneuver_label);
    a["positions"] = points_to_json(t.positions);
    json mask = json::array();
    for (bool b : t.valid_mask) mask.push_back(b);
    a["valid_mask"] = std::move(mask);
    agents.push_back(std::move(a));
  }
  rec["agents"] = std::move(agents);
  return rec;
}

Scenario scenario_from_json(const json& rec) {
  Scenario s;
  s.scenario_id = rec.at("scenario_id").get<std::int64_t>();
  const json& h = rec.at("horizons");
  s.horizons.t_h = h.at("t_h").get<int>();
  s.horizons.t_f = h.at("t_f").get<int>();
  s.horizons.dt = h.at("dt").get<double>();
  const json& map = rec.at("map");
  s.map.lane_width = map.at("lane_width").get<double>();
  for (const auto& lane : map.at("lanes")) s.map.lanes.push_back(points_from_json(lane));
  s.map.drivable_area = points_from_json(map.at("drivable_area"));
  for (const auto& c : map.at("connectivity"))
    s.map.connectivity.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
  for (const auto& a : rec.at("agents")) {
    AgentTrack t;
    t.agent_id = a.at("agent_id").get<int>();
    const auto label = maneuver_from_name(a.at("maneuver_label").get<std::string>());
    if (!label) throw DataError("unknown maneuver_label");
    t.maneuver_label = *label;
    t.positions = points_from_json(a.at("positions"));
    for (const auto& b : a.at("valid_mask")) t.valid_mask.push_back(b.get<bool>());
    s.agents.push_back(std::move(t));
  }
  return s;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void save_dataset(const std::vector<Scenario>& scenarios, const std::string& path,
                  const DatasetHeader& header) {
  std::ofstream out(path);
  if (!out) throw DataError("save_dataset: cannot open " + path);
  json head;
  head["header"] = {{"config_hash", header.config_hash},
                    {"seed", header.seed},
                    {"count", static_cast<std::int64_t>(scenarios.size())}};
  out << head.dump() << "\n";
  for (const auto& s : scenarios) out << scenario_to_json(s).dump() << "\n";
  if (!out) throw DataError("save_dataset: write failed for " + path);
}

std::vector<Scenario> load_dataset(const std::string& path, DatasetHeader* header) {
  std::ifstream in(path);
  if (!in) throw DataError("load_dataset: cannot open " + path);
  std::vector<Scenario> out;
  std::string line;
  int line_no = 0;
  bool have_horizons = false;
  Horizons horizons;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("load_dataset: " + path + ": parse error at line " +
                      std::to_string(line_no) + ": " + e.what());
    }
    if (rec.contains("header")) {
      if (header) {
        const json& h = rec["header"];
        header->config_hash = h.value("config_hash", "");
        header->seed = h.value("seed", std::uint64_t{0});
        header->count = h.value("count", std::int64_t{0});
      }
      continue;
    }
    Scenario s;
    try {
      s = scenario_from_json(rec);
    } catch (const json::exception& e) {
      throw DataError("load_dataset: " + path + ": bad record at line " +
                      std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("load_dataset: " + path + ": bad record at line " +
                      std::to_string(line_no) + ": " + e.what());
    }
    if (have_horizons && !(s.horizons == horizons))
      throw DataError("load_dataset: " + path + ": horizon mismatch at line " +
                      std::to_string(line_no));
    horizons = s.horizons;
    have_horizons = true;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace galtraj::world
