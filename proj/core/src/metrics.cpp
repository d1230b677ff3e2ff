#include "galtraj/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "galtraj/errors.hpp"

namespace galtraj::metrics {

namespace {

std::optional<double> min_displacement(const std::vector<std::vector<geom::Vec2>>& modes,
                                       const world::AgentTrack& truth, const world::Horizons& h,
                                       bool final_only) {
  bool any = false;
  double best = 0.0;
  for (const auto& mode : modes) {
    double sum = 0.0;
    int n_valid = 0;
    double last = 0.0;
    for (int t = 1; t <= h.t_f; ++t) {
      const int idx = world::AgentTrack::index_of(h, t);
      if (!truth.valid_mask[idx]) continue;
      const double dx = mode[t - 1].x() - truth.positions[idx].x();
      const double dy = mode[t - 1].y() - truth.positions[idx].y();
      const double d = std::sqrt(dx * dx + dy * dy);
      sum += d;
      last = d;
      ++n_valid;
    }
    if (n_valid == 0) return std::nullopt;
    const double score = final_only ? last : sum / n_valid;
    if (!any || score < best) {
      best = score;
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return best;
}

}  // namespace

std::optional<double> min_ade(const std::vector<std::vector<geom::Vec2>>& modes,
                              const world::AgentTrack& truth, const world::Horizons& h) {
  return min_displacement(modes, truth, h, false);
}

std::optional<double> min_fde(const std::vector<std::vector<geom::Vec2>>& modes,
                              const world::AgentTrack& truth, const world::Horizons& h) {
  return min_displacement(modes, truth, h, true);
}

void ErrorTable::insert(const ErrorKey& key, const ErrorRow& row) {
  if (!std::isfinite(row.minade6) || !std::isfinite(row.minfde6))
    throw DataError("error table: non-finite value");
  if (!rows_.emplace(key, row).second)
    throw DataError("error table: duplicate key (" + std::to_string(key.scenario_id) + ", " +
                    std::to_string(key.agent_id) + ")");
}

double top_k_percent(const ErrorTable& reference, const ErrorTable& current, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0))
    throw ConfigError("top_k_percent: k outside (0, 100]");
  if (reference.empty()) throw DataError("top_k_percent: empty reference table");
  std::string missing;
  int n_missing = 0;
  for (const auto& [key, row] : reference.rows()) {
    if (current.rows().count(key)) continue;
    ++n_missing;
    if (n_missing <= 8)
      missing += " (" + std::to_string(key.scenario_id) + "," + std::to_string(key.agent_id) + ")";
  }
  if (current.size() != reference.size() || n_missing > 0)
    throw DataError("top_k_percent: key sets differ; missing" + missing);

  std::vector<const std::pair<const ErrorKey, ErrorRow>*> items;
  items.reserve(reference.size());
  for (const auto& kv : reference.rows()) items.push_back(&kv);
  std::stable_sort(items.begin(), items.end(), [](const auto* a, const auto* b) {
    if (a->second.minade6 != b->second.minade6) return a->second.minade6 > b->second.minade6;
    return a->first < b->first;
  });
  const std::size_t n = items.size();
  const std::size_t m =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k_percent / 100.0 * n)));
  double sum = 0.0;
  for (std::size_t i = 0; i < m && i < n; ++i)
    sum += current.rows().at(items[i]->first).minade6;
  return sum / static_cast<double>(std::min(m, n));
}

double value_at_risk(const ErrorTable& errors, int alpha_permille) {
  if (errors.empty()) throw DataError("value_at_risk: empty table");
  if (alpha_permille <= 0 || alpha_permille >= 1000)
    throw ConfigError("value_at_risk: alpha outside (0, 1000)");
  std::vector<double> vals;
  vals.reserve(errors.size());
  for (const auto& [key, row] : errors.rows()) vals.push_back(row.minade6);
  std::sort(vals.begin(), vals.end());
  const double q = static_cast<double>(alpha_permille) / 1000.0;
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(vals.size())));
  rank = std::clamp<std::size_t>(rank, 1, vals.size());
  return vals[rank - 1];
}

double false_prediction_ratio(const ErrorTable& errors, double threshold) {
  if (errors.empty()) throw DataError("false_prediction_ratio: empty table");
  std::size_t n_false = 0;
  for (const auto& [key, row] : errors.rows())
    if (row.minade6 > threshold) ++n_false;
  return 100.0 * static_cast<double>(n_false) / static_cast<double>(errors.size());
}

void save_error_table(const ErrorTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_error_table: cannot open " + path);
  out << "scenario_id,agent_id,minade6,minfde6,model,split\n";
  char buf[64];
  for (const auto& [key, row] : table.rows()) {
    out << key.scenario_id << "," << key.agent_id << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", row.minade6);
    out << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", row.minfde6);
    out << buf << "," << table.model << "," << table.split << "\n";
  }
  if (!out) throw DataError("save_error_table: write failed for " + path);
}

std::vector<ErrorTable> load_error_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_error_tables: cannot open " + path);
  std::vector<ErrorTable> tables;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "scenario_id,agent_id,minade6,minfde6,model,split")
        throw DataError("load_error_tables: " + path + ": unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw DataError("load_error_tables: " + path + ": bad row at line " +
                      std::to_string(line_no));
    ErrorKey key;
    ErrorRow row;
    try {
      key.scenario_id = std::stoll(fields[0]);
      key.agent_id = std::stoi(fields[1]);
      row.minade6 = std::stod(fields[2]);
      row.minfde6 = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw DataError("load_error_tables: " + path + ": bad number at line " +
                      std::to_string(line_no));
    }
    ErrorTable* table = nullptr;
    for (auto& t : tables)
      if (t.model == fields[4] && t.split == fields[5]) table = &t;
    if (!table) {
      tables.emplace_back();
      table = &tables.back();
      table->model = fields[4];
      table->split = fields[5];
    }
    table->insert(key, row);
  }
  return tables;
}

ErrorTable load_error_table(const std::string& path) {
  auto tables = load_error_tables(path);
  if (tables.size() != 1)
    throw DataError("load_error_table: " + path + ": expected one (model, split) group, found " +
                    std::to_string(tables.size()));
  return std::move(tables.front());
}

}  // namespace galtraj::metrics
