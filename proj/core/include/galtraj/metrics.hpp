#ifndef GALTRAJ_METRICS_HPP_
#define GALTRAJ_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "galtraj/scenario.hpp"

namespace galtraj::metrics {

// Min over modes of mean (ADE) / final-step (FDE) displacement over the
// truth's valid future steps. nullopt when no future step is valid.
std::optional<double> min_ade(const std::vector<std::vector<geom::Vec2>>& modes,
                              const world::AgentTrack& truth, const world::Horizons& h);
std::optional<double> min_fde(const std::vector<std::vector<geom::Vec2>>& modes,
                              const world::AgentTrack& truth, const world::Horizons& h);

struct ErrorKey {
  std::int64_t scenario_id = 0;
  int agent_id = 0;
  auto operator<=>(const ErrorKey&) const = default;
};

struct ErrorRow {
  double minade6 = 0.0;
  double minfde6 = 0.0;
};

// Per-agent error table for one (model, split) pair.
class ErrorTable {
 public:
  std::string model;
  std::string split;

  void insert(const ErrorKey& key, const ErrorRow& row);  // throws on duplicates
  const std::map<ErrorKey, ErrorRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

 private:
  std::map<ErrorKey, ErrorRow> rows_;
};

// Mean current-model minADE6 over the ceil(k% * n) keys ranked hardest by
// the reference table (ties broken by ascending key).
double top_k_percent(const ErrorTable& reference, const ErrorTable& current, double k_percent);

// Nearest-rank (ceiling) quantile of the minADE6 distribution; alpha in permille.
double value_at_risk(const ErrorTable& errors, int alpha_permille);

// Percentage (0..100) of agents with minADE6 strictly above the threshold.
double false_prediction_ratio(const ErrorTable& errors, double threshold);

void save_error_table(const ErrorTable& table, const std::string& path);
std::vector<ErrorTable> load_error_tables(const std::string& path);
ErrorTable load_error_table(const std::string& path);  // expects exactly one group

}  // namespace galtraj::metrics

#endif  // GALTRAJ_METRICS_HPP_
