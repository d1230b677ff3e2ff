#include "galtraj/weighted_dataset.hpp"

#include <algorithm>
#include <cmath>

#include "galtraj/errors.hpp"

namespace galtraj::loop {

std::vector<std::size_t> weighted_sample_with_replacement(const std::vector<double>& weights,
                                                          int n, Rng& rng) {
  if (weights.empty()) throw ConfigError("weighted sampling: no weights");
  std::vector<double> cum(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ConfigError("weighted sampling: negative weight");
    acc += weights[i];
    cum[i] = acc;
  }
  if (!(acc > 0.0)) throw ConfigError("weighted sampling: zero total weight");
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng) * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    out.push_back(std::min<std::size_t>(cum.size() - 1,
                                        static_cast<std::size_t>(it - cum.begin())));
  }
  return out;
}

WeightedDataset::WeightedDataset(std::vector<world::Scenario> originals, double alpha,
                                 double w_min)
    : alpha_(alpha), w_min_(w_min) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("weighted dataset: alpha outside (0,1)");
  if (!(w_min > 0.0 && w_min < 1.0)) throw ConfigError("weighted dataset: w_min outside (0,1)");
  entries_.reserve(originals.size());
  for (auto& s : originals) {
    Slot slot;
    next_id_ = std::max(next_id_, s.scenario_id + 1);
    slot.scenario = std::move(s);
    entries_.push_back(std::move(slot));
  }
  original_count_ = entries_.size();
}

void WeightedDataset::refresh_weight(Slot& s) {
  s.cached_weight = std::max(std::pow(alpha_, s.decay_count), w_min_);
}

void WeightedDataset::decay_all() {
  for (auto& s : entries_) {
    ++s.decay_count;
    refresh_weight(s);
  }
}

void WeightedDataset::reset_weight(std::size_t i) {
  entries_[i].decay_count = 0;
  entries_[i].cached_weight = 1.0;
}

std::int64_t WeightedDataset::append_generated(world::Scenario scenario,
                                               std::int64_t parent_id) {
  Slot slot;
  slot.provenance = Provenance::kGenerated;
  slot.parent_id = parent_id;
  scenario.scenario_id = next_id_++;
  slot.scenario = std::move(scenario);
  entries_.push_back(std::move(slot));
  return entries_.back().scenario.scenario_id;
}

std::optional<std::size_t> WeightedDataset::index_of(std::int64_t scenario_id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].scenario.scenario_id == scenario_id) return i;
  return std::nullopt;
}

void update_dataset(WeightedDataset& dataset,
                    std::vector<std::pair<world::Scenario, std::int64_t>> generated) {
  dataset.decay_all();
  for (auto& [scenario, parent] : generated)
    dataset.append_generated(std::move(scenario), parent);
}

}  // namespace galtraj::loop
