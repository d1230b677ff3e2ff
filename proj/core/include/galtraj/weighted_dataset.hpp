#ifndef GALTRAJ_WEIGHTED_DATASET_HPP_
#define GALTRAJ_WEIGHTED_DATASET_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "galtraj/rng.hpp"
#include "galtraj/scenario.hpp"

namespace galtraj::loop {

// n independent draws proportional to the weights (inverse CDF on the
// cumulative sum). Shared by every trainer so the per-epoch budget has one
// sampling semantics.
std::vector<std::size_t> weighted_sample_with_replacement(const std::vector<double>& weights,
                                                          int n, Rng& rng);

enum class Provenance { kOriginal, kGenerated };

struct DatasetEntry {
  world::Scenario scenario;
  Provenance provenance = Provenance::kOriginal;
  std::optional<std::int64_t> parent_id;
  int decay_count = 0;  // weight = max(alpha^decay_count, w_min)
};

// Training set with per-entry sampling weights. Weights are represented by
// decay counts so that E decay rounds give exactly max(alpha^E, w_min).
class WeightedDataset {
 public:
  WeightedDataset(std::vector<world::Scenario> originals, double alpha, double w_min);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const DatasetEntry& entry(std::size_t i) const { return entries_[i]; }
  double weight(std::size_t i) const { return entries_[i].cached_weight; }

  double alpha() const { return alpha_; }
  double w_min() const { return w_min_; }

  void decay_all();
  void reset_weight(std::size_t i);  // back to weight 1 (resampling baseline)
  // Appends with weight 1 and a fresh unique scenario_id; returns the id.
  std::int64_t append_generated(world::Scenario scenario, std::int64_t parent_id);

  std::optional<std::size_t> index_of(std::int64_t scenario_id) const;

  std::size_t original_count() const { return original_count_; }
  std::size_t generated_count() const { return entries_.size() - original_count_; }

 private:
  struct Slot : DatasetEntry {
    double cached_weight = 1.0;
  };
  void refresh_weight(Slot& s);

  std::vector<Slot> entries_;
  double alpha_;
  double w_min_;
  std::int64_t next_id_ = 0;
  std::size_t original_count_ = 0;
};

// Decays every existing weight and appends the generated scenarios with
// weight 1 and generated provenance.
void update_dataset(WeightedDataset& dataset,
                    std::vector<std::pair<world::Scenario, std::int64_t>> generated);

}  // namespace galtraj::loop

#endif  // GALTRAJ_WEIGHTED_DATASET_HPP_
