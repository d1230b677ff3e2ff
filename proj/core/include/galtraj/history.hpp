#ifndef GALTRAJ_HISTORY_HPP_
#define GALTRAJ_HISTORY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace galtraj::loop {

struct StageTimes {
  double mine_ms = 0.0;
  double generate_ms = 0.0;
  double shift_ms = 0.0;
  double update_ms = 0.0;
  double train_ms = 0.0;
  double eval_ms = 0.0;
  double epoch_ms = 0.0;  // measured independently of the stage sum

  double stage_sum() const {
    return mine_ms + generate_ms + shift_ms + update_ms + train_ms + eval_ms;
  }
  double generation_fraction() const { return epoch_ms > 0.0 ? generate_ms / epoch_ms : 0.0; }
};

struct EpochRecord {
  int epoch = 0;
  bool loop_phase = false;
  int sampled_count = 0;  // scenarios drawn this epoch (the budget M)
  int tail_scenario_count = 0;
  int tail_agent_count = 0;
  int visited_agent_count = 0;
  double tail_agent_fraction = 0.0;
  double tau = 0.0;
  int generated_count = 0;  // scenarios appended this epoch
  int generation_failures = 0;
  std::int64_t dataset_size = 0;
  double weight_min = 1.0;
  double weight_mean = 1.0;
  double weight_max = 1.0;
  std::optional<double> val_minade6;
  std::optional<double> val_minfde6;
};

// Per-run report. The `epochs` section is deterministic for fixed seeds;
// wall-clock measurements live in `timings` and the timestamp in `created_at`
// so reproducibility checks can ignore them.
struct RunHistory {
  std::string method;
  std::uint64_t seed = 0;
  int total_epochs = 0;
  int initial_epochs = 0;
  int epoch_size = 0;
  double alpha = 0.0;
  double w_min = 0.0;
  // Upstream reference point for the per-epoch generation overhead fraction;
  // recorded alongside measurements, never asserted.
  double overhead_reference_fraction = 0.36;
  std::string created_at;

  std::vector<EpochRecord> epochs;
  std::vector<StageTimes> timings;  // parallel to epochs
};

void save_history(const RunHistory& history, const std::string& path);
RunHistory load_history(const std::string& path);

// Serialization of the deterministic sections only (no timings, no timestamp).
std::string history_deterministic_digest(const RunHistory& history);

}  // namespace galtraj::loop

#endif  // GALTRAJ_HISTORY_HPP_
