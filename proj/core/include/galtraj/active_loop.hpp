#ifndef GALTRAJ_ACTIVE_LOOP_HPP_
#define GALTRAJ_ACTIVE_LOOP_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "galtraj/guidance.hpp"
#include "galtraj/history.hpp"
#include "galtraj/metrics.hpp"
#include "galtraj/predictor.hpp"
#include "galtraj/weighted_dataset.hpp"

namespace galtraj::loop {

struct TailRecord {
  std::int64_t scenario_id = 0;
  std::vector<int> tail_agent_ids;  // non-empty, all with error > tau
  int epoch = 0;
  double max_error = 0.0;
};

struct TauPolicy {
  enum class Kind { kPercentile, kFixed };
  Kind kind = Kind::kPercentile;
  double value = 95.0;  // percentile in (0,100] or the fixed threshold
};

// Percentile policy uses linear interpolation between order statistics.
// Throws ConfigError on an empty error list.
double choose_tau(const std::vector<double>& errors, const TauPolicy& policy);

// A scenario yields a record iff the max over its agents' errors exceeds tau.
// Generated-provenance and undefined-error entries are ignored.
std::vector<TailRecord> mine_tail_samples(const pred::EpochErrors& errors, double tau,
                                          int epoch);

// Re-windows all tracks by delta_t steps: the past absorbs delta_t generated
// future steps and the trailing delta_t future steps become invalid padding.
world::Scenario time_window_shift(const world::Scenario& generated, int delta_t,
                                  int delta_max = -1);

enum class GenerationMode { kTailAware, kUnguidedNoise };

struct AugmentResult {
  std::vector<std::pair<world::Scenario, std::int64_t>> generated;  // scenario, parent id
  int failures = 0;
  int guidance_warnings = 0;
};

// One generated variant per tail record; failures are skipped, never fatal.
AugmentResult augment_tail(const std::vector<TailRecord>& records,
                           const WeightedDataset& dataset, const diff::Denoiser& denoiser,
                           const diff::GuidanceConfig& guidance, std::uint64_t seed,
                           GenerationMode mode = GenerationMode::kTailAware);

enum class Method { kVanilla, kResampling, kNaive, kGalTraj };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct RunConfig {
  int total_epochs = 9;
  double initial_fraction = 2.0 / 3.0;
  int epoch_size = 2000;
  TauPolicy tau_policy;
  double alpha = 0.9;
  double w_min = 0.2;
  int delta_max = -1;  // time-window shift bound; t_f/2 when negative
  diff::GuidanceConfig guidance;
  pred::PredictorConfig predictor;
  std::uint64_t seed = 0;

  int initial_epochs() const;
  void validate() const;
};

struct RunResult {
  pred::Predictor predictor;
  RunHistory history;
  metrics::ErrorTable reference_table;  // frozen at the end of the initial phase
};

// Full training run for one method. galtraj and naive require a pretrained
// denoiser; vanilla and resampling ignore it.
RunResult run_method(Method method, const RunConfig& config,
                     const std::vector<world::Scenario>& train,
                     const std::vector<world::Scenario>& val,
                     const diff::Denoiser* denoiser);

// Evaluation helper: per-agent minADE6/minFDE6 of a predictor over a split.
metrics::ErrorTable evaluate_predictor(const pred::Predictor& predictor,
                                       const std::vector<world::Scenario>& split,
                                       const std::string& model_tag,
                                       const std::string& split_tag);

}  // namespace galtraj::loop

#endif  // GALTRAJ_ACTIVE_LOOP_HPP_
