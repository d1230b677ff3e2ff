#ifndef GALTRAJ_PREDICTOR_HPP_
#define GALTRAJ_PREDICTOR_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "galtraj/nn.hpp"
#include "galtraj/scenario.hpp"
#include "galtraj/weighted_dataset.hpp"

namespace galtraj::pred {

struct PredictorConfig {
  world::Horizons horizons;
  int hidden = 64;
  int dec_hidden = 96;
  int n_modes = 6;
  double ce_weight = 0.5;    // mode-classification loss weight
  double lr = 1e-3;
  int batch_scenarios = 8;
  int max_epoch_size = 200000;
};

struct AgentPrediction {
  std::vector<std::vector<geom::Vec2>> modes;  // n_modes x t_f world points
  std::vector<double> mode_probs;              // sums to 1
};

struct PredictionSet {
  std::vector<AgentPrediction> agents;  // parallel to scenario.agents
};

struct AgentErrorRecord {
  std::int64_t scenario_id = 0;
  int agent_id = 0;
  std::optional<double> min_ade;  // nullopt when no future step was valid
  bool generated = false;
};

struct EpochErrors {
  std::vector<AgentErrorRecord> records;  // one per visited agent, last visit wins
};

// Temporal encoder + nearest-lane conditioning + one agent-agent attention
// layer + 6-head decoder, trained with winner-takes-all regression and a
// cross-entropy loss on the winning mode index.
class Predictor {
 public:
  Predictor(PredictorConfig config, std::uint64_t init_seed);

  const PredictorConfig& config() const { return config_; }
  int epoch() const { return epoch_; }
  std::uint64_t init_seed() const { return init_seed_; }

  // Pure function of (params, scenario). Throws DataError on horizon mismatch.
  PredictionSet predict(const world::Scenario& scenario) const;

  // Draws exactly epoch_size scenarios by weighted sampling with replacement
  // and performs one optimizer pass. Returns minADE6 for every visited agent;
  // records from generated scenarios are flagged.
  EpochErrors train_epoch(const loop::WeightedDataset& dataset, int epoch_size,
                          std::uint64_t seed);

  void save(const std::string& path) const;
  static Predictor load(const std::string& path);

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // Scene loss builder, exposed for gradient diagnostics in tests. Optionally
  // reports the winning mode and the visit's minADE6 (metres) per agent.
  nn::Tape::Var build_wta_loss(nn::Tape& tape, const world::Scenario& scenario,
                               std::vector<int>* winners = nullptr,
                               std::vector<std::optional<double>>* min_ades = nullptr) const;

 private:
  struct SceneOutput {
    nn::Tape::Var traj;    // N x (n_modes * 2 * t_f), latent units
    nn::Tape::Var logits;  // N x n_modes
  };
  SceneOutput forward(nn::Tape& tape, const world::Scenario& scenario) const;

  PredictorConfig config_;
  std::uint64_t init_seed_ = 0;
  int epoch_ = 0;
  nn::ParamStore store_;
  nn::Adam adam_;
  nn::Linear enc_, att_q_, att_k_, att_v_, att_o_, post_, dec_, traj_out_, logit_out_;

  friend class PredictorIo;
};

// minADE6 of one agent's prediction against the ground-truth future.
std::optional<double> per_agent_error(const AgentPrediction& pred,
                                      const world::AgentTrack& truth,
                                      const world::Horizons& horizons);

}  // namespace galtraj::pred

#endif  // GALTRAJ_PREDICTOR_HPP_
