#ifndef GALTRAJ_DENOISER_HPP_
#define GALTRAJ_DENOISER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "galtraj/nn.hpp"
#include "galtraj/scenario.hpp"
#include "galtraj/schedule.hpp"

namespace galtraj::diff {

struct DenoiserConfig {
  world::Horizons horizons;
  int hidden = 64;
  int step_embed = 8;  // sin/cos pairs
  double lr = 1e-3;
  int batch_scenarios = 8;
  double holdout_fraction = 0.1;
};

// Reverse-transition evaluation for one scene at step k. Latents are agent-
// frame futures scaled by feat::kLatentScale, one row per agent.
struct DenoiseStep {
  nn::Mat mu;          // posterior mean, N x (2*t_f)
  double sigma2 = 0.0; // fixed posterior variance of the schedule
  nn::Mat attention;   // N x N, rows sum to 1
};

// Conditional noise predictor: noised future + past/map conditioning +
// sinusoidal step embedding, mixed through one agent-agent attention layer.
class Denoiser {
 public:
  Denoiser(DenoiserConfig config, const DiffusionSchedule& schedule, std::uint64_t init_seed);

  const DenoiserConfig& config() const { return config_; }
  const DiffusionSchedule& schedule() const { return schedule_; }
  int epoch() const { return epoch_; }
  std::uint64_t init_seed() const { return init_seed_; }

  // epsilon-hat for a scene; attention_out (optional) receives the exposed
  // agent-agent attention rows.
  nn::Mat predict_noise(const nn::Mat& y_k, int k, const world::Scenario& scenario,
                        nn::Mat* attention_out = nullptr) const;

  // Posterior mean/variance of p(y_{k-1} | y_k, x); throws NumericError
  // naming k on non-finite activations. Requires 1 <= k <= K.
  DenoiseStep denoise_step(const nn::Mat& y_k, int k, const world::Scenario& scenario) const;

  // Standard denoising objective (predict the injected noise, MSE) over
  // uniformly sampled k. Returns the held-out loss after each epoch.
  std::vector<double> train(const std::vector<world::Scenario>& scenarios, int epochs,
                            std::uint64_t seed);

  // Mean noise-prediction MSE at a fixed step k over the given scenes.
  double noise_loss_at(const std::vector<world::Scenario>& scenarios, int k,
                       std::uint64_t seed) const;

  void save(const std::string& path) const;
  static Denoiser load(const std::string& path);

  nn::ParamStore& params() { return store_; }

 private:
  nn::Tape::Var forward(nn::Tape& tape, nn::Tape::Var y_k, int k,
                        const world::Scenario& scenario, nn::Tape::Var* attention) const;
  double noise_loss_single(const world::Scenario& s, int k, Rng& rng) const;

  DenoiserConfig config_;
  DiffusionSchedule schedule_;
  std::uint64_t init_seed_ = 0;
  int epoch_ = 0;
  nn::ParamStore store_;
  nn::Adam adam_;
  nn::Linear enc_, att_q_, att_k_, att_v_, att_o_, post_, out_;
};

}  // namespace galtraj::diff

#endif  // GALTRAJ_DENOISER_HPP_
