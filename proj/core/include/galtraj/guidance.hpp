#ifndef GALTRAJ_GUIDANCE_HPP_
#define GALTRAJ_GUIDANCE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "galtraj/denoiser.hpp"
#include "galtraj/features.hpp"
#include "galtraj/scenario.hpp"

namespace galtraj::diff {

enum class AgentCategory { kTail, kRelevant, kHead };

struct GuidanceConfig {
  double lambda_tail = 0.25;
  double lambda_rel = 0.6;
  double lambda_head = 1.0;
  double w_offroad = 0.05;
  double w_repeller = 0.05;
  double repeller_radius = 2.0;  // metres

  void validate() const;  // lambda_tail <= lambda_rel <= lambda_head, all in [0,1]
  double lambda_for(AgentCategory c) const;
};

// Tail iff error > tau (undefined errors can never be tail). A non-tail agent
// is relevant iff some tail agent's attention weight onto it strictly exceeds
// 1/|N_i| for that tail agent's neighbor set N_i.
std::vector<AgentCategory> categorize_agents(const std::vector<std::optional<double>>& errors,
                                             double tau, const nn::Mat& attention,
                                             const std::vector<std::vector<int>>& neighbor_sets);
std::vector<AgentCategory> categorize_from_tail_set(
    const std::vector<bool>& is_tail, const nn::Mat& attention,
    const std::vector<std::vector<int>>& neighbor_sets);

// Neighbor sets for a fully connected scene: everyone except self.
std::vector<std::vector<int>> all_other_neighbors(int n_agents);

// K* = round(lambda * K); the reverse chain's starting step for a category.
int real_guidance_start_step(double lambda, int k_total);

// Quadratic hinge penalty for leaving the drivable area. Value is
// -w * sum_t max(0, d_out(p_t))^2; gradient comes from the nearest-boundary
// projection of each outside point.
struct TrajectoryCost {
  double value = 0.0;
  std::vector<geom::Vec2> grad;  // dC/dp_t, world frame
};
TrajectoryCost cost_no_offroad(const std::vector<geom::Vec2>& traj, const world::MapGraph& map,
                               double w_offroad);

// Pairwise quadratic hinge keeping agents at least `radius` apart.
struct SceneCost {
  double value = 0.0;
  std::vector<std::vector<geom::Vec2>> grad;  // per agent, per step
};
SceneCost cost_repeller(const std::vector<std::vector<geom::Vec2>>& trajs, double w_repeller,
                        double radius);

// Scene cost as a function of the latent mean matrix (agent rows).
using LatentCostFn = std::function<std::pair<double, nn::Mat>(const nn::Mat& mu)>;

LatentCostFn make_scene_cost(const world::MapGraph& map,
                             const std::vector<feat::AgentFrame>& frames,
                             const GuidanceConfig& guidance);

// mu + sigma2 * dC/dmu on rows where head_mask is true; other rows unchanged.
// A non-finite gradient falls back to the unperturbed mean and sets *warned.
nn::Mat apply_gradient_guidance(const nn::Mat& mu, double sigma2, const LatentCostFn& cost,
                                const std::vector<bool>& head_mask, bool* warned = nullptr);

struct GeneratedFutures {
  // Per agent, world-frame points for t = 1..t_f.
  std::vector<std::vector<geom::Vec2>> futures;
  int guidance_warnings = 0;
};

// Tail-aware generation: each agent's reverse chain starts at its category's
// step K* = round(lambda * K) from the forward-noised ground truth; agents
// share attention context at every step; head agents receive gradient
// guidance. lambda = 0 reproduces the ground truth bit-exactly.
GeneratedFutures real_guided_sample(const Denoiser& denoiser, const world::Scenario& scenario,
                                    const std::vector<AgentCategory>& categories,
                                    const GuidanceConfig& guidance, std::uint64_t seed,
                                    bool gradient_guidance = true);

// Naive baseline: full reverse chain from pure noise, no categories, no
// real or gradient guidance.
GeneratedFutures unguided_sample(const Denoiser& denoiser, const world::Scenario& scenario,
                                 std::uint64_t seed);

// Attention rows of an unguided denoiser evaluation at the tail start step,
// with every agent initialized from the forward-noised ground truth.
nn::Mat preliminary_attention(const Denoiser& denoiser, const world::Scenario& scenario,
                              const GuidanceConfig& guidance, std::uint64_t seed);

}  // namespace galtraj::diff

#endif  // GALTRAJ_GUIDANCE_HPP_
