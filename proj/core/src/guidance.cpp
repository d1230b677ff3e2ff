#include "galtraj/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "galtraj/errors.hpp"

namespace galtraj::diff {

namespace {

using geom::Vec2;
using nn::Mat;

// Ground-truth latents; throws when any future step is missing.
Mat ground_truth_latents(const world::Scenario& scenario,
                         const std::vector<feat::AgentFrame>& frames) {
  const int n = static_cast<int>(scenario.agents.size());
  const int t_f = scenario.horizons.t_f;
  Mat z0(n, 2 * t_f);
  for (int i = 0; i < n; ++i) {
    for (int t = 1; t <= t_f; ++t)
      if (!scenario.agents[i].valid_mask[world::AgentTrack::index_of(scenario.horizons, t)])
        throw DataError("guided sample: agent " + std::to_string(i) +
                        " is missing ground-truth future at step " + std::to_string(t));
    z0.row(i) = feat::future_to_latent(scenario.agents[i], scenario.horizons, frames[i]);
  }
  return z0;
}

std::vector<feat::AgentFrame> make_frames(const world::Scenario& scenario) {
  std::vector<feat::AgentFrame> frames;
  frames.reserve(scenario.agents.size());
  for (const auto& a : scenario.agents) frames.push_back(feat::make_agent_frame(a, scenario.horizons));
  return frames;
}

std::vector<Vec2> latent_row_to_world(const Eigen::RowVectorXd& z, const feat::AgentFrame& f) {
  return feat::latent_to_future(z, f);
}

}  // namespace

void GuidanceConfig::validate() const {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(lambda_tail) || !in01(lambda_rel) || !in01(lambda_head))
    throw ConfigError("guidance: lambda values must lie in [0,1]");
  if (!(lambda_tail <= lambda_rel && lambda_rel <= lambda_head))
    throw ConfigError("guidance: lambda ordering must be tail <= relevant <= head");
  if (w_offroad < 0.0 || w_repeller < 0.0) throw ConfigError("guidance: negative cost weight");
  if (repeller_radius <= 0.0) throw ConfigError("guidance: repeller radius must be positive");
}

double GuidanceConfig::lambda_for(AgentCategory c) const {
  switch (c) {
    case AgentCategory::kTail: return lambda_tail;
    case AgentCategory::kRelevant: return lambda_rel;
    case AgentCategory::kHead: return lambda_head;
  }
  return lambda_head;
}

int real_guidance_start_step(double lambda, int k_total) {
  return static_cast<int>(std::lround(lambda * k_total));
}

std::vector<std::vector<int>> all_other_neighbors(int n_agents) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i)
    for (int j = 0; j < n_agents; ++j)
      if (j != i) out[static_cast<std::size_t>(i)].push_back(j);
  return out;
}

std::vector<AgentCategory> categorize_from_tail_set(
    const std::vector<bool>& is_tail, const Mat& attention,
    const std::vector<std::vector<int>>& neighbor_sets) {
  const int n = static_cast<int>(is_tail.size());
  std::vector<AgentCategory> out(static_cast<std::size_t>(n), AgentCategory::kHead);
  for (int i = 0; i < n; ++i)
    if (is_tail[static_cast<std::size_t>(i)]) out[static_cast<std::size_t>(i)] = AgentCategory::kTail;
  for (int i = 0; i < n; ++i) {
    if (!is_tail[static_cast<std::size_t>(i)]) continue;
    const auto& neighbors = neighbor_sets[static_cast<std::size_t>(i)];
    if (neighbors.empty()) continue;
    const double threshold = 1.0 / static_cast<double>(neighbors.size());
    for (int j : neighbors) {
      if (is_tail[static_cast<std::size_t>(j)]) continue;
      if (attention(i, j) > threshold) out[static_cast<std::size_t>(j)] = AgentCategory::kRelevant;
    }
  }
  return out;
}

std::vector<AgentCategory> categorize_agents(const std::vector<std::optional<double>>& errors,
                                             double tau, const Mat& attention,
                                             const std::vector<std::vector<int>>& neighbor_sets) {
  std::vector<bool> is_tail(errors.size(), false);
  for (std::size_t i = 0; i < errors.size(); ++i)
    is_tail[i] = errors[i].has_value() && *errors[i] > tau;
  return categorize_from_tail_set(is_tail, attention, neighbor_sets);
}

TrajectoryCost cost_no_offroad(const std::vector<Vec2>& traj, const world::MapGraph& map,
                               double w_offroad) {
  if (map.drivable_area.size() < 3 || !geom::polygon_is_simple(map.drivable_area))
    throw ConfigError("cost_no_offroad: degenerate drivable polygon");
  TrajectoryCost out;
  out.grad.assign(traj.size(), Vec2::Zero());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const geom::OutsideHit hit = geom::distance_outside(map.drivable_area, traj[t]);
    if (hit.d_out <= 0.0) continue;
    out.value -= w_offroad * hit.d_out * hit.d_out;
    // d * grad(d) = p - q for the nearest boundary point q.
    out.grad[t] = -2.0 * w_offroad * (traj[t] - hit.nearest);
  }
  return out;
}

SceneCost cost_repeller(const std::vector<std::vector<Vec2>>& trajs, double w_repeller,
                        double radius) {
  SceneCost out;
  const std::size_t n = trajs.size();
  out.grad.resize(n);
  std::size_t steps = 0;
  for (const auto& t : trajs) steps = std::max(steps, t.size());
  for (std::size_t i = 0; i < n; ++i) out.grad[i].assign(trajs[i].size(), Vec2::Zero());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (t >= trajs[i].size()) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (t >= trajs[j].size()) continue;
        const Vec2 d = trajs[i][t] - trajs[j][t];
        const double dist = d.norm();
        if (dist >= radius) continue;
        const double gap = radius - dist;
        out.value -= w_repeller * gap * gap;
        if (dist > 1e-12) {
          const Vec2 g = 2.0 * w_repeller * gap / dist * d;
          out.grad[i][t] += g;
          out.grad[j][t] -= g;
        }
      }
    }
  }
  return out;
}

LatentCostFn make_scene_cost(const world::MapGraph& map,
                             const std::vector<feat::AgentFrame>& frames,
                             const GuidanceConfig& guidance) {
  return [&map, frames, guidance](const Mat& mu) -> std::pair<double, Mat> {
    const int n = static_cast<int>(mu.rows());
    std::vector<std::vector<Vec2>> world_trajs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      world_trajs[static_cast<std::size_t>(i)] = latent_row_to_world(mu.row(i), frames[i]);

    double value = 0.0;
    std::vector<std::vector<Vec2>> world_grad(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      TrajectoryCost off = cost_no_offroad(world_trajs[static_cast<std::size_t>(i)], map,
                                           guidance.w_offroad);
      value += off.value;
      world_grad[static_cast<std::size_t>(i)] = std::move(off.grad);
    }
    const SceneCost rep = cost_repeller(world_trajs, guidance.w_repeller,
                                        guidance.repeller_radius);
    value += rep.value;
    for (int i = 0; i < n; ++i)
      for (std::size_t t = 0; t < world_grad[static_cast<std::size_t>(i)].size(); ++t)
        world_grad[static_cast<std::size_t>(i)][t] += rep.grad[static_cast<std::size_t>(i)][t];

    // Chain rule: world = frame.to_world(scale * z)  =>  dC/dz = scale * R^T dC/dw.
    Mat grad = Mat::Zero(mu.rows(), mu.cols());
    for (int i = 0; i < n; ++i) {
      const feat::AgentFrame& f = frames[static_cast<std::size_t>(i)];
      for (std::size_t t = 0; t < world_grad[static_cast<std::size_t>(i)].size(); ++t) {
        const Vec2& gw = world_grad[static_cast<std::size_t>(i)][t];
        const double gx = f.cos_h * gw.x() + f.sin_h * gw.y();
        const double gy = -f.sin_h * gw.x() + f.cos_h * gw.y();
        grad(i, static_cast<Eigen::Index>(2 * t)) = feat::kLatentScale * gx;
        grad(i, static_cast<Eigen::Index>(2 * t + 1)) = feat::kLatentScale * gy;
      }
    }
    return {value, grad};
  };
}

Mat apply_gradient_guidance(const Mat& mu, double sigma2, const LatentCostFn& cost,
                            const std::vector<bool>& head_mask, bool* warned) {
  const auto [value, grad] = cost(mu);
  (void)value;
  if (!grad.allFinite()) {
    if (warned) *warned = true;
    return mu;
  }
  Mat out = mu;
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    if (!head_mask[static_cast<std::size_t>(i)]) continue;
    out.row(i) += sigma2 * grad.row(i);
  }
  return out;
}

GeneratedFutures real_guided_sample(const Denoiser& denoiser, const world::Scenario& scenario,
                                    const std::vector<AgentCategory>& categories,
                                    const GuidanceConfig& guidance, std::uint64_t seed,
                                    bool gradient_guidance) {
  guidance.validate();
  const int n = static_cast<int>(scenario.agents.size());
  if (static_cast<int>(categories.size()) != n)
    throw ConfigError("real_guided_sample: categories must cover every agent");
  const DiffusionSchedule& schedule = denoiser.schedule();
  const std::vector<feat::AgentFrame> frames = make_frames(scenario);
  const Mat z0 = ground_truth_latents(scenario, frames);
  const int t_f = scenario.horizons.t_f;

  std::vector<int> k_start(static_cast<std::size_t>(n));
  int k_max = 0;
  for (int i = 0; i < n; ++i) {
    k_start[static_cast<std::size_t>(i)] =
        real_guidance_start_step(guidance.lambda_for(categories[static_cast<std::size_t>(i)]), schedule.steps());
    k_max = std::max(k_max, k_start[static_cast<std::size_t>(i)]);
  }

  Rng rng = make_rng(seed, 0x6E5);
  Mat z = z0;
  for (int i = 0; i < n; ++i) {
    const int ks = k_start[static_cast<std::size_t>(i)];
    if (ks > 0) z.row(i) = forward_noise(z0.row(i), ks, schedule, rng);
  }

  GeneratedFutures out;
  const LatentCostFn cost = make_scene_cost(scenario.map, frames, guidance);
  std::vector<bool> head_mask(static_cast<std::size_t>(n), false);

  for (int k = k_max; k >= 1; --k) {
    DenoiseStep step = denoiser.denoise_step(z, k, scenario);
    Mat mu = step.mu;
    if (gradient_guidance) {
      for (int i = 0; i < n; ++i)
        head_mask[static_cast<std::size_t>(i)] =
            categories[static_cast<std::size_t>(i)] == AgentCategory::kHead &&
            k_start[static_cast<std::size_t>(i)] >= k;
      bool warned = false;
      mu = apply_gradient_guidance(mu, step.sigma2, cost, head_mask, &warned);
      if (warned) ++out.guidance_warnings;
    }
    const double sigma = std::sqrt(step.sigma2);
    for (int i = 0; i < n; ++i) {
      if (k_start[static_cast<std::size_t>(i)] < k) continue;  // not yet active
      for (int c = 0; c < 2 * t_f; ++c) z(i, c) = mu(i, c) + sigma * normal01(rng);
    }
  }

  out.futures.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (k_start[static_cast<std::size_t>(i)] == 0) {
      // Zero reverse steps: the ground truth itself, copied bit-exactly.
      std::vector<Vec2> future;
      future.reserve(static_cast<std::size_t>(t_f));
      for (int t = 1; t <= t_f; ++t)
        future.push_back(
            scenario.agents[static_cast<std::size_t>(i)]
                .positions[static_cast<std::size_t>(world::AgentTrack::index_of(scenario.horizons, t))]);
      out.futures[static_cast<std::size_t>(i)] = std::move(future);
    } else {
      out.futures[static_cast<std::size_t>(i)] = latent_row_to_world(z.row(i), frames[i]);
    }
  }
  return out;
}

GeneratedFutures unguided_sample(const Denoiser& denoiser, const world::Scenario& scenario,
                                 std::uint64_t seed) {
  const DiffusionSchedule& schedule = denoiser.schedule();
  const std::vector<feat::AgentFrame> frames = make_frames(scenario);
  const int n = static_cast<int>(scenario.agents.size());
  const int t_f = scenario.horizons.t_f;

  Rng rng = make_rng(seed, 0x7A1);
  Mat z(n, 2 * t_f);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2 * t_f; ++c) z(i, c) = normal01(rng);

  for (int k = schedule.steps(); k >= 1; --k) {
    const DenoiseStep step = denoiser.denoise_step(z, k, scenario);
    const double sigma = std::sqrt(step.sigma2);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 2 * t_f; ++c) z(i, c) = step.mu(i, c) + sigma * normal01(rng);
  }

  GeneratedFutures out;
  out.futures.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.futures[static_cast<std::size_t>(i)] = latent_row_to_world(z.row(i), frames[i]);
  return out;
}

Mat preliminary_attention(const Denoiser& denoiser, const world::Scenario& scenario,
                          const GuidanceConfig& guidance, std::uint64_t seed) {
  const DiffusionSchedule& schedule = denoiser.schedule();
  const std::vector<feat::AgentFrame> frames = make_frames(scenario);
  const Mat z0 = ground_truth_latents(scenario, frames);
  const int k_tail = std::max(1, real_guidance_start_step(guidance.lambda_tail, schedule.steps()));

  Rng rng = make_rng(seed, 0xA77);
  Mat z(z0.rows(), z0.cols());
  for (Eigen::Index i = 0; i < z0.rows(); ++i)
    z.row(i) = forward_noise(z0.row(i), k_tail, schedule, rng);

  Mat attention;
  denoiser.predict_noise(z, k_tail, scenario, &attention);
  return attention;
}

}  // namespace galtraj::diff
