#include "galtraj/schedule.hpp"

#include <cmath>

#include "galtraj/errors.hpp"

namespace galtraj::diff {

DiffusionSchedule::DiffusionSchedule(int k_steps, double beta_start, double beta_end)
    : k_(k_steps), beta_start_(beta_start), beta_end_(beta_end) {
  if (k_steps < 1) throw ConfigError("schedule: K must be >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end))
    throw ConfigError("schedule: betas must be positive, nondecreasing and < 1");
  betas_.assign(k_ + 1, 0.0);
  alpha_bars_.assign(k_ + 1, 1.0);
  for (int k = 1; k <= k_; ++k) {
    betas_[k] = k_ == 1 ? beta_start
                        : beta_start + (beta_end - beta_start) * (k - 1) / (k_ - 1);
    alpha_bars_[k] = alpha_bars_[k - 1] * (1.0 - betas_[k]);
  }
}

double DiffusionSchedule::beta(int k) const {
  if (k < 1 || k > k_) throw ConfigError("schedule: beta index out of range");
  return betas_[k];
}

double DiffusionSchedule::alpha(int k) const { return 1.0 - beta(k); }

double DiffusionSchedule::alpha_bar(int k) const {
  if (k < 0 || k > k_) throw ConfigError("schedule: alpha_bar index out of range");
  return alpha_bars_[k];
}

double DiffusionSchedule::posterior_variance(int k) const {
  if (k < 1 || k > k_) throw ConfigError("schedule: posterior variance index out of range");
  return (1.0 - alpha_bars_[k - 1]) / (1.0 - alpha_bars_[k]) * betas_[k];
}

Eigen::RowVectorXd forward_noise(const Eigen::RowVectorXd& y0, int k,
                                 const DiffusionSchedule& schedule, Rng& rng) {
  if (k < 0 || k > schedule.steps())
    throw ConfigError("forward_noise: step index " + std::to_string(k) + " outside [0, " +
                      std::to_string(schedule.steps()) + "]");
  if (k == 0) return y0;
  const double a = std::sqrt(schedule.alpha_bar(k));
  const double b = std::sqrt(1.0 - schedule.alpha_bar(k));
  Eigen::RowVectorXd out(y0.size());
  for (Eigen::Index i = 0; i < y0.size(); ++i) out(i) = a * y0(i) + b * normal01(rng);
  return out;
}

Eigen::RowVectorXd forward_noise(const Eigen::RowVectorXd& y0, int k,
                                 const DiffusionSchedule& schedule, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xF0);
  return forward_noise(y0, k, schedule, rng);
}

}  // namespace galtraj::diff
