#ifndef GALTRAJ_SCHEDULE_HPP_
#define GALTRAJ_SCHEDULE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "galtraj/rng.hpp"

namespace galtraj::diff {

// Noise schedule over K steps with the alpha_bar(0) = 1 convention, so step
// k = 0 is the identity. Index k runs 1..K for betas.
class DiffusionSchedule {
 public:
  DiffusionSchedule(int k_steps, double beta_start, double beta_end);
  static DiffusionSchedule linear_default() { return {32, 1e-4, 0.05}; }

  int steps() const { return k_; }
  double beta(int k) const;       // k in [1, K]
  double alpha(int k) const;      // 1 - beta(k)
  double alpha_bar(int k) const;  // k in [0, K], alpha_bar(0) == 1
  // Fixed posterior variance of the reverse transition at step k (k >= 1);
  // zero at k = 1 so the final step is deterministic.
  double posterior_variance(int k) const;

  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

 private:
  int k_;
  double beta_start_, beta_end_;
  std::vector<double> betas_;       // [0] unused
  std::vector<double> alpha_bars_;  // index 0..K
};

// y_k = sqrt(alpha_bar_k) * y0 + sqrt(1 - alpha_bar_k) * eps, eps ~ N(0, I)
// per coordinate. Deterministic given rng state; k = 0 returns y0 bit-exactly.
Eigen::RowVectorXd forward_noise(const Eigen::RowVectorXd& y0, int k,
                                 const DiffusionSchedule& schedule, Rng& rng);
Eigen::RowVectorXd forward_noise(const Eigen::RowVectorXd& y0, int k,
                                 const DiffusionSchedule& schedule, std::uint64_t seed);

}  // namespace galtraj::diff

#endif  // GALTRAJ_SCHEDULE_HPP_
