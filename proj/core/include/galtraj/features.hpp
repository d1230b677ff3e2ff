#ifndef GALTRAJ_FEATURES_HPP_
#define GALTRAJ_FEATURES_HPP_

#include <Eigen/Core>

#include "galtraj/scenario.hpp"

namespace galtraj::feat {

// Per-agent pose frame at t=0: translation to the last observed position,
// rotation to the last observed heading.
struct AgentFrame {
  geom::Vec2 center{0.0, 0.0};
  double cos_h = 1.0;
  double sin_h = 0.0;

  geom::Vec2 to_local(const geom::Vec2& w) const {
    const geom::Vec2 d = w - center;
    return {cos_h * d.x() + sin_h * d.y(), -sin_h * d.x() + cos_h * d.y()};
  }
  geom::Vec2 to_world(const geom::Vec2& l) const {
    return {center.x() + cos_h * l.x() - sin_h * l.y(),
            center.y() + sin_h * l.x() + cos_h * l.y()};
  }
};

AgentFrame make_agent_frame(const world::AgentTrack& track, const world::Horizons& h);

// Input normalization scales. The latent scale is a power of two so that
// latent round trips multiply and divide exactly.
inline constexpr double kFeatureScale = 10.0;
inline constexpr double kLatentScale = 16.0;

inline constexpr int condition_dim(int t_h) { return 2 * (t_h + 1) + 5; }

// Past offsets in the agent frame, nearest-lane offset and tangent, speed.
Eigen::RowVectorXd encode_condition(const world::Scenario& scenario, int agent_index,
                                    const AgentFrame& frame);

// Future trajectory (t = 1 .. t_f) as a flat latent row of length 2*t_f.
Eigen::RowVectorXd future_to_latent(const world::AgentTrack& track, const world::Horizons& h,
                                    const AgentFrame& frame);
std::vector<geom::Vec2> latent_to_future(const Eigen::RowVectorXd& z, const AgentFrame& frame);

}  // namespace galtraj::feat

#endif  // GALTRAJ_FEATURES_HPP_
