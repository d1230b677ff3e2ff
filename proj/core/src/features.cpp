#include "galtraj/features.hpp"

#include <cmath>

#include "galtraj/road_analysis.hpp"

namespace galtraj::feat {

using geom::Vec2;

AgentFrame make_agent_frame(const world::AgentTrack& track, const world::Horizons& h) {
  AgentFrame frame;
  const int now = world::AgentTrack::index_of(h, 0);
  frame.center = track.positions[now];
  Vec2 dir{0.0, 0.0};
  if (now > 0) dir = track.positions[now] - track.positions[now - 1];
  if (dir.norm() < 1e-9 && now + 1 < static_cast<int>(track.positions.size()))
    dir = track.positions[now + 1] - track.positions[now];
  const double n = dir.norm();
  if (n > 1e-9) {
    frame.cos_h = dir.x() / n;
    frame.sin_h = dir.y() / n;
  }
  return frame;
}

Eigen::RowVectorXd encode_condition(const world::Scenario& scenario, int agent_index,
                                    const AgentFrame& frame) {
  const world::Horizons& h = scenario.horizons;
  const world::AgentTrack& track = scenario.agents[agent_index];
  Eigen::RowVectorXd out(condition_dim(h.t_h));
  int at = 0;
  const int now = world::AgentTrack::index_of(h, 0);
  for (int t = -h.t_h; t <= 0; ++t) {
    const Vec2 local = frame.to_local(track.positions[world::AgentTrack::index_of(h, t)]);
    out(at++) = local.x() / kFeatureScale;
    out(at++) = local.y() / kFeatureScale;
  }
  const world::LaneFeature lane = world::nearest_lane_feature(scenario.map, frame.center);
  const Vec2 lane_off = frame.to_local(lane.point);
  out(at++) = lane_off.x() / kFeatureScale;
  out(at++) = lane_off.y() / kFeatureScale;
  const Vec2 tan_local{frame.cos_h * lane.tangent.x() + frame.sin_h * lane.tangent.y(),
                       -frame.sin_h * lane.tangent.x() + frame.cos_h * lane.tangent.y()};
  out(at++) = tan_local.x();
  out(at++) = tan_local.y();
  double speed = 0.0;
  if (now > 0) speed = (track.positions[now] - track.positions[now - 1]).norm() / h.dt;
  out(at++) = speed / kFeatureScale;
  return out;
}

Eigen::RowVectorXd future_to_latent(const world::AgentTrack& track, const world::Horizons& h,
                                    const AgentFrame& frame) {
  Eigen::RowVectorXd z(2 * h.t_f);
  for (int t = 1; t <= h.t_f; ++t) {
    const Vec2 local = frame.to_local(track.positions[world::AgentTrack::index_of(h, t)]);
    z(2 * (t - 1)) = local.x() / kLatentScale;
    z(2 * (t - 1) + 1) = local.y() / kLatentScale;
  }
  return z;
}

std::vector<Vec2> latent_to_future(const Eigen::RowVectorXd& z, const AgentFrame& frame) {
  std::vector<Vec2> out;
  const int t_f = static_cast<int>(z.size()) / 2;
  out.reserve(t_f);
  for (int t = 0; t < t_f; ++t) {
    out.push_back(frame.to_world({z(2 * t) * kLatentScale, z(2 * t + 1) * kLatentScale}));
  }
  return out;
}

}  // namespace galtraj::feat
