#ifndef GALTRAJ_MAP_BUILDER_HPP_
#define GALTRAJ_MAP_BUILDER_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "galtraj/scenario.hpp"

namespace galtraj::world {

enum class Topology { kStraight, kCurve, kTIntersection, kFourWay };

inline constexpr int kTopologyCount = 4;

const char* topology_name(Topology t);
std::optional<Topology> topology_from_name(const std::string& name);

// Deterministic procedural map for a fixed (seed, topology). Junction maps
// carry turn/u-turn connector lanes; straight and curve maps are two parallel
// same-direction lanes.
MapGraph build_map(std::uint64_t seed, Topology topology);

}  // namespace galtraj::world

#endif  // GALTRAJ_MAP_BUILDER_HPP_
