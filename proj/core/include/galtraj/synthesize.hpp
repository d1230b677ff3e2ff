#ifndef GALTRAJ_SYNTHESIZE_HPP_
#define GALTRAJ_SYNTHESIZE_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "galtraj/map_builder.hpp"
#include "galtraj/scenario.hpp"

namespace galtraj::world {

struct ManeuverMix {
  std::array<double, kManeuverCount> p{0.55, 0.20, 0.20, 0.05 / 3, 0.05 / 3, 0.05 / 3};

  double tail_mass() const;
  // Throws ConfigError unless probabilities are non-negative and sum to 1 +- 1e-9.
  void validate() const;
};

// Lane-following agents with maneuver-specific speed and steering programs.
// Deterministic for fixed inputs. Throws DataError naming the seed when a
// feasible spawn cannot be found within the retry budget.
Scenario synthesize_scenario(const MapGraph& map, const ManeuverMix& mix, int n_agents,
                             std::uint64_t seed, const Horizons& horizons = {});

struct DatasetConfig {
  int count = 2000;
  std::array<double, kTopologyCount> topology_mix{0.25, 0.25, 0.25, 0.25};
  ManeuverMix maneuver_mix;
  int agents_min = 2;
  int agents_max = kDefaultMaxAgents;
  Horizons horizons;

  void validate() const;
};

std::vector<Scenario> synthesize_dataset(const DatasetConfig& config, std::uint64_t seed);

}  // namespace galtraj::world

#endif  // GALTRAJ_SYNTHESIZE_HPP_
