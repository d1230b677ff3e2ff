#ifndef GALTRAJ_DATASET_IO_HPP_
#define GALTRAJ_DATASET_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "galtraj/scenario.hpp"

namespace galtraj::world {

struct DatasetHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t count = 0;
};

// Line-delimited records, one scenario per line, preceded by a header line.
// Doubles are written with shortest round-trip formatting so that
// load(save(d)) reproduces every field exactly.
void save_dataset(const std::vector<Scenario>& scenarios, const std::string& path,
                  const DatasetHeader& header = {});

// Throws DataError naming the line on malformed records, and on horizon
// mismatches across records. An empty file yields an empty list.
std::vector<Scenario> load_dataset(const std::string& path, DatasetHeader* header = nullptr);

// FNV-1a of a canonical config string; used for the header's config_hash.
std::string fnv1a_hex(const std::string& text);

}  // namespace galtraj::world

#endif  // GALTRAJ_DATASET_IO_HPP_
