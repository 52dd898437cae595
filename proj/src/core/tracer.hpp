#pragma once

// Traffic placement estimates: which transfers of a schedule stay on a
// node, cross local (intra-group) links, or cross global links.

#include <cstdint>
#include <string>
#include <vector>

#include "core/schedule.hpp"
#include "core/topology.hpp"

namespace pico {

struct TrafficReport {
  std::string label;
  std::uint64_t intra_node_bytes = 0;
  std::uint64_t local_bytes = 0;
  std::uint64_t global_bytes = 0;
  // group_matrix[src][dst]: bytes leaving group src for group dst.
  std::vector<std::vector<std::uint64_t>> group_matrix;

  std::uint64_t total() const { return intra_node_bytes + local_bytes + global_bytes; }
};

// Each send is counted once, under the heaviest class it traverses.
TrafficReport trace(const Schedule& s, const Allocation& alloc, const Topology& topo);

// rows = groups, cells = nodes of that group, each holding its ranks.
struct CellMap {
  std::vector<std::vector<std::vector<int>>> groups;

  std::string to_text() const;
};

CellMap rank_cell_map(const Allocation& alloc, const Topology& topo);

}  // namespace pico
