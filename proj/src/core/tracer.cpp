#include "core/tracer.hpp"

#include <sstream>

namespace pico {

TrafficReport trace(const Schedule& s, const Allocation& alloc, const Topology& topo) {
  if (alloc.size() < s.ranks)
    fail(Errc::usage, "trace: allocation covers " + std::to_string(alloc.size()) +
                          " ranks, schedule needs " + std::to_string(s.ranks));
  check_allocation(alloc, topo);

  TrafficReport rep;
  rep.label = qualified_name(s.algorithm);
  rep.group_matrix.assign(topo.groups, std::vector<std::uint64_t>(topo.groups, 0));
  for (int r = 0; r < s.ranks; ++r) {
    for (const Step& step : s.programs[r].steps) {
      for (const Action& a : step.actions) {
        if (a.kind != ActionKind::send) continue;
        switch (classify(alloc, r, a.peer)) {
          case LinkClass::intra_node: rep.intra_node_bytes += a.bytes; break;
          case LinkClass::intra_group: rep.local_bytes += a.bytes; break;
          case LinkClass::inter_group:
            rep.global_bytes += a.bytes;
            rep.group_matrix[alloc.ranks[r].group][alloc.ranks[a.peer].group] += a.bytes;
            break;
        }
      }
    }
  }
  return rep;
}

CellMap rank_cell_map(const Allocation& alloc, const Topology& topo) {
  check_allocation(alloc, topo);
  CellMap map;
  map.groups.assign(topo.groups, std::vector<std::vector<int>>(topo.nodes_per_group));
  for (int r = 0; r < alloc.size(); ++r) {
    const Placement& pl = alloc.ranks[r];
    map.groups[pl.group][pl.node % topo.nodes_per_group].push_back(r);
  }
  return map;
}

std::string CellMap::to_text() const {
  std::ostringstream os;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    os << "group" << g << ":";
    for (const auto& cell : groups[g]) {
      os << " [";
      for (std::size_t i = 0; i < cell.size(); ++i) os << (i ? "," : "") << cell[i];
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace pico
