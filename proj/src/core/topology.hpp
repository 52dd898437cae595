#pragma once

// Two-level machine description (groups of nodes, ranks per node) and the
// rank placements the tracer and the simulator classify transfers with.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/error.hpp"

namespace pico {

struct Topology {
  std::string name = "machine";
  int groups = 1;
  int nodes_per_group = 1;
  int ranks_per_node = 1;
  // Reserved for deeper hierarchies; parsed and kept, not interpreted.
  std::optional<int> levels;

  long capacity() const {
    return static_cast<long>(groups) * nodes_per_group * ranks_per_node;
  }
};

Topology parse_topology(const nlohmann::json& j);
Topology load_topology(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const Topology& t);

struct Placement {
  int node = 0;  // global node id: group * nodes_per_group + local node
  int group = 0;
  int slot = 0;

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct Allocation {
  std::vector<Placement> ranks;

  int size() const { return static_cast<int>(ranks.size()); }
  friend bool operator==(const Allocation&, const Allocation&) = default;
};

enum class AllocationPolicy { block, round_robin };
std::string_view to_string(AllocationPolicy policy);
std::optional<AllocationPolicy> parse_allocation_policy(std::string_view text);

Allocation make_allocation(AllocationPolicy policy, int ranks, const Topology& topo);

// Throws Errc::usage when the allocation does not fit the topology.
void check_allocation(const Allocation& alloc, const Topology& topo);

enum class LinkClass { intra_node, intra_group, inter_group };
inline constexpr LinkClass kAllLinkClasses[] = {LinkClass::intra_node, LinkClass::intra_group,
                                                LinkClass::inter_group};
std::string_view to_string(LinkClass c);

LinkClass classify(const Allocation& alloc, int a, int b);

inline constexpr std::string_view kAllocCsvHeader = "rank,node,group,slot";
void write_alloc_csv(const std::filesystem::path& path, const Allocation& alloc);
Allocation read_alloc_csv(const std::filesystem::path& path);

}  // namespace pico
