#include "core/topology.hpp"

#include <fstream>
#include <sstream>

namespace pico {

namespace {

int positive_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail(Errc::schema, std::string("topology.") + key + ": missing");
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long>() < 1)
    fail(Errc::schema, std::string("topology.") + key + ": must be an integer >= 1");
  return v.get<int>();
}

}  // namespace

Topology parse_topology(const nlohmann::json& j) {
  if (!j.is_object()) fail(Errc::schema, "topology: expected an object");
  Topology t;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) fail(Errc::schema, "topology.name: must be a string");
    t.name = j.at("name").get<std::string>();
  }
  t.groups = positive_int(j, "groups");
  t.nodes_per_group = positive_int(j, "nodes_per_group");
  t.ranks_per_node = positive_int(j, "ranks_per_node");
  if (j.contains("levels") && !j.at("levels").is_null()) t.levels = positive_int(j, "levels");
  return t;
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::dangling_reference, "topology file not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::parse, path.string() + ": " + e.what());
  }
  return parse_topology(j);
}

nlohmann::ordered_json to_json(const Topology& t) {
  nlohmann::ordered_json j;
  j["name"] = t.name;
  j["groups"] = t.groups;
  j["nodes_per_group"] = t.nodes_per_group;
  j["ranks_per_node"] = t.ranks_per_node;
  if (t.levels) j["levels"] = *t.levels;
  return j;
}

std::string_view to_string(AllocationPolicy policy) {
  return policy == AllocationPolicy::block ? "block" : "rr";
}

std::optional<AllocationPolicy> parse_allocation_policy(std::string_view text) {
  if (text == "block") return AllocationPolicy::block;
  if (text == "rr" || text == "round_robin" || text == "roundrobin") return AllocationPolicy::round_robin;
  return std::nullopt;
}

Allocation make_allocation(AllocationPolicy policy, int ranks, const Topology& topo) {
  if (ranks < 1) fail(Errc::usage, "allocation: need at least one rank");
  if (ranks > topo.capacity())
    fail(Errc::usage, "allocation: " + std::to_string(ranks) + " ranks exceed the capacity " +
                          std::to_string(topo.capacity()) + " of topology '" + topo.name + "'");
  Allocation a;
  a.ranks.reserve(ranks);
  for (int r = 0; r < ranks; ++r) {
    Placement pl;
    if (policy == AllocationPolicy::block) {
      const int node = r / topo.ranks_per_node;
      pl = {node, node / topo.nodes_per_group, r % topo.ranks_per_node};
    } else {
      // Deal ranks across groups; fill nodes in order inside each group.
      const int group = r % topo.groups;
      const int idx = r / topo.groups;
      const int local_node = idx / topo.ranks_per_node;
      if (local_node >= topo.nodes_per_group)
        fail(Errc::usage, "allocation: group " + std::to_string(group) + " overflows under rr");
      pl = {group * topo.nodes_per_group + local_node, group, idx % topo.ranks_per_node};
    }
    a.ranks.push_back(pl);
  }
  return a;
}

void check_allocation(const Allocation& alloc, const Topology& topo) {
  std::vector<int> used(static_cast<std::size_t>(topo.groups) * topo.nodes_per_group, 0);
  for (int r = 0; r < alloc.size(); ++r) {
    const Placement& pl = alloc.ranks[r];
    const std::string who = "allocation: rank " + std::to_string(r);
    if (pl.group < 0 || pl.group >= topo.groups) fail(Errc::usage, who + " group out of range");
    if (pl.node < 0 || pl.node >= static_cast<int>(used.size()))
      fail(Errc::usage, who + " node out of range");
    if (pl.node / topo.nodes_per_group != pl.group)
      fail(Errc::usage, who + " node " + std::to_string(pl.node) + " is not in group " +
                            std::to_string(pl.group));
    if (pl.slot < 0 || pl.slot >= topo.ranks_per_node) fail(Errc::usage, who + " slot out of range");
    if (++used[pl.node] > topo.ranks_per_node)
      fail(Errc::usage, "allocation: node " + std::to_string(pl.node) + " holds more than " +
                            std::to_string(topo.ranks_per_node) + " ranks");
  }
}

std::string_view to_string(LinkClass c) {
  switch (c) {
    case LinkClass::intra_node: return "intra_node";
    case LinkClass::intra_group: return "intra_group";
    case LinkClass::inter_group: break;
  }
  return "inter_group";
}

LinkClass classify(const Allocation& alloc, int a, int b) {
  const Placement& x = alloc.ranks.at(a);
  const Placement& y = alloc.ranks.at(b);
  if (x.node == y.node) return LinkClass::intra_node;
  if (x.group == y.group) return LinkClass::intra_group;
  return LinkClass::inter_group;
}

void write_alloc_csv(const std::filesystem::path& path, const Allocation& alloc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << kAllocCsvHeader << '\n';
  for (int r = 0; r < alloc.size(); ++r) {
    const Placement& pl = alloc.ranks[r];
    out << r << ',' << pl.node << ',' << pl.group << ',' << pl.slot << '\n';
  }
  if (!out) fail(Errc::io, "write failed: " + path.string());
}

Allocation read_alloc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kAllocCsvHeader)
    fail(Errc::parse, path.string() + ": expected header '" + std::string(kAllocCsvHeader) + "'");
  Allocation a;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    int rank, node, group, slot;
    char c1, c2, c3;
    if (!(row >> rank >> c1 >> node >> c2 >> group >> c3 >> slot) || c1 != ',' || c2 != ',' ||
        c3 != ',')
      fail(Errc::parse, path.string() + ":" + std::to_string(lineno) + ": malformed row");
    if (rank != a.size())
      fail(Errc::parse, path.string() + ":" + std::to_string(lineno) + ": ranks must be listed in order");
    a.ranks.push_back({node, group, slot});
  }
  return a;
}

}  // namespace pico
