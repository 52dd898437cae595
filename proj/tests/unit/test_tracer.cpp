#include <doctest.h>

#include <bit>
#include <filesystem>

#include "core/tracer.hpp"

using namespace pico;

namespace {

struct Totals {
  std::uint64_t local = 0, global = 0;
};

// Partner arithmetic for the two recursive reduce-scatters, one rank per
// node, `per_group` consecutive ranks per group.
Totals brute_force(bool doubling, int p, std::uint64_t n, int per_group) {
  Totals t;
  const int steps = std::countr_zero(static_cast<unsigned>(p));
  for (int r = 0; r < p; ++r)
    for (int i = 1; i <= steps; ++i) {
      const int dist = doubling ? 1 << (i - 1) : p >> i;
      const int peer = r ^ dist;
      const std::uint64_t bytes = n >> i;
      (r / per_group == peer / per_group ? t.local : t.global) += bytes;
    }
  return t;
}

Topology topo(int groups, int nodes, int rpn) {
  Topology t;
  t.name = "t";
  t.groups = groups;
  t.nodes_per_group = nodes;
  t.ranks_per_node = rpn;
  return t;
}

}  // namespace

TEST_SUITE("tracer") {
  TEST_CASE("one group has no global traffic") {
    auto t = topo(1, 8, 1);
    auto s = build_schedule(AlgorithmId::allreduce_ring, 8, 8 * 64, 4);
    auto rep = trace(s, make_allocation(AllocationPolicy::block, 8, t), t);
    CHECK(rep.global_bytes == 0);
    CHECK(rep.intra_node_bytes == 0);
    CHECK(rep.local_bytes > 0);
  }

  TEST_CASE("two ranks on one node stay intra-node") {
    auto t = topo(1, 1, 2);
    const std::size_t n = 256;
    auto s = build_schedule(AlgorithmId::allreduce_recursive_doubling, 2, n, 4);
    auto rep = trace(s, make_allocation(AllocationPolicy::block, 2, t), t);
    CHECK(rep.intra_node_bytes == 2 * n);
    CHECK(rep.local_bytes == 0);
    CHECK(rep.global_bytes == 0);
  }

  TEST_CASE("halving and doubling at p=8 over two groups") {
    auto t = topo(2, 4, 1);
    auto alloc = make_allocation(AllocationPolicy::block, 8, t);
    auto d = trace(build_schedule(AlgorithmId::reduce_scatter_distance_doubling, 8, 1024, 4),
                   alloc, t);
    auto h = trace(build_schedule(AlgorithmId::reduce_scatter_distance_halving, 8, 1024, 4),
                   alloc, t);
    CHECK(d.global_bytes == 1024);
    CHECK(d.local_bytes == 6144);
    CHECK(h.global_bytes == 4096);
    CHECK(h.local_bytes == 3072);
    CHECK(d.total() == 7168);
    CHECK(h.total() == 7168);
    auto bd = brute_force(true, 8, 1024, 4), bh = brute_force(false, 8, 1024, 4);
    CHECK(d.global_bytes == bd.global);
    CHECK(d.local_bytes == bd.local);
    CHECK(h.global_bytes == bh.global);
    CHECK(h.local_bytes == bh.local);
  }

  TEST_CASE("brute force agrees across p and group counts") {
    for (int p : {4, 8, 16, 32})
      for (int g : {2, 4}) {
        if (p / g < 1) continue;
        auto t = topo(g, p / g, 1);
        auto alloc = make_allocation(AllocationPolicy::block, p, t);
        const std::uint64_t n = 64ull * p;
        for (bool doubling : {true, false}) {
          auto id = doubling ? AlgorithmId::reduce_scatter_distance_doubling
                             : AlgorithmId::reduce_scatter_distance_halving;
          auto rep = trace(build_schedule(id, p, n, 4), alloc, t);
          auto bf = brute_force(doubling, p, n, p / g);
          CHECK(rep.local_bytes == bf.local);
          CHECK(rep.global_bytes == bf.global);
        }
      }
  }

  TEST_CASE("conservation for every algorithm and placement") {
    auto t = topo(2, 4, 2);
    for (auto id : kAllAlgorithms)
      for (auto policy : {AllocationPolicy::block, AllocationPolicy::round_robin})
        for (int p : {4, 6, 8, 16}) {
          if (!supports_ranks(id, p)) continue;
          auto s = build_schedule(id, p, 32ul * p * 4, 4);
          auto rep = trace(s, make_allocation(policy, p, t), t);
          std::uint64_t sent = 0;
          for (int r = 0; r < p; ++r) sent += cost_terms(s, r).bytes_sent;
          CHECK(rep.total() == sent);
          std::uint64_t matrix = 0;
          for (const auto& row : rep.group_matrix)
            for (auto v : row) matrix += v;
          CHECK(matrix == rep.global_bytes);
        }
  }

  TEST_CASE("relabelling groups keeps the totals") {
    auto t = topo(2, 4, 1);
    auto alloc = make_allocation(AllocationPolicy::block, 8, t);
    auto swapped = alloc;
    for (auto& pl : swapped.ranks) {
      pl.group = 1 - pl.group;
      pl.node = pl.group * 4 + pl.node % 4;
    }
    auto s = build_schedule(AlgorithmId::allreduce_rabenseifner, 8, 8 * 64, 4);
    auto a = trace(s, alloc, t), b = trace(s, swapped, t);
    CHECK(a.local_bytes == b.local_bytes);
    CHECK(a.global_bytes == b.global_bytes);
    CHECK(a.intra_node_bytes == b.intra_node_bytes);
    CHECK(a.group_matrix[0][1] == b.group_matrix[1][0]);
    CHECK(a.group_matrix[1][0] == b.group_matrix[0][1]);
  }

  TEST_CASE("cell map examples") {
    auto t1 = topo(1, 4, 1);
    auto m1 = rank_cell_map(make_allocation(AllocationPolicy::block, 4, t1), t1);
    CHECK(m1.to_text() == "group0: [0] [1] [2] [3]\n");

    auto t2 = topo(2, 4, 1);
    auto block = rank_cell_map(make_allocation(AllocationPolicy::block, 8, t2), t2);
    CHECK(block.to_text() == "group0: [0] [1] [2] [3]\ngroup1: [4] [5] [6] [7]\n");
    auto rr = rank_cell_map(make_allocation(AllocationPolicy::round_robin, 8, t2), t2);
    CHECK(rr.to_text() == "group0: [0] [2] [4] [6]\ngroup1: [1] [3] [5] [7]\n");
  }

  TEST_CASE("allocation errors and csv round trip") {
    auto t = topo(2, 2, 2);
    CHECK_THROWS_AS(make_allocation(AllocationPolicy::block, 9, t), Error);
    auto a = make_allocation(AllocationPolicy::round_robin, 7, t);
    CHECK_NOTHROW(check_allocation(a, t));
    auto bad = a;
    bad.ranks[0].group = 1;
    CHECK_THROWS_AS(check_allocation(bad, t), Error);

    const auto path = std::filesystem::temp_directory_path() / "pico_alloc_test.csv";
    write_alloc_csv(path, a);
    CHECK(read_alloc_csv(path) == a);
    std::filesystem::remove(path);
  }

  TEST_CASE("topology parsing") {
    auto t = parse_topology(nlohmann::json::parse(
        R"({"name":"x","groups":3,"nodes_per_group":2,"ranks_per_node":4})"));
    CHECK(t.capacity() == 24);
    try {
      parse_topology(nlohmann::json::parse(R"({"groups":0,"nodes_per_group":1,"ranks_per_node":1})"));
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::schema);
    }
    try {
      load_topology("/nonexistent/topology.json");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::dangling_reference);
    }
  }
}
