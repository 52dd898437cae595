#include <doctest.h>

#include <bit>
#include <set>

#include "core/schedule.hpp"

using namespace pico;

namespace {

std::vector<int> pow2 = {2, 4, 8, 16, 32};

int log2i(int p) { return std::countr_zero(static_cast<unsigned>(p)); }

std::vector<std::pair<int, std::size_t>> sends_of(const Schedule& s, int rank) {
  std::vector<std::pair<int, std::size_t>> out;
  for (const auto& st : s.programs[rank].steps)
    for (const auto& a : st.actions)
      if (a.kind == ActionKind::send) out.emplace_back(a.peer, a.bytes);
  return out;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("every algorithm maps to one collective and back") {
    for (auto id : kAllAlgorithms) {
      auto c = collective_of(id);
      CHECK(parse_algorithm(c, algorithm_name(id)) == id);
      const auto list = algorithms_for(c);
      CHECK(std::count(list.begin(), list.end(), id) == 1);
    }
    CHECK_FALSE(parse_algorithm(CollectiveKind::alltoall, "ring"));
  }

  TEST_CASE("rank-count constraints") {
    CHECK(supports_ranks(AlgorithmId::allreduce_ring, 3));
    CHECK(supports_ranks(AlgorithmId::alltoall_pairwise, 5));
    CHECK_FALSE(supports_ranks(AlgorithmId::allreduce_rabenseifner, 6));
    try {
      build_schedule(AlgorithmId::allreduce_recursive_doubling, 6, 48 * 4, 4);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unsupported);
    }
    try {
      build_schedule(AlgorithmId::reduce_scatter_ring, 4, 20, 4);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::usage);
    }
  }

  TEST_CASE("cost term examples") {
    auto ring = build_schedule(AlgorithmId::allreduce_ring, 4, 4096, 4);
    auto ct = cost_terms(ring, 0);
    CHECK(ct.steps == 6);
    CHECK(ct.bytes_sent == 6144);
    CHECK(ct.reduced_elements == 3 * 256);

    auto rd = build_schedule(AlgorithmId::allreduce_recursive_doubling, 8, 4096, 4);
    CHECK(cost_terms(rd, 3).steps == 3);
    CHECK(cost_terms(rd, 3).bytes_sent == 12288);

    auto rab = build_schedule(AlgorithmId::allreduce_rabenseifner, 8, 4096, 4);
    CHECK(cost_terms(rab, 5).steps == 6);
    CHECK(cost_terms(rab, 5).bytes_sent == 7168);
  }

  TEST_CASE("distance doubling sends 512, 256, 128 to distances 1, 2, 4") {
    auto s = build_schedule(AlgorithmId::reduce_scatter_distance_doubling, 8, 1024, 4);
    for (int r = 0; r < 8; ++r) {
      auto sends = sends_of(s, r);
      REQUIRE(sends.size() == 3);
      CHECK(sends[0] == std::pair<int, std::size_t>{r ^ 1, 512});
      CHECK(sends[1] == std::pair<int, std::size_t>{r ^ 2, 256});
      CHECK(sends[2] == std::pair<int, std::size_t>{r ^ 4, 128});
    }
    auto h = build_schedule(AlgorithmId::reduce_scatter_distance_halving, 8, 1024, 4);
    auto sends = sends_of(h, 0);
    REQUIRE(sends.size() == 3);
    CHECK(sends[0] == std::pair<int, std::size_t>{4, 512});
    CHECK(sends[1] == std::pair<int, std::size_t>{2, 256});
    CHECK(sends[2] == std::pair<int, std::size_t>{1, 128});
  }

  TEST_CASE("ring volume and step laws") {
    for (int p : {2, 3, 4, 5, 6, 8, 16})
      for (std::size_t elems : {static_cast<std::size_t>(p), 4ul * p, 64ul * p}) {
        const std::size_t n = elems * 4;
        auto s = build_schedule(AlgorithmId::allreduce_ring, p, n, 4);
        for (int r = 0; r < p; ++r) {
          auto ct = cost_terms(s, r);
          CHECK(ct.steps == static_cast<std::size_t>(2 * (p - 1)));
          CHECK(ct.bytes_sent == 2 * n * (p - 1) / p);
        }
      }
  }

  TEST_CASE("step laws") {
    for (int p : pow2) {
      const std::size_t n = 64ul * p * 4;
      CHECK(build_schedule(AlgorithmId::allreduce_recursive_doubling, p, n, 4).step_count() ==
            static_cast<std::size_t>(log2i(p)));
      CHECK(build_schedule(AlgorithmId::allreduce_rabenseifner, p, n, 4).step_count() ==
            static_cast<std::size_t>(2 * log2i(p)));
    }
    for (int p : {2, 3, 4, 5, 6, 8, 16})
      CHECK(build_schedule(AlgorithmId::alltoall_pairwise, p, 16ul * p * 4, 4).step_count() ==
            static_cast<std::size_t>(p - 1));
  }

  TEST_CASE("built schedules validate and conserve bytes") {
    for (auto id : kAllAlgorithms)
      for (int p : {2, 3, 4, 5, 6, 8, 16}) {
        if (!supports_ranks(id, p)) continue;
        auto s = build_schedule(id, p, 16ul * p * 8, 8);
        auto rep = validate_schedule(s);
        CHECK_MESSAGE(rep.ok(), qualified_name(id), " p=", p);
        std::size_t sent = 0, received = 0;
        for (int r = 0; r < p; ++r) {
          auto ct = cost_terms(s, r);
          sent += ct.bytes_sent;
          received += ct.bytes_received;
          CHECK(ct.steps == s.step_count());
        }
        CHECK(sent == received);
      }
  }

  TEST_CASE("halving and doubling share cost terms") {
    for (int p : pow2) {
      const std::size_t n = 4ul * p * 4;
      auto h = build_schedule(AlgorithmId::reduce_scatter_distance_halving, p, n, 4);
      auto d = build_schedule(AlgorithmId::reduce_scatter_distance_doubling, p, n, 4);
      for (int r = 0; r < p; ++r) {
        auto a = cost_terms(h, r), b = cost_terms(d, r);
        CHECK(a.steps == b.steps);
        CHECK(a.bytes_sent == b.bytes_sent);
        CHECK(a.reduced_elements == b.reduced_elements);
        CHECK(a.step_bytes_sent == b.step_bytes_sent);
      }
    }
  }

  TEST_CASE("symmetric algorithms give identical per-rank terms") {
    for (auto id : kAllAlgorithms) {
      auto s = build_schedule(id, 8, 8ul * 64 * 4, 4);
      auto first = cost_terms(s, 0);
      for (int r = 1; r < 8; ++r) {
        auto ct = cost_terms(s, r);
        CHECK(ct.steps == first.steps);
        CHECK(ct.bytes_sent == first.bytes_sent);
        CHECK(ct.reduced_elements == first.reduced_elements);
      }
    }
  }

  TEST_CASE("validation flags an unmatched send") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 4, 4096, 4);
    auto& acts = s.programs[1].steps[0].actions;
    for (auto it = acts.begin(); it != acts.end(); ++it)
      if (it->kind == ActionKind::recv) {
        acts.erase(it);
        break;
      }
    auto rep = validate_schedule(s);
    CHECK(rep.violations.size() == 1);
    CHECK(rep.count(ViolationKind::unmatched_send) == 1);
  }

  TEST_CASE("validation flags a peer out of range") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 4, 4096, 4);
    for (auto& a : s.programs[2].steps[1].actions)
      if (a.kind == ActionKind::send) {
        a.peer = 4;
        break;
      }
    auto rep = validate_schedule(s);
    CHECK(rep.count(ViolationKind::peer_out_of_range) >= 1);
  }

  TEST_CASE("validation flags step count asymmetry") {
    auto s = build_schedule(AlgorithmId::allreduce_recursive_doubling, 4, 4096, 4);
    s.programs[0].steps.push_back({"extra", {}});
    CHECK(validate_schedule(s).count(ViolationKind::step_count_mismatch) >= 1);
  }

  TEST_CASE("cost_terms rejects an out-of-range rank") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 4, 4096, 4);
    CHECK_THROWS_AS(cost_terms(s, 4), Error);
    CHECK_THROWS_AS(cost_terms(s, -1), Error);
  }

  TEST_CASE("text form has one line per action") {
    auto s = build_schedule(AlgorithmId::reduce_scatter_distance_doubling, 2, 64, 4);
    const std::string text = to_text(s);
    std::size_t actions = 0;
    for (const auto& prog : s.programs)
      for (const auto& st : prog.steps) actions += st.actions.size();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(actions + 1));
    CHECK(text.find("0 0 reduce-scatter send 1 32 0:0:1\n") != std::string::npos);
    CHECK(text.find("1 0 reduce-scatter recv 0 32 0:0:1\n") != std::string::npos);
    CHECK(to_text(s) == text);
  }

  TEST_CASE("pairwise peers") {
    auto s = build_schedule(AlgorithmId::alltoall_pairwise, 8, 8 * 4 * 4, 4);
    auto sends = sends_of(s, 5);
    std::set<int> peers;
    for (std::size_t i = 0; i < sends.size(); ++i) {
      CHECK(sends[i].first == (5 ^ static_cast<int>(i + 1)));
      peers.insert(sends[i].first);
    }
    CHECK(peers.size() == 7);
  }
}
