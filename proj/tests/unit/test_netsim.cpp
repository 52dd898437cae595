#include <doctest.h>

#include <cmath>

#include "core/netsim.hpp"

using namespace pico;

namespace {

// Powers of two keep every product and sum exact.
NetworkModel dyadic() {
  auto m = NetworkModel::uniform(std::ldexp(1.0, -20), std::ldexp(1.0, -30), std::ldexp(1.0, -32));
  m.copy_beta = std::ldexp(1.0, -33);
  m.alloc_alpha = std::ldexp(1.0, -21);
  return m;
}

Topology two_groups() {
  Topology t;
  t.groups = 2;
  t.nodes_per_group = 4;
  t.ranks_per_node = 1;
  return t;
}

}  // namespace

TEST_SUITE("netsim") {
  TEST_CASE("closed form example") {
    auto m = NetworkModel::uniform(1e-6, 1e-9, 1e-9);
    m.rails = 1;
    m.eager_threshold = 0;
    const double t = predict_closed_form(AlgorithmId::allreduce_ring, 4, 4096, 4, m);
    CHECK(t == doctest::Approx(6 * 1e-6 + 6144 * 1e-9 + 768 * 1e-9).epsilon(1e-12));
    CHECK(t == doctest::Approx(1.2912e-5).epsilon(1e-12));
  }

  TEST_CASE("zero model predicts zero") {
    NetworkModel zero = NetworkModel::uniform(0, 0, 0);
    for (auto id : kAllAlgorithms) {
      auto s = build_schedule(id, 4, 4 * 64, 4);
      CHECK(predict_closed_form(s, zero) == 0);
      auto sim = simulate(s, zero);
      for (double c : sim.completion) CHECK(c == 0);
    }
  }

  TEST_CASE("rails divide beta above the eager threshold") {
    auto m = NetworkModel::uniform(1e-6, 1e-9);
    m.eager_threshold = 16384;
    m.rails = 2;
    CHECK(transfer_time(m, LinkClass::inter_group, 1 << 20) ==
          doctest::Approx(5.25288e-4).epsilon(1e-12));
    m.rails = 4;
    CHECK(transfer_time(m, LinkClass::inter_group, 1 << 20) ==
          doctest::Approx(2.63144e-4).epsilon(1e-12));
    const double small4 = transfer_time(m, LinkClass::inter_group, 4096);
    m.rails = 2;
    CHECK(transfer_time(m, LinkClass::inter_group, 4096) == small4);
    CHECK(beta_eff(m, LinkClass::intra_node, 16384) == 1e-9);
    CHECK(beta_eff(m, LinkClass::intra_node, 16385) == 1e-9 / 2);
  }

  TEST_CASE("simulate equals the closed form on homogeneous models") {
    auto m = dyadic();
    for (int rails : {1, 2})
      for (std::size_t eager : {std::size_t{0}, std::size_t{512}, std::size_t{1} << 30}) {
        m.rails = rails;
        m.eager_threshold = eager;
        for (auto id : kAllAlgorithms)
          for (int p : {2, 4, 8, 16})
            for (std::size_t elems : {std::size_t(p), 64ul * p}) {
              auto s = build_schedule(id, p, elems * 4, 4);
              CHECK_MESSAGE(simulate(s, m).max_completion() == predict_closed_form(s, m),
                            qualified_name(id), " p=", p, " n=", elems * 4);
            }
      }
  }

  TEST_CASE("closed form needs one link class") {
    auto m = default_network_model();
    REQUIRE_FALSE(m.is_homogeneous());
    try {
      predict_closed_form(AlgorithmId::allreduce_ring, 4, 4096, 4, m);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::usage);
    }
  }

  TEST_CASE("doubling beats halving when global links are slow") {
    NetworkModel m;
    m.link(LinkClass::intra_node) = {0, 1e-9};
    m.link(LinkClass::intra_group) = {0, 1e-9};
    m.link(LinkClass::inter_group) = {0, 1e-8};
    auto t = two_groups();
    auto alloc = make_allocation(AllocationPolicy::block, 8, t);
    auto d = simulate(build_schedule(AlgorithmId::reduce_scatter_distance_doubling, 8, 1024, 4), m,
                      alloc, t);
    auto h = simulate(build_schedule(AlgorithmId::reduce_scatter_distance_halving, 8, 1024, 4), m,
                      alloc, t);
    // 512 + 256 local, 128 global versus 512 global, 256 + 128 local.
    CHECK(d.max_completion() == doctest::Approx(2048e-9).epsilon(1e-12));
    CHECK(h.max_completion() == doctest::Approx(5504e-9).epsilon(1e-12));
    CHECK(d.max_completion() < h.max_completion());
  }

  TEST_CASE("placement must cover the ranks") {
    auto t = two_groups();
    auto alloc = make_allocation(AllocationPolicy::block, 4, t);
    auto s = build_schedule(AlgorithmId::allreduce_ring, 8, 8 * 16, 4);
    try {
      simulate(s, default_network_model(), alloc, t);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::usage);
    }
  }

  TEST_CASE("results are deterministic and consistent") {
    auto m = default_network_model();
    auto t = two_groups();
    auto alloc = make_allocation(AllocationPolicy::round_robin, 8, t);
    auto s = build_schedule(AlgorithmId::allreduce_rabenseifner, 8, 1 << 16, 4);
    auto a = simulate(s, m, alloc, t), b = simulate(s, m, alloc, t);
    CHECK(a.completion == b.completion);
    for (int r = 0; r < 8; ++r) {
      CHECK(a.completion[r] >= 0);
      REQUIRE(a.timeline[r].size() == s.step_count());
      double last = 0;
      for (const auto& sp : a.timeline[r]) {
        CHECK(sp.start <= sp.end);
        last = std::max(last, sp.end);
      }
      CHECK(a.completion[r] == last);
    }
  }

  TEST_CASE("time is non-increasing in rails, strictly iff a message is rendezvous") {
    auto t = two_groups();
    auto alloc = make_allocation(AllocationPolicy::block, 8, t);
    for (std::size_t n : {std::size_t{1024}, std::size_t{1} << 20}) {
      auto s = build_schedule(AlgorithmId::allreduce_ring, 8, n, 4);
      bool rendezvous = false;
      auto ct = cost_terms(s, 0);
      auto m = default_network_model();
      for (const auto& step : ct.step_messages)
        for (auto b : step) rendezvous |= b > m.eager_threshold;
      double prev = INFINITY;
      for (int rails = 1; rails <= 8; rails *= 2) {
        m.rails = rails;
        const double now = simulate(s, m, alloc, t).max_completion();
        if (rails > 1) {
          if (rendezvous)
            CHECK(now < prev);
          else
            CHECK(now == prev);
        }
        prev = now;
      }
    }
  }

  TEST_CASE("scaling the model scales every time") {
    auto t = two_groups();
    auto alloc = make_allocation(AllocationPolicy::block, 8, t);
    auto m = default_network_model();
    for (auto id : kAllAlgorithms) {
      auto s = build_schedule(id, 8, 8 * 1024, 4);
      const double base = simulate(s, m, alloc, t).max_completion();
      // A power-of-two factor keeps the comparison exact.
      CHECK(simulate(s, m.scaled(4), alloc, t).max_completion() == 4 * base);
      CHECK(simulate(s, m.scaled(3), alloc, t).max_completion() ==
            doctest::Approx(3 * base).epsilon(1e-12));
    }
  }

  TEST_CASE("modelled phases add up per rank") {
    auto m = dyadic();
    auto s = build_schedule(AlgorithmId::allreduce_rabenseifner, 8, 8 * 256, 4);
    auto sim = simulate(s, m);
    for (int r = 0; r < 8; ++r) {
      double sum = 0;
      for (auto ph : kAllPhases) {
        CHECK(sim.phases[r][index(ph)] >= 0);
        sum += sim.phases[r][index(ph)];
      }
      CHECK(sum == doctest::Approx(sim.completion[r]).epsilon(1e-12));
    }
  }

  TEST_CASE("throughput conventions") {
    CHECK(throughput(1ull << 30, 0, 1.0, ThroughputConvention::goodput) == 8.589934592e9);
    CHECK(throughput(4096, 6144, 1e-5, ThroughputConvention::bus_bandwidth) ==
          doctest::Approx(4.9152e9).epsilon(1e-12));
    CHECK_THROWS_AS(throughput(4096, 6144, 0, ThroughputConvention::goodput), Error);
    CHECK_THROWS_AS(throughput(4096, 6144, -1, ThroughputConvention::goodput), Error);
  }

  TEST_CASE("model parsing, overrides and validation") {
    auto m = parse_network_model(nlohmann::json::parse(R"({"alpha":1e-6,"beta":2e-9,"rails":4})"));
    CHECK(m.is_homogeneous());
    CHECK(m.link(LinkClass::inter_group).beta == 2e-9);
    CHECK(m.rails == 4);

    auto d = default_network_model();
    CHECK(parse_network_model(nlohmann::json::parse(to_json(d).dump())) == d);

    apply_override(d, "inter_group.beta", 5e-10);
    CHECK(d.link(LinkClass::inter_group).beta == 5e-10);
    apply_override(d, "rails", 4);
    CHECK(d.rails == 4);
    for (auto [key, value] : {std::pair{"rails", nlohmann::json(0)},
                              std::pair{"eager_threshold", nlohmann::json(-1)},
                              std::pair{"bogus", nlohmann::json(1)},
                              std::pair{"rails", nlohmann::json(1.5)}}) {
      auto copy = d;
      try {
        apply_override(copy, key, value);
        copy.validate();
        FAIL(key);
      } catch (const Error& e) {
        CHECK(e.code() == Errc::schema);
      }
    }

    auto bad = default_network_model();
    bad.gamma = -1;
    try {
      bad.validate();
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("gamma") != std::string::npos);
    }
  }

  TEST_CASE("latency ordering violations warn") {
    auto m = default_network_model();
    CHECK(m.warnings().empty());
    m.link(LinkClass::intra_node).alpha = 1;
    CHECK_FALSE(m.warnings().empty());
    CHECK_NOTHROW(m.validate());
  }
}
