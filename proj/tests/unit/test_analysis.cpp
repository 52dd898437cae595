#include <doctest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "core/analysis.hpp"

using namespace pico;
using namespace pico::testing;

namespace {

constexpr auto kRing = AlgorithmId::allreduce_ring;
constexpr auto kRd = AlgorithmId::allreduce_recursive_doubling;
constexpr auto kRab = AlgorithmId::allreduce_rabenseifner;

// Three iterations around `t` whose median is exactly t.
void add(std::vector<Record>& out, AlgorithmId a, int p, std::size_t n, double t,
         int ranks_per_iteration = 2) {
  const double jitter[] = {t * 1.1, t, t * 0.9};
  for (int it = 0; it < 3; ++it)
    for (int r = 0; r < ranks_per_iteration; ++r) {
      Record rec;
      rec.collective = collective_of(a);
      rec.algorithm = a;
      rec.ranks = p;
      rec.msg_bytes = n;
      rec.iteration = it;
      rec.rank = r;
      // rank 0 is the slowest
      rec.time_ns = r == 0 ? jitter[it] : jitter[it] / 2;
      out.push_back(rec);
    }
}

Record with_phases(AlgorithmId a, std::size_t n, double total, PhaseTimes ph) {
  Record r;
  r.collective = collective_of(a);
  r.algorithm = a;
  r.ranks = 4;
  r.msg_bytes = n;
  r.iteration = 0;
  r.rank = 0;
  r.time_ns = total;
  r.phases = ph;
  return r;
}

RecordTable netsim_sweep(const fs::path& root, const NetworkModel& m,
                         std::vector<AlgorithmId> algs, SizeRange sizes, std::vector<int> ranks) {
  auto env = make_env(root, "desk", m);
  auto t = make_test(CollectiveKind::allreduce, std::move(algs), std::move(ranks), sizes,
                     Backend::netsim);
  auto s = run(plan_runs(env, t), env, t);
  REQUIRE(s.failed() == 0);
  return aggregate(s.index);
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("median of the slowest rank per iteration") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 100);
    auto m = median_times(recs);
    CHECK(m.at({CollectiveKind::allreduce, 4, 1024}).at(kRing) == 100);
  }

  TEST_CASE("gain cell definitions") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 2.0);
    add(recs, kRd, 4, 1024, 1.0);
    add(recs, kRab, 4, 1024, 3.0);
    add(recs, kRing, 4, 2048, 1.0);
    add(recs, kRd, 4, 2048, 1.5);
    add(recs, kRab, 4, 2048, 2.0);
    auto g = gain_matrix(recs, kRing);
    REQUIRE(g.ranks == std::vector<int>{4});
    REQUIRE(g.sizes == std::vector<std::size_t>{1024, 2048});
    CHECK(g.cells[0][0] == doctest::Approx(0.5));
    CHECK(g.against[0][0] == kRd);
    CHECK(g.cells[0][1] == doctest::Approx(1.5));
  }

  TEST_CASE("ties give one") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 7);
    add(recs, kRd, 4, 1024, 7);
    CHECK(gain_matrix(recs, kRing).cells[0][0] == 1.0);
  }

  TEST_CASE("reference alone is all missing") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 7);
    add(recs, kRing, 8, 2048, 7);
    auto g = gain_matrix(recs, kRing);
    CHECK(g.cells.size() == 2);
    for (const auto& row : g.cells)
      for (const auto& c : row) CHECK_FALSE(c.has_value());
  }

  TEST_CASE("summary records stand in when nothing finer exists") {
    std::vector<Record> recs;
    Record r;
    r.algorithm = kRing;
    r.ranks = 4;
    r.msg_bytes = 64;
    r.time_ns = 42;
    r.aggregate = true;
    r.source = Granularity::summary;
    recs.push_back(r);
    CHECK(median_times(recs).at({CollectiveKind::allreduce, 4, 64}).at(kRing) == 42);
  }

  TEST_CASE("equal phases give four equal fractions") {
    PhaseTimes ph{};
    for (auto t : kBreakdownPhases) ph[index(t)] = 25;
    ph[index(PhaseTag::sync)] = 1000;
    auto f = phase_breakdown({with_phases(kRing, 1024, 100, ph)});
    REQUIRE(f.size() == 1);
    for (double v : f[0].fractions) CHECK(v == doctest::Approx(0.25));
    CHECK(f[0].residual == doctest::Approx(0));
  }

  TEST_CASE("fractions never exceed one") {
    PhaseTimes ph{};
    ph[index(PhaseTag::communication)] = 80;
    ph[index(PhaseTag::reduction)] = 40;
    auto f = phase_breakdown({with_phases(kRing, 1024, 100, ph)});
    double sum = f[0].residual;
    for (double v : f[0].fractions) sum += v;
    CHECK(sum == doctest::Approx(1));
    CHECK(f[0].fractions[3] == doctest::Approx(80.0 / 120));

    PhaseTimes part{};
    part[index(PhaseTag::communication)] = 60;
    auto g = phase_breakdown({with_phases(kRing, 1024, 100, part)});
    CHECK(g[0].residual == doctest::Approx(0.4));
  }

  TEST_CASE("missing phase columns are an error") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 7);
    try {
      phase_breakdown(recs);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::usage);
    }
  }

  TEST_CASE("netsim records with copy_beta 0 have no copy fraction") {
    TempDir dir("an_copy");
    auto m = NetworkModel::uniform(1e-6, 1e-9, 1e-9);
    m.alloc_alpha = 1e-6;
    auto t = netsim_sweep(dir.path(), m, {kRing, kRab}, {1024, 65536, 4}, {4});
    auto f = phase_breakdown(t.records);
    REQUIRE_FALSE(f.empty());
    for (const auto& pf : f) CHECK(pf.fractions[1] == 0);
  }

  TEST_CASE("copy and alloc share grows with size") {
    TempDir dir("an_grow");
    auto m = NetworkModel::uniform(1e-5, 1e-10, 1e-10);
    m.copy_beta = 5e-11;
    m.alloc_alpha = 2e-6;
    auto t = netsim_sweep(dir.path(), m, {kRab}, {1024, 1 << 22, 4}, {8});
    auto f = phase_breakdown(t.records);
    double prev = -1;
    for (const auto& pf : f) {
      const double share = pf.fractions[0] + pf.fractions[1];
      CHECK(share >= prev - 1e-12);
      prev = share;
    }
  }

  TEST_CASE("aggregate loads ok runs and skips alloc.csv") {
    TempDir dir("an_agg");
    auto t = netsim_sweep(dir.path(), default_network_model(), {kRing, kRd}, {1024, 2048, 2}, {4});
    // 2 algorithms x 2 sizes x 3 iterations x 4 ranks
    CHECK(t.records.size() == 48);
    CHECK(t.files == 4);
    CHECK(t.skipped_rows == 0);
    CHECK(aggregate({}, dir.path()).records.empty());
  }

  TEST_CASE("corrupted rows are skipped and counted") {
    TempDir dir("an_bad");
    auto env = make_env(dir.path());
    auto test = make_test(CollectiveKind::allreduce, {kRing}, {4}, {1024, 1024, 2}, Backend::netsim);
    auto s = run(plan_runs(env, test), env, test);
    const auto file = s.runs[0].path / "allreduce_ring_1024.csv";
    std::ofstream(file, std::ios::app) << "allreduce,ring,4,1024,default,0\n"
                                       << "allreduce,ring,4,1024,default,x,0,1,1,1,1,1,1\n";
    auto t = aggregate(s.index);
    CHECK(t.records.size() == 12);
    CHECK(t.skipped_rows == 2);
  }

  TEST_CASE("variants stay distinct") {
    TempDir dir("an_var");
    auto env = make_env(dir.path());
    TestDescriptorBuilder b;
    REQUIRE(b.set("algorithms", "ring").empty());
    REQUIRE(b.set("sizes", "1MiB:1MiB:2").empty());
    REQUIRE(b.set("backend", "netsim").empty());
    REQUIRE(b.add_sweep("rails=2,4").empty());
    auto s = run(plan_runs(env, b.config()), env, b.config());
    auto t = aggregate(s.index);
    std::set<std::string> variants;
    for (const auto& r : t.records) variants.insert(r.variant);
    CHECK(variants == std::set<std::string>{"rails=2", "rails=4"});
  }

  TEST_CASE("tuning table rules") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 5);
    add(recs, kRing, 4, 2048, 5);
    add(recs, kRing, 8, 1024, 5);
    auto only = emit_tuning_table(recs);
    REQUIRE(only.rules.size() == 2);
    CHECK(only.rules[0] == TuningRule{CollectiveKind::allreduce, 4, 7, 1024, 2048, kRing});
    CHECK(only.rules[1] == TuningRule{CollectiveKind::allreduce, 8, 8, 1024, 2048, kRing});
    CHECK(only.lookup(CollectiveKind::allreduce, 6, 1500) == kRing);
    CHECK_FALSE(only.lookup(CollectiveKind::allreduce, 9, 1500));

    std::vector<Record> tie;
    add(tie, kRing, 8, 1024, 5);
    add(tie, kRd, 8, 1024, 5);
    add(tie, kRab, 8, 1024, 5);
    CHECK(emit_tuning_table(tie).rules.at(0).algorithm == kRd);
  }

  TEST_CASE("tuning text round-trips") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 5);
    add(recs, kRd, 4, 1024, 3);
    add(recs, kRing, 4, 4096, 3);
    add(recs, kRd, 4, 4096, 5);
    auto t = emit_tuning_table(recs);
    CHECK(t.to_text() ==
          "# collective ranks_min ranks_max bytes_min bytes_max algorithm\n"
          "allreduce 4 4 1024 4095 recursive_doubling\n"
          "allreduce 4 4 4096 4096 ring\n");
    CHECK(parse_tuning_table(t.to_text()).rules == t.rules);
    CHECK_THROWS_AS(parse_tuning_table("allreduce 4 4 1 2\n"), Error);
    CHECK_THROWS_AS(parse_tuning_table("allreduce 4 4 1 2 pairwise\n"), Error);
  }

  TEST_CASE("tuning is invariant under uniform scaling") {
    std::vector<Record> recs;
    add(recs, kRing, 4, 1024, 5);
    add(recs, kRd, 4, 1024, 3);
    add(recs, kRab, 4, 4096, 2);
    add(recs, kRd, 4, 4096, 5);
    auto scaled = recs;
    for (auto& r : scaled) r.time_ns *= 37.5;
    CHECK(emit_tuning_table(recs).rules == emit_tuning_table(scaled).rules);
  }

  TEST_CASE("latency-bound model selects the fewest steps") {
    TempDir dir("an_tune");
    auto m = NetworkModel::uniform(1e-4, 1e-12, 1e-13);
    auto t = netsim_sweep(dir.path(), m, {kRing, kRd, kRab}, {1024, 8192, 2}, {8});
    auto table = emit_tuning_table(t.records);
    for (std::size_t n : {1024u, 2048u, 4096u, 8192u})
      CHECK(table.lookup(CollectiveKind::allreduce, 8, n) == kRd);
  }

  TEST_CASE("ring wins only at the largest sizes and the gain shows it") {
    TempDir dir("an_gain");
    auto m = NetworkModel::uniform(1e-5, 1e-9, 0);
    auto t = netsim_sweep(dir.path(), m, {kRing, kRd}, {1024, 1 << 22, 4}, {8});
    auto g = gain_matrix(t.records, kRing);
    for (std::size_t j = 0; j < g.sizes.size(); ++j) {
      const double ring = predict_closed_form(kRing, 8, g.sizes[j], 4, m);
      const double rd = predict_closed_form(kRd, 8, g.sizes[j], 4, m);
      REQUIRE(g.cells[0][j]);
      CHECK((*g.cells[0][j] >= 1) == (ring <= rd));
    }
    CHECK(*g.cells[0].front() < 1);
    CHECK(*g.cells[0].back() >= 1);
  }
}
