#include <doctest.h>

#include <algorithm>

#include "core/fabric.hpp"

using namespace pico;

namespace {

Execution run(const Schedule& s, DataType t, ReduceOp op, ExecuteOptions o = {}) {
  return execute(s, make_inputs(s, t), op, o);
}

ExecuteOptions quick(int iterations = 1, int warmup = 0) {
  ExecuteOptions o;
  o.iterations = iterations;
  o.warmup = warmup;
  return o;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

TEST_SUITE("fabric") {
  TEST_CASE("ring allreduce of rank values") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 4, 1024 * 4, 4);
    std::vector<RankVector> in;
    for (int r = 0; r < 4; ++r) {
      Buffer b(DataType::int32, 1024);
      for (std::size_t i = 0; i < 1024; ++i) b.set(i, r);
      in.push_back({r, std::move(b)});
    }
    auto ex = execute(s, in, ReduceOp::sum, quick());
    for (const auto& out : ex.outputs) {
      REQUIRE(out.data.size() == 1024);
      for (std::size_t i = 0; i < 1024; ++i) REQUIRE(out.data.at(i) == 6);
    }
  }

  TEST_CASE("default inputs are rank + 1") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 3, 3 * 8, 8);
    auto in = make_inputs(s, DataType::float64);
    for (int r = 0; r < 3; ++r)
      for (std::size_t i = 0; i < in[r].data.size(); ++i) CHECK(in[r].data.at(i) == r + 1);
  }

  TEST_CASE("measurement count is iterations times ranks") {
    auto s = build_schedule(AlgorithmId::allreduce_recursive_doubling, 4, 4096, 4);
    auto ex = run(s, DataType::int32, ReduceOp::sum, quick(5, 2));
    CHECK(ex.measurements.size() == 5u * 4);
    for (const auto& m : ex.measurements) {
      CHECK(m.iteration >= 0);
      CHECK(m.iteration < 5);
      CHECK(m.total_ns >= 0);
      double attributed = 0;
      for (auto ph : kAllPhases) {
        CHECK(m.phase_ns[index(ph)] >= 0);
        if (ph != PhaseTag::sync) attributed += m.phase_ns[index(ph)];
      }
      CHECK(attributed <= m.total_ns * (1 + 1e-9) + 1);
    }
  }

  TEST_CASE("every algorithm matches the oracle on float data") {
    for (auto id : kAllAlgorithms)
      for (int p : {2, 4, 8}) {
        auto s = build_schedule(id, p, 8ul * p * 4, 4);
        auto in = make_inputs(s, DataType::float32, 99);
        auto ex = execute(s, in, ReduceOp::sum, quick());
        auto rep = verify(ex.outputs, naive_oracle(collective_of(id), in, ReduceOp::sum),
                          DataType::float32);
        CHECK_MESSAGE(rep.ok, qualified_name(id), " p=", p, ": ", rep.message);
      }
  }

  TEST_CASE("max and min reductions") {
    for (auto op : {ReduceOp::max, ReduceOp::min}) {
      auto s = build_schedule(AlgorithmId::allreduce_rabenseifner, 8, 8 * 16 * 8, 8);
      auto in = make_inputs(s, DataType::int64, 5);
      auto ex = execute(s, in, op, quick());
      CHECK(verify(ex.outputs, naive_oracle(CollectiveKind::allreduce, in, op), DataType::int64)
                .ok);
    }
  }

  TEST_CASE("integer results are identical across repeats and worker counts") {
    auto s = build_schedule(AlgorithmId::allreduce_rabenseifner, 8, 8 * 64 * 4, 4);
    auto in = make_inputs(s, DataType::int32, 1234);
    auto first = execute(s, in, ReduceOp::sum, quick()).outputs;
    for (int rep = 0; rep < 10; ++rep) {
      auto o = quick();
      o.workers = 1 + rep % 4;
      CHECK(execute(s, in, ReduceOp::sum, o).outputs == first);
    }
  }

  TEST_CASE("deadlocked schedule times out naming rank and tag") {
    // Both ranks receive before they send.
    auto s = build_schedule(AlgorithmId::allreduce_recursive_doubling, 2, 64, 4);
    for (auto& prog : s.programs)
      for (auto& st : prog.steps)
        std::stable_partition(st.actions.begin(), st.actions.end(),
                              [](const Action& a) { return a.kind != ActionKind::send; });
    REQUIRE(validate_schedule(s).ok());
    auto o = quick();
    o.timeout = std::chrono::milliseconds(200);
    try {
      execute(s, make_inputs(s, DataType::int32), ReduceOp::sum, o);
      FAIL("no deadlock reported");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::deadlock);
      CHECK(std::string(e.what()).find("rank") != std::string::npos);
      CHECK(std::string(e.what()).find("tag") != std::string::npos);
    }
  }

  TEST_CASE("verify examples") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 2, 16, 4);
    auto a = make_inputs(s, DataType::int32);
    CHECK(verify(a, a, DataType::int32).ok);
    auto b = a;
    b[1].data.set(2, b[1].data.at(2) + 1);
    auto rep = verify(b, a, DataType::int32);
    CHECK_FALSE(rep.ok);
    CHECK(rep.rank == 1);
    CHECK(rep.index == 2);

    std::vector<RankVector> x{{0, Buffer::of(DataType::float64, {1.0, 2.0})}};
    std::vector<RankVector> y{{0, Buffer::of(DataType::float64, {1.0 + 1e-15, 2.0})}};
    CHECK(verify(x, y, DataType::float64).ok);
    std::vector<RankVector> z{{0, Buffer::of(DataType::float64, {1.001, 2.0})}};
    CHECK_FALSE(verify(x, z, DataType::float64).ok);
  }

  TEST_CASE("excluding reduction does not increase total time") {
    auto s = build_schedule(AlgorithmId::allreduce_recursive_doubling, 4, 1 << 18, 4);
    auto in = make_inputs(s, DataType::float32, 3);
    // One worker keeps thread preemption out of the comparison; alternating
    // the two settings (ABBA) cancels drift in allocator and cache state.
    auto incl = quick(10, 3);
    incl.workers = 1;
    auto excl = incl;
    excl.instr.exclude_phases.insert(PhaseTag::reduction);
    execute(s, in, ReduceOp::sum, incl);
    std::vector<double> a, b, red;
    for (int k = 0; k < 8; ++k) {
      const bool excluded = k % 4 == 1 || k % 4 == 2;
      for (const auto& m : execute(s, in, ReduceOp::sum, excluded ? excl : incl).measurements) {
        (excluded ? b : a).push_back(m.total_ns);
        if (!excluded) red.push_back(m.phase_ns[index(PhaseTag::reduction)]);
      }
    }
    CHECK(median(b) <= median(a));
    CHECK(median(a) - median(b) <= 3 * median(red));
  }

  TEST_CASE("per-step times track the phase totals") {
    auto s = build_schedule(AlgorithmId::allreduce_ring, 4, 1 << 18, 4);
    auto o = quick(3, 1);
    o.instr.per_step = true;
    auto ex = run(s, DataType::float32, ReduceOp::sum, o);
    for (const auto& m : ex.measurements) {
      REQUIRE(m.per_step_ns.size() == s.step_count());
      double steps = 0;
      for (double v : m.per_step_ns) steps += v;
      const double phases = m.phase_ns[index(PhaseTag::communication)] +
                            m.phase_ns[index(PhaseTag::reduction)] +
                            m.phase_ns[index(PhaseTag::copy)] + m.phase_ns[index(PhaseTag::alloc)];
      CHECK(steps >= phases * 0.95);
    }
  }

  TEST_CASE("every shipped schedule completes at p = 64") {
    for (auto id : kAllAlgorithms) {
      auto s = build_schedule(id, 64, 64 * 4 * 4, 4);
      auto o = quick();
      o.workers = 8;
      auto in = make_inputs(s, DataType::int32);
      auto ex = execute(s, in, ReduceOp::sum, o);
      CHECK(verify(ex.outputs, naive_oracle(collective_of(id), in, ReduceOp::sum), DataType::int32)
                .ok);
    }
  }
}
