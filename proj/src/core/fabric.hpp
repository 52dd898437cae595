#pragma once

// In-process message fabric: runs a Schedule over p logical ranks with real
// payloads and wall-clock phase accounting.

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/schedule.hpp"

namespace pico {

struct InstrumentationConfig {
  bool time_phases = true;
  // Executed but subtracted from total_ns.
  std::set<PhaseTag> exclude_phases{PhaseTag::sync};
  bool per_step = false;
};

struct Measurement {
  std::size_t point = 0;
  int iteration = 0;
  int rank = 0;
  double total_ns = 0;
  PhaseTimes phase_ns{};
  std::vector<double> per_step_ns;
};

struct ExecuteOptions {
  InstrumentationConfig instr;
  int iterations = 10;
  int warmup = 3;
  std::chrono::milliseconds timeout{10'000};
  // OS threads driving the logical ranks; 0 means one per rank.
  int workers = 0;
};

struct Execution {
  std::vector<RankVector> outputs;
  std::vector<Measurement> measurements;
};

// Rank r's buffer filled with r+1, or with seeded pseudo-random values
// that keep integer sums far from overflow.
std::vector<RankVector> make_inputs(const Schedule& s, DataType type,
                                    std::optional<std::uint64_t> seed = std::nullopt);

Execution execute(const Schedule& s, const std::vector<RankVector>& inputs, ReduceOp op,
                  const ExecuteOptions& options = {});

struct VerificationReport {
  bool ok = true;
  int rank = -1;
  std::size_t index = 0;
  std::string message;
};

// Exact for integers; relative tolerance 1e-12 (float64) or 1e-5 (float32).
VerificationReport verify(const std::vector<RankVector>& outputs,
                          const std::vector<RankVector>& expected, DataType type);

}  // namespace pico
