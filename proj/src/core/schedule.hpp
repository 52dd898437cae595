#pragma once

// Explicit per-rank schedules. A Schedule is the single description of a
// collective algorithm consumed by the in-process fabric, the virtual-time
// simulator and the traffic tracer.

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/model.hpp"

namespace pico {

enum class AlgorithmId {
  allreduce_ring,
  allreduce_recursive_doubling,
  allreduce_rabenseifner,
  reduce_scatter_distance_halving,
  reduce_scatter_distance_doubling,
  reduce_scatter_ring,
  allgather_ring,
  allgather_distance_doubling,
  alltoall_pairwise,
};

inline constexpr AlgorithmId kAllAlgorithms[] = {
    AlgorithmId::allreduce_ring,
    AlgorithmId::allreduce_recursive_doubling,
    AlgorithmId::allreduce_rabenseifner,
    AlgorithmId::reduce_scatter_distance_halving,
    AlgorithmId::reduce_scatter_distance_doubling,
    AlgorithmId::reduce_scatter_ring,
    AlgorithmId::allgather_ring,
    AlgorithmId::allgather_distance_doubling,
    AlgorithmId::alltoall_pairwise,
};

CollectiveKind collective_of(AlgorithmId id);
// Short name within its collective, e.g. "ring" or "distance_halving".
std::string_view algorithm_name(AlgorithmId id);
// "allreduce/ring"
std::string qualified_name(AlgorithmId id);
std::optional<AlgorithmId> parse_algorithm(CollectiveKind kind, std::string_view name);
std::vector<AlgorithmId> algorithms_for(CollectiveKind kind);
bool requires_power_of_two(AlgorithmId id);
bool supports_ranks(AlgorithmId id, int p);

enum class PhaseTag { alloc, copy, reduction, communication, sync };
inline constexpr std::size_t kPhaseCount = 5;
inline constexpr PhaseTag kAllPhases[] = {PhaseTag::alloc, PhaseTag::copy, PhaseTag::reduction,
                                          PhaseTag::communication, PhaseTag::sync};
std::string_view to_string(PhaseTag phase);
std::optional<PhaseTag> parse_phase(std::string_view text);
using PhaseTimes = std::array<double, kPhaseCount>;
constexpr std::size_t index(PhaseTag phase) { return static_cast<std::size_t>(phase); }

enum class ActionKind { send, recv, reduce, copy, alloc, sync };
std::string_view to_string(ActionKind kind);
PhaseTag phase_of(ActionKind kind);

// Per-rank storage an action reads or writes. `input` is the caller's send
// buffer, `work` holds the result, `scratch` is created by an Alloc action.
enum class BufferId { input, work, scratch };

struct Region {
  BufferId buffer = BufferId::work;
  std::size_t offset = 0;

  friend bool operator==(const Region&, const Region&) = default;
};

struct SegmentTag {
  int step = 0;
  int src = 0;
  int dst = 0;

  friend auto operator<=>(const SegmentTag&, const SegmentTag&) = default;
};

std::string to_string(const SegmentTag& tag);

// send:   work/input[src, +bytes)        -> peer
// recv:   peer -> dst[+bytes)
// reduce: dst[+bytes] = op(dst, src) elementwise
// copy:   dst[+bytes] = src[+bytes]
// alloc:  create the scratch buffer with `bytes` bytes
// sync:   barrier across all ranks
struct Action {
  ActionKind kind = ActionKind::sync;
  int peer = -1;
  std::size_t bytes = 0;
  SegmentTag tag{};
  Region src{};
  Region dst{};

  PhaseTag phase() const { return phase_of(kind); }
};

struct Step {
  std::string label;
  std::vector<Action> actions;
};

struct RankProgram {
  std::vector<Step> steps;
  std::size_t input_bytes = 0;
  Region output{};
  std::size_t output_bytes = 0;
};

struct Schedule {
  AlgorithmId algorithm = AlgorithmId::allreduce_ring;
  int ranks = 0;
  std::size_t msg_bytes = 0;
  std::size_t element_width = 0;
  std::size_t work_bytes = 0;
  std::vector<RankProgram> programs;

  CollectiveKind collective() const { return collective_of(algorithm); }
  std::size_t step_count() const { return programs.empty() ? 0 : programs.front().steps.size(); }
};

// msg_bytes is the full vector size n for every collective: the reduced
// vector for allreduce, the reduce-scatter input, the gathered output of
// allgather (each rank contributes n/p), and the alltoall send buffer.
Schedule build_schedule(AlgorithmId id, int ranks, std::size_t msg_bytes,
                        std::size_t element_width);

enum class ViolationKind {
  unmatched_send,
  unmatched_recv,
  peer_out_of_range,
  self_peer,
  empty_transfer,
  step_count_mismatch,
  duplicate_tag,
  bad_tag,
  region_out_of_bounds,
};
std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int rank = -1;
  int step = -1;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
};

ValidationReport validate_schedule(const Schedule& s);

struct CostTerms {
  std::size_t steps = 0;                // A
  std::size_t bytes_sent = 0;           // B
  std::size_t reduced_elements = 0;     // C
  std::size_t bytes_received = 0;
  std::size_t copy_bytes = 0;
  std::size_t allocations = 0;
  std::vector<std::size_t> step_bytes_sent;
  std::vector<std::size_t> step_reduced_elements;
  // Size of every message sent, per step; used for eager/rendezvous splits.
  std::vector<std::vector<std::size_t>> step_messages;

  friend bool operator==(const CostTerms&, const CostTerms&) = default;
};

CostTerms cost_terms(const Schedule& s, int rank);

// One line per action: `rank step phase action peer bytes tag`.
std::string to_text(const Schedule& s);

}  // namespace pico
