#include "core/schedule.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace pico {

CollectiveKind collective_of(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::allreduce_ring:
    case AlgorithmId::allreduce_recursive_doubling:
    case AlgorithmId::allreduce_rabenseifner: return CollectiveKind::allreduce;
    case AlgorithmId::reduce_scatter_distance_halving:
    case AlgorithmId::reduce_scatter_distance_doubling:
    case AlgorithmId::reduce_scatter_ring: return CollectiveKind::reduce_scatter;
    case AlgorithmId::allgather_ring:
    case AlgorithmId::allgather_distance_doubling: return CollectiveKind::allgather;
    case AlgorithmId::alltoall_pairwise: break;
  }
  return CollectiveKind::alltoall;
}

std::string_view algorithm_name(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::allreduce_ring:
    case AlgorithmId::reduce_scatter_ring:
    case AlgorithmId::allgather_ring: return "ring";
    case AlgorithmId::allreduce_recursive_doubling: return "recursive_doubling";
    case AlgorithmId::allreduce_rabenseifner: return "rabenseifner";
    case AlgorithmId::reduce_scatter_distance_halving: return "distance_halving";
    case AlgorithmId::reduce_scatter_distance_doubling:
    case AlgorithmId::allgather_distance_doubling: return "distance_doubling";
    case AlgorithmId::alltoall_pairwise: break;
  }
  return "pairwise";
}

std::string qualified_name(AlgorithmId id) {
  return std::string(to_string(collective_of(id))) + "/" + std::string(algorithm_name(id));
}

std::optional<AlgorithmId> parse_algorithm(CollectiveKind kind, std::string_view name) {
  for (auto id : kAllAlgorithms)
    if (collective_of(id) == kind && algorithm_name(id) == name) return id;
  return std::nullopt;
}

std::vector<AlgorithmId> algorithms_for(CollectiveKind kind) {
  std::vector<AlgorithmId> out;
  for (auto id : kAllAlgorithms)
    if (collective_of(id) == kind) out.push_back(id);
  return out;
}

bool requires_power_of_two(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::allreduce_recursive_doubling:
    case AlgorithmId::allreduce_rabenseifner:
    case AlgorithmId::reduce_scatter_distance_halving:
    case AlgorithmId::reduce_scatter_distance_doubling:
    case AlgorithmId::allgather_distance_doubling: return true;
    default: return false;
  }
}

bool supports_ranks(AlgorithmId id, int p) {
  if (p < 2) return false;
  return !requires_power_of_two(id) || (p & (p - 1)) == 0;
}

std::string_view to_string(PhaseTag phase) {
  switch (phase) {
    case PhaseTag::alloc: return "alloc";
    case PhaseTag::copy: return "copy";
    case PhaseTag::reduction: return "reduction";
    case PhaseTag::communication: return "communication";
    case PhaseTag::sync: break;
  }
  return "sync";
}

std::optional<PhaseTag> parse_phase(std::string_view text) {
  for (auto ph : kAllPhases)
    if (to_string(ph) == text) return ph;
  return std::nullopt;
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::send: return "send";
    case ActionKind::recv: return "recv";
    case ActionKind::reduce: return "reduce";
    case ActionKind::copy: return "copy";
    case ActionKind::alloc: return "alloc";
    case ActionKind::sync: break;
  }
  return "sync";
}

PhaseTag phase_of(ActionKind kind) {
  switch (kind) {
    case ActionKind::send:
    case ActionKind::recv: return PhaseTag::communication;
    case ActionKind::reduce: return PhaseTag::reduction;
    case ActionKind::copy: return PhaseTag::copy;
    case ActionKind::alloc: return PhaseTag::alloc;
    case ActionKind::sync: break;
  }
  return PhaseTag::sync;
}

std::string to_string(const SegmentTag& tag) {
  return std::to_string(tag.step) + ":" + std::to_string(tag.src) + ":" + std::to_string(tag.dst);
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::unmatched_send: return "unmatched_send";
    case ViolationKind::unmatched_recv: return "unmatched_recv";
    case ViolationKind::peer_out_of_range: return "peer_out_of_range";
    case ViolationKind::self_peer: return "self_peer";
    case ViolationKind::empty_transfer: return "empty_transfer";
    case ViolationKind::step_count_mismatch: return "step_count_mismatch";
    case ViolationKind::duplicate_tag: return "duplicate_tag";
    case ViolationKind::bad_tag: return "bad_tag";
    case ViolationKind::region_out_of_bounds: break;
  }
  return "region_out_of_bounds";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(
      std::ranges::count_if(violations, [&](const Violation& v) { return v.kind == kind; }));
}

namespace {

struct Transfer {
  SegmentTag tag;
  std::size_t bytes;
  int rank;
  int step;
};

std::string where(int rank, int step) {
  return "rank " + std::to_string(rank) + " step " + std::to_string(step);
}

}  // namespace

ValidationReport validate_schedule(const Schedule& s) {
  ValidationReport report;
  auto add = [&](ViolationKind k, int rank, int step, std::string detail) {
    report.violations.push_back({k, rank, step, std::move(detail)});
  };

  const int p = s.ranks;
  if (static_cast<int>(s.programs.size()) != p) {
    add(ViolationKind::step_count_mismatch, -1, -1,
        "schedule has " + std::to_string(s.programs.size()) + " programs for p=" +
            std::to_string(p));
  }
  const std::size_t steps = s.step_count();
  std::map<SegmentTag, std::vector<Transfer>> sends, recvs;

  for (int r = 0; r < static_cast<int>(s.programs.size()); ++r) {
    const RankProgram& prog = s.programs[r];
    if (prog.steps.size() != steps)
      add(ViolationKind::step_count_mismatch, r, -1,
          "rank " + std::to_string(r) + " has " + std::to_string(prog.steps.size()) +
              " steps, rank 0 has " + std::to_string(steps));

    std::size_t scratch = 0;
    auto size_of = [&](BufferId b) {
      switch (b) {
        case BufferId::input: return prog.input_bytes;
        case BufferId::work: return s.work_bytes;
        case BufferId::scratch: break;
      }
      return scratch;
    };
    auto check_region = [&](const Region& reg, std::size_t bytes, int step, const char* what) {
      if (reg.offset + bytes > size_of(reg.buffer))
        add(ViolationKind::region_out_of_bounds, r, step,
            where(r, step) + ": " + what + " region [" + std::to_string(reg.offset) + ", " +
                std::to_string(reg.offset + bytes) + ") exceeds buffer of " +
                std::to_string(size_of(reg.buffer)) + " bytes");
    };

    std::set<SegmentTag> sent, received;
    for (int k = 0; k < static_cast<int>(prog.steps.size()); ++k) {
      for (const Action& a : prog.steps[k].actions) {
        switch (a.kind) {
          case ActionKind::send:
          case ActionKind::recv: {
            const bool is_send = a.kind == ActionKind::send;
            if (a.peer < 0 || a.peer >= p) {
              add(ViolationKind::peer_out_of_range, r, k,
                  where(r, k) + ": peer " + std::to_string(a.peer) + " outside [0," +
                      std::to_string(p) + ")");
              continue;
            }
            if (a.peer == r) {
              add(ViolationKind::self_peer, r, k, where(r, k) + ": transfer to itself");
              continue;
            }
            if (a.bytes == 0) add(ViolationKind::empty_transfer, r, k, where(r, k) + ": zero bytes");
            const SegmentTag expect = is_send ? SegmentTag{k, r, a.peer} : SegmentTag{k, a.peer, r};
            if (a.tag != expect)
              add(ViolationKind::bad_tag, r, k,
                  where(r, k) + ": tag " + to_string(a.tag) + " expected " + to_string(expect));
            auto& seen = is_send ? sent : received;
            if (!seen.insert(a.tag).second)
              add(ViolationKind::duplicate_tag, r, k,
                  where(r, k) + ": tag " + to_string(a.tag) + (is_send ? " sent" : " received") +
                      " twice");
            (is_send ? sends : recvs)[a.tag].push_back({a.tag, a.bytes, r, k});
            if (is_send)
              check_region(a.src, a.bytes, k, "send");
            else
              check_region(a.dst, a.bytes, k, "recv");
            break;
          }
          case ActionKind::reduce:
            if (s.element_width == 0 || a.bytes % s.element_width != 0)
              add(ViolationKind::region_out_of_bounds, r, k,
                  where(r, k) + ": reduce of partial elements");
            check_region(a.src, a.bytes, k, "reduce source");
            check_region(a.dst, a.bytes, k, "reduce target");
            break;
          case ActionKind::copy:
            check_region(a.src, a.bytes, k, "copy source");
            check_region(a.dst, a.bytes, k, "copy target");
            break;
          case ActionKind::alloc: scratch = a.bytes; break;
          case ActionKind::sync: break;
        }
      }
    }
    if (prog.output.offset + prog.output_bytes > size_of(prog.output.buffer))
      add(ViolationKind::region_out_of_bounds, r, -1, "rank " + std::to_string(r) +
                                                          ": output region out of bounds");
  }

  for (const auto& [tag, list] : sends) {
    auto it = recvs.find(tag);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Transfer& t = list[i];
      const bool matched =
          it != recvs.end() && i < it->second.size() && it->second[i].bytes == t.bytes &&
          it->second[i].step == t.step;
      if (!matched)
        add(ViolationKind::unmatched_send, t.rank, t.step,
            where(t.rank, t.step) + ": send " + to_string(tag) + " (" + std::to_string(t.bytes) +
                " B) has no matching recv");
    }
  }
  for (const auto& [tag, list] : recvs) {
    auto it = sends.find(tag);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Transfer& t = list[i];
      const bool matched =
          it != sends.end() && i < it->second.size() && it->second[i].bytes == t.bytes &&
          it->second[i].step == t.step;
      if (!matched)
        add(ViolationKind::unmatched_recv, t.rank, t.step,
            where(t.rank, t.step) + ": recv " + to_string(tag) + " (" + std::to_string(t.bytes) +
                " B) has no matching send");
    }
  }
  return report;
}

CostTerms cost_terms(const Schedule& s, int rank) {
  if (rank < 0 || rank >= static_cast<int>(s.programs.size()))
    fail(Errc::usage, "cost_terms: rank " + std::to_string(rank) + " out of range [0," +
                          std::to_string(s.programs.size()) + ")");
  const RankProgram& prog = s.programs[rank];
  CostTerms ct;
  ct.steps = prog.steps.size();
  ct.step_bytes_sent.assign(ct.steps, 0);
  ct.step_reduced_elements.assign(ct.steps, 0);
  ct.step_messages.assign(ct.steps, {});
  for (std::size_t k = 0; k < prog.steps.size(); ++k) {
    for (const Action& a : prog.steps[k].actions) {
      switch (a.kind) {
        case ActionKind::send:
          ct.bytes_sent += a.bytes;
          ct.step_bytes_sent[k] += a.bytes;
          ct.step_messages[k].push_back(a.bytes);
          break;
        case ActionKind::recv: ct.bytes_received += a.bytes; break;
        case ActionKind::reduce: {
          const std::size_t elems = a.bytes / s.element_width;
          ct.reduced_elements += elems;
          ct.step_reduced_elements[k] += elems;
          break;
        }
        case ActionKind::copy: ct.copy_bytes += a.bytes; break;
        case ActionKind::alloc: ++ct.allocations; break;
        case ActionKind::sync: break;
      }
    }
  }
  return ct;
}

std::string to_text(const Schedule& s) {
  std::ostringstream os;
  os << "# " << qualified_name(s.algorithm) << " p=" << s.ranks << " msg_bytes=" << s.msg_bytes
     << " element_width=" << s.element_width << "\n";
  for (int r = 0; r < static_cast<int>(s.programs.size()); ++r) {
    const auto& steps = s.programs[r].steps;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      for (const Action& a : steps[k].actions) {
        os << r << ' ' << k << ' ' << steps[k].label << ' ' << to_string(a.kind) << ' ';
        const bool transfer = a.kind == ActionKind::send || a.kind == ActionKind::recv;
        if (transfer)
          os << a.peer;
        else
          os << '-';
        os << ' ' << a.bytes << ' ';
        if (transfer)
          os << to_string(a.tag);
        else
          os << '-';
        os << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace pico
