#include <bit>
#include <string>

#include "core/schedule.hpp"

namespace pico {

namespace {

constexpr const char* kReduceScatter = "reduce-scatter";
constexpr const char* kAllgather = "allgather";
constexpr const char* kExchange = "exchange";

int log2_exact(int p) { return std::countr_zero(static_cast<unsigned>(p)); }

int wrap(int x, int p) { return ((x % p) + p) % p; }

// Reverses the low `bits` bits of x.
int bit_reverse(int x, int bits) {
  int out = 0;
  for (int i = 0; i < bits; ++i)
    if (x & (1 << i)) out |= 1 << (bits - 1 - i);
  return out;
}

class Builder {
 public:
  Builder(AlgorithmId id, int p, std::size_t n, std::size_t w, int steps) {
    s_.algorithm = id;
    s_.ranks = p;
    s_.msg_bytes = n;
    s_.element_width = w;
    s_.programs.resize(p);
    for (auto& prog : s_.programs) prog.steps.resize(steps);
  }

  Schedule& schedule() { return s_; }

  void label(int step, const char* text) {
    for (auto& prog : s_.programs) prog.steps[step].label = text;
  }

  void alloc(int rank, int step, std::size_t bytes) {
    push(rank, step, {.kind = ActionKind::alloc, .bytes = bytes});
  }

  void copy(int rank, int step, Region from, Region to, std::size_t bytes) {
    push(rank, step, {.kind = ActionKind::copy, .bytes = bytes, .src = from, .dst = to});
  }

  // Posts the send to `to` before the blocking receive from `from`.
  void exchange(int rank, int step, int to, Region send_from, int from, Region recv_into,
                std::size_t bytes) {
    push(rank, step,
         {.kind = ActionKind::send, .peer = to, .bytes = bytes, .tag = {step, rank, to},
          .src = send_from});
    push(rank, step,
         {.kind = ActionKind::recv, .peer = from, .bytes = bytes, .tag = {step, from, rank},
          .dst = recv_into});
  }

  void reduce(int rank, int step, Region from, Region into, std::size_t bytes) {
    push(rank, step, {.kind = ActionKind::reduce, .bytes = bytes, .src = from, .dst = into});
  }

 private:
  void push(int rank, int step, Action a) { s_.programs[rank].steps[step].actions.push_back(a); }

  Schedule s_;
};

Region work(std::size_t offset) { return {BufferId::work, offset}; }
Region input(std::size_t offset) { return {BufferId::input, offset}; }
Region scratch(std::size_t offset = 0) { return {BufferId::scratch, offset}; }

// Ring reduce-scatter leaving rank r with the reduction of block r.
// Step k sends block r-k-1 to the right neighbour and folds block r-k-2
// received from the left.
void ring_reduce_scatter(Builder& b, int p, std::size_t block, int first_step) {
  for (int k = 0; k < p - 1; ++k) {
    const int step = first_step + k;
    b.label(step, kReduceScatter);
    for (int r = 0; r < p; ++r) {
      b.exchange(r, step, wrap(r + 1, p), work(wrap(r - k - 1, p) * block), wrap(r - 1, p),
                 scratch(), block);
      b.reduce(r, step, scratch(), work(wrap(r - k - 2, p) * block), block);
    }
  }
}

// Ring allgather from rank r owning block r.
void ring_allgather(Builder& b, int p, std::size_t block, int first_step) {
  for (int k = 0; k < p - 1; ++k) {
    const int step = first_step + k;
    b.label(step, kAllgather);
    for (int r = 0; r < p; ++r)
      b.exchange(r, step, wrap(r + 1, p), work(wrap(r - k, p) * block), wrap(r - 1, p),
                 work(wrap(r - k - 1, p) * block), block);
  }
}

// Recursive halving over block positions. At step i rank r pairs with
// r ^ partner_bit(i), keeps the half of its current window selected by
// keep_upper(r, i) and ships the other half.
template <class PartnerBit, class KeepUpper>
void halving_reduce_scatter(Builder& b, int p, std::size_t block, PartnerBit partner_bit,
                            KeepUpper keep_upper) {
  const int levels = log2_exact(p);
  for (int r = 0; r < p; ++r) {
    int lo = 0;
    int count = p;
    for (int i = 0; i < levels; ++i) {
      const int half = count / 2;
      const bool upper = keep_upper(r, i);
      const int keep_lo = upper ? lo + half : lo;
      const int send_lo = upper ? lo : lo + half;
      const std::size_t bytes = static_cast<std::size_t>(half) * block;
      b.exchange(r, i, r ^ partner_bit(i), work(send_lo * block), r ^ partner_bit(i), scratch(),
                 bytes);
      b.reduce(r, i, scratch(), work(keep_lo * block), bytes);
      lo = keep_lo;
      count = half;
    }
  }
  for (int i = 0; i < levels; ++i) b.label(i, kReduceScatter);
}

// Recursive doubling allgather where rank r starts owning block r.
void doubling_allgather(Builder& b, int p, std::size_t block, int first_step) {
  const int levels = log2_exact(p);
  for (int i = 0; i < levels; ++i) {
    const int step = first_step + i;
    const int span = 1 << i;
    b.label(step, kAllgather);
    for (int r = 0; r < p; ++r) {
      const int peer = r ^ span;
      const int mine = (r >> i) << i;
      const int theirs = (peer >> i) << i;
      b.exchange(r, step, peer, work(mine * block), peer, work(theirs * block), span * block);
    }
  }
}

void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace

Schedule build_schedule(AlgorithmId id, int p, std::size_t n, std::size_t w) {
  const std::string name = qualified_name(id);
  require(w == 4 || w == 8, Errc::usage, name + ": element width must be 4 or 8 bytes");
  require(supports_ranks(id, p), Errc::unsupported,
          "algorithm unsupported for p: " + name + " with p=" + std::to_string(p) +
              (requires_power_of_two(id) ? " (needs a power of two >= 2)" : " (needs p >= 2)"));
  require(n > 0 && n % w == 0, Errc::usage,
          name + ": msg_bytes=" + std::to_string(n) + " must be a positive multiple of " +
              std::to_string(w));
  const bool blocks = id != AlgorithmId::allreduce_recursive_doubling;
  const std::size_t up = static_cast<std::size_t>(p);
  require(!blocks || n % (up * w) == 0, Errc::usage,
          name + ": msg_bytes=" + std::to_string(n) + " must be divisible by p*width=" +
              std::to_string(up * w));

  const std::size_t block = n / up;
  const int levels = log2_exact(p);

  switch (id) {
    case AlgorithmId::allreduce_ring: {
      Builder b(id, p, n, w, 2 * (p - 1));
      for (int r = 0; r < p; ++r) {
        b.alloc(r, 0, block);
        b.copy(r, 0, input(0), work(0), n);
      }
      ring_reduce_scatter(b, p, block, 0);
      ring_allgather(b, p, block, p - 1);
      auto& s = b.schedule();
      s.work_bytes = n;
      for (auto& prog : s.programs) prog = {std::move(prog.steps), n, work(0), n};
      return s;
    }
    case AlgorithmId::allreduce_recursive_doubling: {
      Builder b(id, p, n, w, levels);
      for (int i = 0; i < levels; ++i) {
        b.label(i, kExchange);
        for (int r = 0; r < p; ++r) {
          if (i == 0) {
            b.alloc(r, 0, n);
            b.copy(r, 0, input(0), work(0), n);
          }
          const int peer = r ^ (1 << i);
          b.exchange(r, i, peer, work(0), peer, scratch(), n);
          b.reduce(r, i, scratch(), work(0), n);
        }
      }
      auto& s = b.schedule();
      s.work_bytes = n;
      for (auto& prog : s.programs) prog = {std::move(prog.steps), n, work(0), n};
      return s;
    }
    case AlgorithmId::allreduce_rabenseifner:
    case AlgorithmId::reduce_scatter_distance_halving: {
      const bool allreduce = id == AlgorithmId::allreduce_rabenseifner;
      Builder b(id, p, n, w, allreduce ? 2 * levels : levels);
      for (int r = 0; r < p; ++r) {
        b.alloc(r, 0, n / 2);
        b.copy(r, 0, input(0), work(0), n);
      }
      halving_reduce_scatter(
          b, p, block, [p](int i) { return p >> (i + 1); },
          [p](int r, int i) { return (r & (p >> (i + 1))) != 0; });
      if (allreduce) doubling_allgather(b, p, block, levels);
      auto& s = b.schedule();
      s.work_bytes = n;
      for (int r = 0; r < p; ++r) {
        auto& prog = s.programs[r];
        if (allreduce)
          prog = {std::move(prog.steps), n, work(0), n};
        else
          prog = {std::move(prog.steps), n, work(r * block), block};
      }
      return s;
    }
    case AlgorithmId::reduce_scatter_distance_doubling: {
      // Blocks live at bit-reversed positions so that splitting on rank bit
      // i (partner distance 2^i) always ships a contiguous half.
      Builder b(id, p, n, w, levels);
      for (int r = 0; r < p; ++r) {
        b.alloc(r, 0, n / 2);
        for (int j = 0; j < p; ++j)
          b.copy(r, 0, input(j * block), work(bit_reverse(j, levels) * block), block);
      }
      halving_reduce_scatter(
          b, p, block, [](int i) { return 1 << i; },
          [](int r, int i) { return ((r >> i) & 1) != 0; });
      auto& s = b.schedule();
      s.work_bytes = n;
      for (int r = 0; r < p; ++r) {
        auto& prog = s.programs[r];
        prog = {std::move(prog.steps), n, work(bit_reverse(r, levels) * block), block};
      }
      return s;
    }
    case AlgorithmId::reduce_scatter_ring: {
      Builder b(id, p, n, w, p - 1);
      for (int r = 0; r < p; ++r) {
        b.alloc(r, 0, block);
        b.copy(r, 0, input(0), work(0), n);
      }
      ring_reduce_scatter(b, p, block, 0);
      auto& s = b.schedule();
      s.work_bytes = n;
      for (int r = 0; r < p; ++r) {
        auto& prog = s.programs[r];
        prog = {std::move(prog.steps), n, work(r * block), block};
      }
      return s;
    }
    case AlgorithmId::allgather_ring:
    case AlgorithmId::allgather_distance_doubling: {
      const bool ring = id == AlgorithmId::allgather_ring;
      Builder b(id, p, n, w, ring ? p - 1 : levels);
      for (int r = 0; r < p; ++r) b.copy(r, 0, input(0), work(r * block), block);
      if (ring)
        ring_allgather(b, p, block, 0);
      else
        doubling_allgather(b, p, block, 0);
      auto& s = b.schedule();
      s.work_bytes = n;
      for (auto& prog : s.programs) prog = {std::move(prog.steps), block, work(0), n};
      return s;
    }
    case AlgorithmId::alltoall_pairwise: {
      const bool pow2 = (p & (p - 1)) == 0;
      Builder b(id, p, n, w, p - 1);
      for (int r = 0; r < p; ++r) b.copy(r, 0, input(r * block), work(r * block), block);
      for (int i = 1; i < p; ++i) {
        const int step = i - 1;
        b.label(step, kExchange);
        for (int r = 0; r < p; ++r) {
          const int to = pow2 ? (r ^ i) : wrap(r + i, p);
          const int from = pow2 ? (r ^ i) : wrap(r - i, p);
          b.exchange(r, step, to, input(to * block), from, work(from * block), block);
        }
      }
      auto& s = b.schedule();
      s.work_bytes = n;
      for (auto& prog : s.programs) prog = {std::move(prog.steps), n, work(0), n};
      return s;
    }
  }
  fail(Errc::internal, "unknown algorithm");
}

}  // namespace pico
