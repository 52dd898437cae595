#include "core/fabric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

namespace pico {

namespace {

using Clock = std::chrono::steady_clock;

double ns(Clock::duration d) { return std::chrono::duration<double, std::nano>(d).count(); }

// Shared failure state; the first error wins and wakes every waiter.
struct AbortState {
  std::atomic<bool> aborted{false};
  std::mutex mu;
  std::optional<Error> error;

  void raise(const Error& e) {
    std::lock_guard lock(mu);
    if (!error) error = e;
    aborted = true;
  }
};

class Mailbox {
 public:
  void post(const SegmentTag& tag, std::vector<std::byte> payload) {
    {
      std::lock_guard lock(mu_);
      slots_.emplace(tag, std::move(payload));
    }
    cv_.notify_all();
  }

  std::optional<std::vector<std::byte>> take(const SegmentTag& tag, Clock::time_point deadline,
                                             const AbortState& abort) {
    std::unique_lock lock(mu_);
    for (;;) {
      if (auto it = slots_.find(tag); it != slots_.end()) {
        auto out = std::move(it->second);
        slots_.erase(it);
        return out;
      }
      if (abort.aborted) return std::nullopt;
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout && Clock::now() >= deadline) {
        if (auto it = slots_.find(tag); it != slots_.end()) continue;
        return std::nullopt;
      }
    }
  }

  void wake() { cv_.notify_all(); }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<SegmentTag, std::vector<std::byte>> slots_;
};

// Recycles message payloads so steady-state iterations do not go back to
// the allocator (large buffers would otherwise be mapped and unmapped on
// every send).
class PayloadPool {
 public:
  std::vector<std::byte> acquire(std::size_t bytes) {
    {
      std::lock_guard lock(mu_);
      auto& free = free_[bytes];
      if (!free.empty()) {
        auto out = std::move(free.back());
        free.pop_back();
        return out;
      }
    }
    return std::vector<std::byte>(bytes);
  }

  void release(std::vector<std::byte> payload) {
    std::lock_guard lock(mu_);
    free_[payload.size()].push_back(std::move(payload));
  }

 private:
  std::mutex mu_;
  std::map<std::size_t, std::vector<std::vector<std::byte>>> free_;
};

class Barrier {
 public:
  explicit Barrier(int parties) : parties_(parties) {}

  bool arrive_and_wait(Clock::time_point deadline, const AbortState& abort) {
    std::unique_lock lock(mu_);
    const std::uint64_t gen = generation_;
    if (++arrived_ == parties_) {
      arrived_ = 0;
      ++generation_;
      cv_.notify_all();
      return true;
    }
    while (gen == generation_) {
      if (abort.aborted) return false;
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout && gen == generation_)
        return false;
    }
    return true;
  }

  void wake() { cv_.notify_all(); }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int parties_;
  int arrived_ = 0;
  std::uint64_t generation_ = 0;
};

struct RankState {
  const std::byte* input = nullptr;
  std::vector<std::byte> work;
  std::unique_ptr<std::byte[]> scratch;
  Clock::time_point sync_start{};
  Clock::time_point step_start{};
  Clock::time_point last{};
  PhaseTimes phases{};
  std::vector<double> steps;
};

class Runner {
 public:
  Runner(const Schedule& s, const std::vector<RankVector>& inputs, ReduceOp op,
         const ExecuteOptions& opt)
      : s_(s),
        op_(op),
        type_(inputs.front().data.type()),
        opt_(opt),
        mail_(s.ranks),
        ranks_(s.ranks),
        workers_(worker_count(s, opt)),
        thread_barrier_(workers_),
        rank_barrier_(s.ranks) {
    for (int r = 0; r < s.ranks; ++r) {
      ranks_[r].input = inputs[r].data.bytes().data();
      ranks_[r].work.resize(s.work_bytes);
      ranks_[r].steps.assign(s.step_count(), 0.0);
    }
  }

  Execution run() {
    {
      std::vector<std::jthread> threads;
      threads.reserve(workers_);
      for (int t = 0; t < workers_; ++t) threads.emplace_back([this, t] { worker(t); });
    }
    if (abort_.error) throw *abort_.error;

    Execution out;
    out.measurements = std::move(measurements_);
    std::ranges::sort(out.measurements, [](const Measurement& a, const Measurement& b) {
      return std::tie(a.iteration, a.rank) < std::tie(b.iteration, b.rank);
    });
    const std::size_t w = width(type_);
    for (int r = 0; r < s_.ranks; ++r) {
      const RankProgram& prog = s_.programs[r];
      RankVector rv{r, Buffer(type_, prog.output_bytes / w)};
      std::memcpy(rv.data.bytes().data(), region(r, prog.output), prog.output_bytes);
      out.outputs.push_back(std::move(rv));
    }
    return out;
  }

 private:
  static bool schedule_has_sync(const Schedule& s) {
    for (const auto& prog : s.programs)
      for (const auto& step : prog.steps)
        for (const auto& a : step.actions)
          if (a.kind == ActionKind::sync) return true;
    return false;
  }

  static int worker_count(const Schedule& s, const ExecuteOptions& opt) {
    // In-schedule barriers need every rank on its own thread.
    if (opt.workers <= 0 || opt.workers >= s.ranks || schedule_has_sync(s)) return s.ranks;
    return opt.workers;
  }

  std::byte* region(int rank, const Region& reg) {
    RankState& st = ranks_[rank];
    switch (reg.buffer) {
      case BufferId::input: return const_cast<std::byte*>(st.input) + reg.offset;
      case BufferId::work: return st.work.data() + reg.offset;
      case BufferId::scratch: break;
    }
    return st.scratch.get() + reg.offset;
  }

  Clock::time_point deadline() const { return Clock::now() + opt_.timeout; }

  void worker(int t) {
    try {
      std::vector<int> owned;
      for (int r = t; r < s_.ranks; r += workers_) owned.push_back(r);
      const int total = opt_.warmup + opt_.iterations;
      const std::size_t steps = s_.step_count();
      for (int it = 0; it < total; ++it) {
        for (int r : owned) ranks_[r].sync_start = Clock::now();
        if (!thread_barrier_.arrive_and_wait(deadline(), abort_)) stall("iteration barrier", -1, it);
        const auto t0 = Clock::now();
        for (int r : owned) {
          RankState& st = ranks_[r];
          st.phases = {};
          st.phases[index(PhaseTag::sync)] = ns(t0 - st.sync_start);
          st.last = t0;
          st.scratch.reset();
        }
        for (std::size_t k = 0; k < steps; ++k) {
          // Everything before the first receive runs for all owned ranks
          // first, so a thread never blocks on a send it has yet to post.
          for (int r : owned) {
            ranks_[r].step_start = ranks_[r].last;
            run_actions(r, k, true);
          }
          for (int r : owned) {
            run_actions(r, k, false);
            ranks_[r].steps[k] = ns(ranks_[r].last - ranks_[r].step_start);
          }
        }
        if (it >= opt_.warmup) record(owned, it - opt_.warmup);
      }
    } catch (const Error& e) {
      abort_.raise(e);
      wake_all();
    } catch (const std::exception& e) {
      abort_.raise(Error(Errc::internal, e.what()));
      wake_all();
    }
  }

  void wake_all() {
    for (auto& m : mail_) m.wake();
    thread_barrier_.wake();
    rank_barrier_.wake();
  }

  [[noreturn]] void stall(const std::string& what, int rank, int step, const SegmentTag* tag = nullptr) {
    if (abort_.aborted) {
      std::lock_guard lock(abort_.mu);
      if (abort_.error) throw *abort_.error;
    }
    std::string msg = "deadlock: ";
    if (rank >= 0) msg += "rank " + std::to_string(rank) + " ";
    msg += "step " + std::to_string(step) + " timed out after " +
           std::to_string(opt_.timeout.count()) + " ms waiting on " + what;
    if (tag) msg += " tag " + to_string(*tag);
    throw Error(Errc::deadlock, msg);
  }

  void run_actions(int r, std::size_t k, bool before_first_recv) {
    const auto& actions = s_.programs[r].steps[k].actions;
    auto first_recv = std::ranges::find_if(
        actions, [](const Action& a) { return a.kind == ActionKind::recv; });
    auto begin = before_first_recv ? actions.begin() : first_recv;
    auto end = before_first_recv ? first_recv : actions.end();
    RankState& st = ranks_[r];
    for (auto it = begin; it != end; ++it) {
      perform(r, static_cast<int>(k), *it);
      const auto now = Clock::now();
      st.phases[index(it->phase())] += ns(now - st.last);
      st.last = now;
    }
  }

  void perform(int r, int k, const Action& a) {
    switch (a.kind) {
      case ActionKind::send: {
        auto payload = pool_.acquire(a.bytes);
        std::memcpy(payload.data(), region(r, a.src), a.bytes);
        mail_[a.peer].post(a.tag, std::move(payload));
        break;
      }
      case ActionKind::recv: {
        auto payload = mail_[r].take(a.tag, deadline(), abort_);
        if (!payload) stall("recv from rank " + std::to_string(a.peer), r, k, &a.tag);
        if (payload->size() != a.bytes)
          throw Error(Errc::internal, "rank " + std::to_string(r) + " tag " + to_string(a.tag) +
                                          ": size mismatch");
        std::memcpy(region(r, a.dst), payload->data(), a.bytes);
        pool_.release(std::move(*payload));
        break;
      }
      case ActionKind::reduce:
        reduce_into({region(r, a.dst), a.bytes}, {region(r, a.src), a.bytes}, type_, op_);
        break;
      case ActionKind::copy: std::memmove(region(r, a.dst), region(r, a.src), a.bytes); break;
      case ActionKind::alloc:
        ranks_[r].scratch = std::make_unique_for_overwrite<std::byte[]>(a.bytes);
        break;
      case ActionKind::sync:
        if (!rank_barrier_.arrive_and_wait(deadline(), abort_)) stall("schedule barrier", r, k);
        break;
    }
  }

  void record(const std::vector<int>& owned, int iteration) {
    std::vector<Measurement> local;
    for (int r : owned) {
      const RankState& st = ranks_[r];
      Measurement m;
      m.iteration = iteration;
      m.rank = r;
      double total = ns(st.last - st.sync_start);
      for (PhaseTag ph : opt_.instr.exclude_phases) total -= st.phases[index(ph)];
      m.total_ns = std::max(0.0, total);
      if (opt_.instr.time_phases) m.phase_ns = st.phases;
      if (opt_.instr.per_step) m.per_step_ns = st.steps;
      local.push_back(std::move(m));
    }
    std::lock_guard lock(results_mu_);
    for (auto& m : local) measurements_.push_back(std::move(m));
  }

  const Schedule& s_;
  ReduceOp op_;
  DataType type_;
  ExecuteOptions opt_;
  std::vector<Mailbox> mail_;
  PayloadPool pool_;
  std::vector<RankState> ranks_;
  int workers_;
  Barrier thread_barrier_;
  Barrier rank_barrier_;
  AbortState abort_;
  std::mutex results_mu_;
  std::vector<Measurement> measurements_;
};

}  // namespace

std::vector<RankVector> make_inputs(const Schedule& s, DataType type,
                                    std::optional<std::uint64_t> seed) {
  if (width(type) != s.element_width)
    fail(Errc::usage, "make_inputs: datatype width does not match the schedule");
  std::vector<RankVector> out;
  for (int r = 0; r < s.ranks; ++r) {
    const std::size_t elems = s.programs[r].input_bytes / s.element_width;
    RankVector rv{r, Buffer(type, elems)};
    if (!seed) {
      dispatch(type, [&](auto tag) {
        using T = decltype(tag);
        std::ranges::fill(rv.data.as<T>(), static_cast<T>(r + 1));
      });
    } else {
      std::mt19937_64 rng(*seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(r));
      dispatch(type, [&](auto tag) {
        using T = decltype(tag);
        if constexpr (std::is_integral_v<T>) {
          std::uniform_int_distribution<T> dist(-1000, 1000);
          for (auto& v : rv.data.as<T>()) v = dist(rng);
        } else {
          std::uniform_real_distribution<T> dist(-1.0, 1.0);
          for (auto& v : rv.data.as<T>()) v = dist(rng);
        }
      });
    }
    out.push_back(std::move(rv));
  }
  return out;
}

Execution execute(const Schedule& s, const std::vector<RankVector>& inputs, ReduceOp op,
                  const ExecuteOptions& options) {
  if (auto report = validate_schedule(s); !report.ok())
    fail(Errc::usage, "execute: invalid schedule: " + report.violations.front().detail);
  if (static_cast<int>(inputs.size()) != s.ranks)
    fail(Errc::usage, "execute: " + std::to_string(inputs.size()) + " inputs for p=" +
                          std::to_string(s.ranks));
  for (int r = 0; r < s.ranks; ++r) {
    const auto& in = inputs[r];
    if (in.data.type() != inputs.front().data.type() || width(in.data.type()) != s.element_width)
      fail(Errc::usage, "execute: input datatype mismatch at rank " + std::to_string(r));
    if (in.data.size_bytes() != s.programs[r].input_bytes)
      fail(Errc::usage, "execute: rank " + std::to_string(r) + " input has " +
                            std::to_string(in.data.size_bytes()) + " bytes, schedule expects " +
                            std::to_string(s.programs[r].input_bytes));
  }
  if (options.iterations < 1 || options.warmup < 0)
    fail(Errc::usage, "execute: iterations must be >= 1 and warmup >= 0");
  for (PhaseTag ph : options.instr.exclude_phases)
    if (!parse_phase(to_string(ph))) fail(Errc::usage, "execute: unknown excluded phase");
  return Runner(s, inputs, op, options).run();
}

VerificationReport verify(const std::vector<RankVector>& outputs,
                          const std::vector<RankVector>& expected, DataType type) {
  VerificationReport rep;
  auto mismatch = [&](int rank, std::size_t i, std::string msg) {
    rep.ok = false;
    rep.rank = rank;
    rep.index = i;
    rep.message = std::move(msg);
    return rep;
  };
  if (outputs.size() != expected.size())
    return mismatch(-1, 0, "rank count differs: " + std::to_string(outputs.size()) + " vs " +
                               std::to_string(expected.size()));
  const double tol = type == DataType::float64 ? 1e-12 : 1e-5;
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    const Buffer& got = outputs[r].data;
    const Buffer& want = expected[r].data;
    if (got.type() != type || want.type() != type)
      return mismatch(static_cast<int>(r), 0, "datatype differs");
    if (got.size() != want.size())
      return mismatch(static_cast<int>(r), 0, "length differs: " + std::to_string(got.size()) +
                                                  " vs " + std::to_string(want.size()));
    std::optional<std::size_t> bad = dispatch(type, [&](auto tag) -> std::optional<std::size_t> {
      using T = decltype(tag);
      auto a = got.as<T>();
      auto b = want.as<T>();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if constexpr (std::is_integral_v<T>) {
          if (a[i] != b[i]) return i;
        } else {
          const double x = a[i], y = b[i];
          const double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
          if (!(std::fabs(x - y) <= tol * scale)) return i;
        }
      }
      return std::nullopt;
    });
    if (bad)
      return mismatch(static_cast<int>(r), *bad,
                      "rank " + std::to_string(r) + " index " + std::to_string(*bad) + ": got " +
                          std::to_string(got.at(*bad)) + ", expected " +
                          std::to_string(want.at(*bad)));
  }
  return rep;
}

}  // namespace pico
