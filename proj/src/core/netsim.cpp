#include "core/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pico {

NetworkModel NetworkModel::uniform(double alpha, double beta, double gamma) {
  NetworkModel m;
  m.links.fill({alpha, beta});
  m.gamma = gamma;
  return m;
}

NetworkModel NetworkModel::scaled(double k) const {
  NetworkModel m = *this;
  for (auto& l : m.links) l = {l.alpha * k, l.beta * k};
  m.gamma *= k;
  m.copy_beta *= k;
  m.alloc_alpha *= k;
  return m;
}

void NetworkModel::validate() const {
  auto nonneg = [](double v, const std::string& field) {
    if (!(v >= 0) || !std::isfinite(v))
      fail(Errc::schema, field + ": must be a finite value >= 0");
  };
  for (LinkClass c : kAllLinkClasses) {
    const std::string name(to_string(c));
    nonneg(link(c).alpha, name + ".alpha");
    nonneg(link(c).beta, name + ".beta");
  }
  nonneg(gamma, "gamma");
  nonneg(copy_beta, "copy_beta");
  nonneg(alloc_alpha, "alloc_alpha");
  if (rails < 1) fail(Errc::schema, "rails: must be >= 1");
}

std::vector<std::string> NetworkModel::warnings() const {
  std::vector<std::string> out;
  const auto& a = links;
  if (a[0].alpha > a[1].alpha) out.emplace_back("intra_node.alpha exceeds intra_group.alpha");
  if (a[1].alpha > a[2].alpha) out.emplace_back("intra_group.alpha exceeds inter_group.alpha");
  return out;
}

NetworkModel default_network_model() {
  NetworkModel m;
  m.link(LinkClass::intra_node) = {2e-7, 2e-11};
  m.link(LinkClass::intra_group) = {1e-6, 8e-11};
  m.link(LinkClass::inter_group) = {1.5e-6, 8e-11};
  m.gamma = 2.5e-10;
  m.copy_beta = 5e-11;
  m.alloc_alpha = 2e-6;
  m.eager_threshold = 16384;
  m.rails = 2;
  return m;
}

nlohmann::ordered_json to_json(const NetworkModel& m) {
  nlohmann::ordered_json j;
  for (LinkClass c : kAllLinkClasses) {
    nlohmann::ordered_json l;
    l["alpha"] = m.link(c).alpha;
    l["beta"] = m.link(c).beta;
    j[std::string(to_string(c))] = l;
  }
  j["gamma"] = m.gamma;
  j["copy_beta"] = m.copy_beta;
  j["alloc_alpha"] = m.alloc_alpha;
  j["eager_threshold"] = m.eager_threshold;
  j["rails"] = m.rails;
  return j;
}

namespace {

double number(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number()) fail(Errc::schema, field + ": must be a number");
  return v.get<double>();
}

long integer(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(Errc::schema, field + ": must be an integer");
  return v.get<long>();
}

std::optional<LinkClass> parse_link_class(const std::string& name) {
  for (LinkClass c : kAllLinkClasses)
    if (to_string(c) == name) return c;
  return std::nullopt;
}

}  // namespace

void apply_override(NetworkModel& m, const std::string& key, const nlohmann::json& value) {
  if (auto dot = key.find('.'); dot != std::string::npos) {
    auto c = parse_link_class(key.substr(0, dot));
    const std::string field = key.substr(dot + 1);
    if (!c) fail(Errc::schema, key + ": unknown link class");
    if (field == "alpha")
      m.link(*c).alpha = number(value, key);
    else if (field == "beta")
      m.link(*c).beta = number(value, key);
    else
      fail(Errc::schema, key + ": unknown link field");
    return;
  }
  if (auto c = parse_link_class(key)) {
    if (!value.is_object()) fail(Errc::schema, key + ": must be an object");
    for (const auto& [f, v] : value.items()) apply_override(m, key + "." + f, v);
    return;
  }
  if (key == "alpha") {
    const double a = number(value, key);
    for (auto& l : m.links) l.alpha = a;
  } else if (key == "beta") {
    const double b = number(value, key);
    for (auto& l : m.links) l.beta = b;
  } else if (key == "gamma") {
    m.gamma = number(value, key);
  } else if (key == "copy_beta") {
    m.copy_beta = number(value, key);
  } else if (key == "alloc_alpha") {
    m.alloc_alpha = number(value, key);
  } else if (key == "eager_threshold") {
    const long v = integer(value, key);
    if (v < 0) fail(Errc::schema, key + ": must be >= 0");
    m.eager_threshold = static_cast<std::size_t>(v);
  } else if (key == "rails") {
    const long v = integer(value, key);
    if (v < 1) fail(Errc::schema, key + ": must be >= 1");
    m.rails = static_cast<int>(v);
  } else {
    fail(Errc::schema, key + ": unknown network model field");
  }
}

NetworkModel parse_network_model(const nlohmann::json& j, const NetworkModel& base) {
  if (!j.is_object()) fail(Errc::schema, "network_model: expected an object");
  NetworkModel m = base;
  // Shorthand first so per-class entries can refine it.
  for (const char* k : {"alpha", "beta"})
    if (j.contains(k)) apply_override(m, k, j.at(k));
  for (const auto& [k, v] : j.items())
    if (k != "alpha" && k != "beta") apply_override(m, k, v);
  m.validate();
  return m;
}

double beta_eff(const NetworkModel& m, LinkClass c, std::size_t bytes) {
  const double beta = m.link(c).beta;
  return bytes > m.eager_threshold ? beta / m.rails : beta;
}

double transfer_time(const NetworkModel& m, LinkClass c, std::size_t bytes) {
  return m.link(c).alpha + static_cast<double>(bytes) * beta_eff(m, c, bytes);
}

double predict_closed_form(const Schedule& s, const NetworkModel& m) {
  if (!m.is_homogeneous())
    fail(Errc::usage, "closed form needs a homogeneous model (one link class)");
  const LinkCost& link = m.links[0];
  double worst = 0;
  for (int r = 0; r < s.ranks; ++r) {
    const CostTerms ct = cost_terms(s, r);
    std::size_t eager = 0, rendezvous = 0;
    for (const auto& step : ct.step_messages)
      for (std::size_t msg : step) (msg > m.eager_threshold ? rendezvous : eager) += msg;
    const double t = static_cast<double>(ct.steps) * link.alpha +
                     static_cast<double>(eager) * link.beta +
                     static_cast<double>(rendezvous) * (link.beta / m.rails) +
                     static_cast<double>(ct.reduced_elements) * m.gamma +
                     static_cast<double>(ct.copy_bytes) * m.copy_beta +
                     static_cast<double>(ct.allocations) * m.alloc_alpha;
    worst = std::max(worst, t);
  }
  return worst;
}

double predict_closed_form(AlgorithmId id, int ranks, std::size_t msg_bytes,
                           std::size_t element_width, const NetworkModel& m) {
  return predict_closed_form(build_schedule(id, ranks, msg_bytes, element_width), m);
}

double SimResult::max_completion() const {
  return completion.empty() ? 0.0 : *std::ranges::max_element(completion);
}

namespace {

struct Cursor {
  std::size_t step = 0;
  std::size_t action = 0;
  double t = 0;
  double step_start = 0;
  double pending_send_end = 0;
  int syncs_passed = 0;
  bool at_sync = false;
  bool done = false;
};

}  // namespace

SimResult simulate(const Schedule& s, const NetworkModel& m, const Allocation& placement,
                   const Topology& topo) {
  if (placement.size() < s.ranks)
    fail(Errc::usage, "simulate: placement covers " + std::to_string(placement.size()) +
                          " ranks, schedule needs " + std::to_string(s.ranks));
  check_allocation(placement, topo);
  m.validate();

  const int p = s.ranks;
  SimResult res;
  res.completion.assign(p, 0.0);
  res.phases.assign(p, PhaseTimes{});
  res.timeline.assign(p, {});
  std::vector<Cursor> cur(p);
  std::map<SegmentTag, double> send_epoch;

  auto add_phase = [&](int r, PhaseTag ph, double dt) { res.phases[r][index(ph)] += dt; };

  // Advances rank r until it blocks on an unposted send or a barrier.
  auto advance = [&](int r) {
    Cursor& c = cur[r];
    const auto& steps = s.programs[r].steps;
    bool moved = false;
    while (!c.done && !c.at_sync) {
      if (c.step >= steps.size()) {
        c.done = true;
        res.completion[r] = c.t;
        break;
      }
      const auto& actions = steps[c.step].actions;
      if (c.action == 0) {
        c.step_start = c.t;
        c.pending_send_end = c.t;
      }
      if (c.action < actions.size()) {
        const Action& a = actions[c.action];
        switch (a.kind) {
          case ActionKind::send: {
            send_epoch[a.tag] = c.t;
            const double end = c.t + transfer_time(m, classify(placement, r, a.peer), a.bytes);
            c.pending_send_end = std::max(c.pending_send_end, end);
            break;
          }
          case ActionKind::recv: {
            auto it = send_epoch.find(a.tag);
            if (it == send_epoch.end()) return moved;
            const double done_at = std::max(c.t, it->second) +
                                   transfer_time(m, classify(placement, a.peer, r), a.bytes);
            add_phase(r, PhaseTag::communication, done_at - c.t);
            c.t = done_at;
            break;
          }
          case ActionKind::reduce: {
            const double dt = static_cast<double>(a.bytes / s.element_width) * m.gamma;
            add_phase(r, PhaseTag::reduction, dt);
            c.t += dt;
            break;
          }
          case ActionKind::copy: {
            const double dt = static_cast<double>(a.bytes) * m.copy_beta;
            add_phase(r, PhaseTag::copy, dt);
            c.t += dt;
            break;
          }
          case ActionKind::alloc:
            add_phase(r, PhaseTag::alloc, m.alloc_alpha);
            c.t += m.alloc_alpha;
            break;
          case ActionKind::sync:
            c.at_sync = true;
            return true;
        }
        ++c.action;
        moved = true;
        continue;
      }
      // End of step: outstanding sends must drain.
      if (c.pending_send_end > c.t) {
        add_phase(r, PhaseTag::communication, c.pending_send_end - c.t);
        c.t = c.pending_send_end;
      }
      res.timeline[r].push_back({c.step_start, c.t});
      ++c.step;
      c.action = 0;
      moved = true;
    }
    return moved;
  };

  for (;;) {
    bool progressed = false;
    for (int r = 0; r < p; ++r) progressed |= advance(r);

    // Release a barrier once every rank waits at it.
    if (std::ranges::all_of(cur, [](const Cursor& c) { return c.at_sync; })) {
      double release = 0;
      for (const Cursor& c : cur) release = std::max(release, c.t);
      for (int r = 0; r < p; ++r) {
        add_phase(r, PhaseTag::sync, release - cur[r].t);
        cur[r].t = release;
        cur[r].at_sync = false;
        ++cur[r].syncs_passed;
        ++cur[r].action;
      }
      progressed = true;
    }
    if (std::ranges::all_of(cur, [](const Cursor& c) { return c.done; })) break;
    if (!progressed) {
      for (int r = 0; r < p; ++r)
        if (!cur[r].done)
          fail(Errc::deadlock, "simulate: rank " + std::to_string(r) + " blocked at step " +
                                   std::to_string(cur[r].step) + " with no matching send");
    }
  }
  return res;
}

SimResult simulate(const Schedule& s, const NetworkModel& m) {
  Topology single{"single-node", 1, 1, std::max(1, s.ranks), std::nullopt};
  return simulate(s, m, make_allocation(AllocationPolicy::block, s.ranks, single), single);
}

double throughput(std::size_t msg_bytes, std::size_t bytes_sent_per_rank, double time_s,
                  ThroughputConvention convention) {
  if (!(time_s > 0)) fail(Errc::usage, "throughput: time must be positive");
  const double bytes = convention == ThroughputConvention::goodput
                           ? static_cast<double>(msg_bytes)
                           : static_cast<double>(bytes_sent_per_rank);
  return 8.0 * bytes / time_s;
}

}  // namespace pico
