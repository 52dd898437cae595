#pragma once

// Virtual-time alpha-beta-gamma cost model over schedules.
//
// A transfer of b bytes on link class c costs alpha(c) + b * beta_eff(c),
// where beta_eff = beta / rails for messages above the eager threshold and
// beta otherwise. Reductions cost gamma per element, local copies copy_beta
// per byte and every scratch allocation alloc_alpha.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/schedule.hpp"
#include "core/topology.hpp"

namespace pico {

struct LinkCost {
  double alpha = 0;  // seconds
  double beta = 0;   // seconds per byte

  friend bool operator==(const LinkCost&, const LinkCost&) = default;
};

struct NetworkModel {
  std::array<LinkCost, 3> links{};
  double gamma = 0;        // seconds per reduced element
  double copy_beta = 0;    // seconds per copied byte
  double alloc_alpha = 0;  // seconds per allocation
  std::size_t eager_threshold = 0;
  int rails = 1;

  static NetworkModel uniform(double alpha, double beta, double gamma = 0);

  const LinkCost& link(LinkClass c) const { return links[static_cast<std::size_t>(c)]; }
  LinkCost& link(LinkClass c) { return links[static_cast<std::size_t>(c)]; }
  bool is_homogeneous() const { return links[0] == links[1] && links[1] == links[2]; }
  // Multiplies every time-valued parameter by k.
  NetworkModel scaled(double k) const;

  // Throws Errc::schema naming the offending field.
  void validate() const;
  // Non-fatal oddities, e.g. intra-node latency above inter-group latency.
  std::vector<std::string> warnings() const;

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

// Laptop-scale defaults used when an environment omits a model.
NetworkModel default_network_model();

nlohmann::ordered_json to_json(const NetworkModel& m);
// Fields absent from `j` keep their value from `base`. Accepts top-level
// "alpha"/"beta" as shorthand for all link classes.
NetworkModel parse_network_model(const nlohmann::json& j, const NetworkModel& base = {});
// key is a model field name, optionally dotted ("inter_group.beta").
void apply_override(NetworkModel& m, const std::string& key, const nlohmann::json& value);

double beta_eff(const NetworkModel& m, LinkClass c, std::size_t bytes);
double transfer_time(const NetworkModel& m, LinkClass c, std::size_t bytes);

// Closed-form cost from the schedule's cost terms; requires a homogeneous
// model. Copy and allocation terms are included (zero unless configured).
double predict_closed_form(const Schedule& s, const NetworkModel& m);
double predict_closed_form(AlgorithmId id, int ranks, std::size_t msg_bytes,
                           std::size_t element_width, const NetworkModel& m);

struct StepSpan {
  double start = 0;
  double end = 0;
};

struct SimResult {
  std::vector<double> completion;
  std::vector<PhaseTimes> phases;
  std::vector<std::vector<StepSpan>> timeline;

  double max_completion() const;
};

SimResult simulate(const Schedule& s, const NetworkModel& m, const Allocation& placement,
                   const Topology& topo);
// All ranks on one node; only meaningful for homogeneous models.
SimResult simulate(const Schedule& s, const NetworkModel& m);

enum class ThroughputConvention { goodput, bus_bandwidth };

// Goodput counts the collective's message size, bus bandwidth the bytes each
// rank actually puts on the wire. Bits per second.
double throughput(std::size_t msg_bytes, std::size_t bytes_sent_per_rank, double time_s,
                  ThroughputConvention convention);

}  // namespace pico
