#include "core/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pico {

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::fabric: return "fabric";
    case Backend::netsim: return "netsim";
    case Backend::both: break;
  }
  return "both";
}

std::optional<Backend> parse_backend(std::string_view text) {
  for (auto b : {Backend::fabric, Backend::netsim, Backend::both})
    if (to_string(b) == text) return b;
  return std::nullopt;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::full: return "full";
    case Granularity::statistics: return "statistics";
    case Granularity::minimal: return "minimal";
    case Granularity::summary: break;
  }
  return "summary";
}

std::optional<Granularity> parse_granularity(std::string_view text) {
  for (auto g : {Granularity::full, Granularity::statistics, Granularity::minimal,
                 Granularity::summary})
    if (to_string(g) == text) return g;
  return std::nullopt;
}

std::string Diagnostics::joined() const {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += '\n';
    out += item;
  }
  return out;
}

std::vector<std::size_t> SizeRange::expand() const {
  std::vector<std::size_t> out;
  if (min_bytes == 0 || multiplier < 2) return out;
  for (std::size_t s = min_bytes; s <= max_bytes; s *= multiplier) {
    out.push_back(s);
    if (s > max_bytes / multiplier) break;
  }
  return out;
}

std::vector<Sweep> TestConfig::variants() const {
  if (sweeps.empty()) return {Sweep{"default", ojson::object()}};
  return sweeps;
}

NetworkModel apply_sweep(const NetworkModel& base, const Sweep& sweep) {
  NetworkModel m = base;
  for (const auto& [k, v] : sweep.overrides.items()) apply_override(m, k, v);
  m.validate();
  return m;
}

std::optional<std::size_t> parse_size(std::string_view text) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr == text.data()) return std::nullopt;
  const std::string_view unit(ptr, static_cast<std::size_t>(end - ptr));
  std::size_t scale = 1;
  if (unit.empty() || unit == "B")
    scale = 1;
  else if (unit == "KiB")
    scale = std::size_t{1} << 10;
  else if (unit == "MiB")
    scale = std::size_t{1} << 20;
  else if (unit == "GiB")
    scale = std::size_t{1} << 30;
  else
    return std::nullopt;
  return value * scale;
}

std::string format_size(std::size_t bytes) {
  constexpr std::pair<std::size_t, const char*> units[] = {
      {std::size_t{1} << 30, "GiB"}, {std::size_t{1} << 20, "MiB"}, {std::size_t{1} << 10, "KiB"}};
  for (auto [scale, name] : units)
    if (bytes >= scale && bytes % scale == 0) return std::to_string(bytes / scale) + name;
  return std::to_string(bytes);
}

namespace {

nlohmann::json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::parse, what + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path, Errc missing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(missing, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Field readers record a diagnostic and leave the target untouched on error.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string prefix, Diagnostics& d)
      : j_(j), prefix_(std::move(prefix)), d_(d) {}

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const nlohmann::json& at(const std::string& key) const { return j_.at(key); }
  void error(const std::string& key, const std::string& msg) { d_.add(path(key), msg); }

  void unknown_keys(std::initializer_list<std::string_view> known) {
    for (const auto& [k, v] : j_.items())
      if (std::find(known.begin(), known.end(), k) == known.end())
        d_.add(path(k), "unknown field");
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    if (!has(key)) {
      if (required) error(key, "required");
      return;
    }
    if (!at(key).is_string())
      error(key, "must be a string");
    else
      out = at(key).get<std::string>();
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long long lo) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_number_integer()) {
      error(key, "must be an integer");
      return;
    }
    const long long x = v.get<long long>();
    if (x < lo) {
      error(key, "must be >= " + std::to_string(lo));
      return;
    }
    out = static_cast<Int>(x);
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    if (!at(key).is_boolean())
      error(key, "must be true or false");
    else
      out = at(key).get<bool>();
  }

  template <class T, class Parse>
  void choice(const std::string& key, T& out, Parse parse, const char* options) {
    if (!has(key)) return;
    if (!at(key).is_string()) {
      error(key, std::string("must be one of ") + options);
      return;
    }
    if (auto v = parse(at(key).get<std::string>()))
      out = *v;
    else
      error(key, "'" + at(key).get<std::string>() + "' is not one of " + options);
  }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  Diagnostics& d_;
};

void check_sizes(const SizeRange& s, Diagnostics& d) {
  if (s.min_bytes == 0) d.add("sizes.min_bytes", "must be > 0");
  if (s.multiplier < 2) d.add("sizes.multiplier", "must be >= 2");
  if (s.max_bytes < s.min_bytes) d.add("sizes.max_bytes", "must be >= sizes.min_bytes");
}

}  // namespace

Diagnostics check_test(const TestConfig& t) {
  Diagnostics d;
  if (t.test_id.empty()) d.add("test_id", "must not be empty");
  if (t.test_id.find_first_of("/\\ \t,") != std::string::npos)
    d.add("test_id", "must not contain separators or spaces");
  if (t.algorithms.empty()) d.add("algorithms", "must list at least one algorithm");
  for (std::size_t i = 0; i < t.algorithms.size(); ++i)
    if (collective_of(t.algorithms[i]) != t.collective)
      d.add("algorithms[" + std::to_string(i) + "]",
            "'" + std::string(algorithm_name(t.algorithms[i])) + "' is a " +
                std::string(to_string(collective_of(t.algorithms[i]))) +
                " algorithm, collective is " + std::string(to_string(t.collective)));
  check_sizes(t.sizes, d);
  if (t.ranks.empty()) d.add("ranks", "must list at least one rank count");
  for (std::size_t i = 0; i < t.ranks.size(); ++i)
    if (t.ranks[i] < 2) d.add("ranks[" + std::to_string(i) + "]", "must be >= 2");
  if (t.iterations < 1) d.add("iterations", "must be >= 1");
  if (t.warmup < 0) d.add("warmup", "must be >= 0");
  for (std::size_t i = 0; i < t.sweeps.size(); ++i) {
    const std::string at = "sweeps[" + std::to_string(i) + "]";
    if (t.sweeps[i].name.empty()) d.add(at + ".name", "must not be empty");
    for (std::size_t j = 0; j < i; ++j)
      if (t.sweeps[j].name == t.sweeps[i].name) d.add(at + ".name", "duplicate variant name");
    try {
      apply_sweep(default_network_model(), t.sweeps[i]);
    } catch (const Error& e) {
      d.add(at + ".overrides", e.what());
    }
  }
  return d;
}

TestConfig parse_test(const nlohmann::json& j) {
  if (!j.is_object()) fail(Errc::schema, "test descriptor: expected an object");
  Diagnostics d;
  TestConfig t;
  Reader r(j, "", d);
  r.unknown_keys({"test_id", "collective", "algorithms", "sizes", "datatype", "op", "ranks",
                  "iterations", "warmup", "backend", "granularity", "allocation", "sweeps",
                  "instrumentation", "seed"});
  r.string("test_id", t.test_id);
  if (!r.has("collective"))
    r.error("collective", "required");
  else
    r.choice("collective", t.collective, parse_collective,
             "allreduce, reduce_scatter, allgather, alltoall");
  if (r.has("algorithms")) {
    const auto& a = j.at("algorithms");
    if (!a.is_array()) {
      r.error("algorithms", "must be an array of names");
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string at = "algorithms[" + std::to_string(i) + "]";
        if (!a[i].is_string()) {
          d.add(at, "must be a string");
          continue;
        }
        const auto name = a[i].get<std::string>();
        if (auto id = parse_algorithm(t.collective, name)) {
          t.algorithms.push_back(*id);
          continue;
        }
        // Known elsewhere: report the cross-field mismatch.
        bool other = false;
        for (auto k : kAllCollectives)
          if (k != t.collective && parse_algorithm(k, name)) other = true;
        d.add(at, other ? "'" + name + "' does not implement " +
                              std::string(to_string(t.collective))
                        : "unknown algorithm '" + name + "'");
      }
    }
  } else {
    t.algorithms = algorithms_for(t.collective);
  }
  if (r.has("sizes")) {
    const auto& s = j.at("sizes");
    if (!s.is_object()) {
      r.error("sizes", "must be an object");
    } else {
      Reader rs(s, "sizes", d);
      rs.unknown_keys({"min_bytes", "max_bytes", "multiplier"});
      rs.integer("min_bytes", t.sizes.min_bytes, 1);
      rs.integer("max_bytes", t.sizes.max_bytes, 1);
      rs.integer("multiplier", t.sizes.multiplier, 2);
      if (t.sizes.max_bytes < t.sizes.min_bytes)
        d.add("sizes.max_bytes", "must be >= sizes.min_bytes");
    }
  }
  r.choice("datatype", t.datatype, parse_datatype, "int32, int64, float32, float64");
  r.choice("op", t.op, parse_reduce_op, "sum, max, min");
  if (r.has("ranks")) {
    const auto& a = j.at("ranks");
    if (!a.is_array() || a.empty()) {
      r.error("ranks", "must be a non-empty array of integers");
    } else {
      t.ranks.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number_integer() || a[i].get<long long>() < 2 ||
            a[i].get<long long>() > 4096)
          d.add("ranks[" + std::to_string(i) + "]", "must be an integer in [2, 4096]");
        else
          t.ranks.push_back(a[i].get<int>());
      }
    }
  }
  r.integer("iterations", t.iterations, 1);
  r.integer("warmup", t.warmup, 0);
  r.choice("backend", t.backend, parse_backend, "fabric, netsim, both");
  r.choice("granularity", t.granularity, parse_granularity,
           "full, statistics, minimal, summary");
  r.choice("allocation", t.allocation, parse_allocation_policy, "block, rr");
  if (r.has("sweeps")) {
    const auto& a = j.at("sweeps");
    if (!a.is_array()) {
      r.error("sweeps", "must be an array");
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string at = "sweeps[" + std::to_string(i) + "]";
        if (!a[i].is_object()) {
          d.add(at, "must be an object");
          continue;
        }
        Reader rs(a[i], at, d);
        rs.unknown_keys({"name", "overrides"});
        Sweep sw;
        rs.string("name", sw.name, true);
        if (rs.has("overrides")) {
          if (!a[i].at("overrides").is_object())
            rs.error("overrides", "must be an object");
          else
            sw.overrides = ojson(a[i].at("overrides"));
        }
        t.sweeps.push_back(std::move(sw));
      }
    }
  }
  if (r.has("instrumentation")) {
    const auto& ins = j.at("instrumentation");
    if (!ins.is_object()) {
      r.error("instrumentation", "must be an object");
    } else {
      Reader ri(ins, "instrumentation", d);
      ri.unknown_keys({"time_phases", "exclude_phases", "per_step"});
      ri.boolean("time_phases", t.instrumentation.time_phases);
      ri.boolean("per_step", t.instrumentation.per_step);
      if (ri.has("exclude_phases")) {
        const auto& ex = ins.at("exclude_phases");
        if (!ex.is_array()) {
          ri.error("exclude_phases", "must be an array of phase names");
        } else {
          t.instrumentation.exclude_phases.clear();
          for (std::size_t i = 0; i < ex.size(); ++i) {
            std::optional<PhaseTag> ph;
            if (ex[i].is_string()) ph = parse_phase(ex[i].get<std::string>());
            if (ph)
              t.instrumentation.exclude_phases.insert(*ph);
            else
              d.add("instrumentation.exclude_phases[" + std::to_string(i) + "]",
                    "must be one of alloc, copy, reduction, communication, sync");
          }
        }
      }
    }
  }
  if (r.has("seed")) {
    if (!j.at("seed").is_number_unsigned())
      r.error("seed", "must be a non-negative integer");
    else
      t.seed = j.at("seed").get<std::uint64_t>();
  }

  // Range checks already reported above are not repeated.
  if (d.empty()) {
    Diagnostics more = check_test(t);
    d.items.insert(d.items.end(), more.items.begin(), more.items.end());
  }
  if (!d.empty()) fail(Errc::schema, d.joined());
  return t;
}

TestConfig parse_test(std::string_view text) {
  TestConfig t = parse_test(parse_json_text(text, "test descriptor"));
  t.source_text = std::string(text);
  return t;
}

TestConfig load_test(const std::filesystem::path& path) {
  const std::string text = read_file(path, Errc::io);
  try {
    return parse_test(std::string_view(text));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

EnvConfig parse_env(std::string_view text, const std::filesystem::path& base_dir) {
  const nlohmann::json j = parse_json_text(text, "environment descriptor");
  if (!j.is_object()) fail(Errc::schema, "environment descriptor: expected an object");
  Diagnostics d;
  EnvConfig env;
  env.source_text = std::string(text);
  Reader r(j, "", d);
  r.unknown_keys({"system_name", "topology", "output_root", "network_model", "metadata"});
  r.string("system_name", env.system_name, true);
  if (env.system_name.find_first_of("/\\ ") != std::string::npos)
    r.error("system_name", "must not contain separators or spaces");
  std::string topo;
  r.string("topology", topo, true);
  std::string out;
  r.string("output_root", out);
  if (!out.empty()) env.output_root = out;
  if (env.output_root.is_relative()) env.output_root = base_dir / env.output_root;
  if (r.has("network_model")) {
    try {
      env.network_model = parse_network_model(j.at("network_model"), default_network_model());
    } catch (const Error& e) {
      d.items.push_back("network_model." + std::string(e.what()));
    }
  }
  if (r.has("metadata")) {
    if (!j.at("metadata").is_object())
      r.error("metadata", "must be an object");
    else
      env.metadata = ojson(j.at("metadata"));
  }
  if (!d.empty()) fail(Errc::schema, d.joined());

  env.topology_path = std::filesystem::path(topo);
  if (env.topology_path.is_relative()) env.topology_path = base_dir / env.topology_path;
  if (!std::filesystem::exists(env.topology_path))
    fail(Errc::dangling_reference,
         "topology: file not found: " + env.topology_path.string());
  try {
    env.topology = load_topology(env.topology_path);
  } catch (const Error& e) {
    fail(e.code(), "topology: " + std::string(e.what()));
  }
  return env;
}

EnvConfig load_env(const std::filesystem::path& path) {
  const std::string text = read_file(path, Errc::io);
  try {
    return parse_env(text, path.parent_path());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

ojson to_json(const TestConfig& t) {
  ojson j;
  j["test_id"] = t.test_id;
  j["collective"] = to_string(t.collective);
  ojson algs = ojson::array();
  for (auto a : t.algorithms) algs.push_back(algorithm_name(a));
  j["algorithms"] = algs;
  j["sizes"] = {{"min_bytes", t.sizes.min_bytes},
                {"max_bytes", t.sizes.max_bytes},
                {"multiplier", t.sizes.multiplier}};
  j["datatype"] = to_string(t.datatype);
  j["op"] = to_string(t.op);
  j["ranks"] = t.ranks;
  j["iterations"] = t.iterations;
  j["warmup"] = t.warmup;
  j["backend"] = to_string(t.backend);
  j["granularity"] = to_string(t.granularity);
  j["allocation"] = to_string(t.allocation);
  ojson sweeps = ojson::array();
  for (const auto& s : t.sweeps) sweeps.push_back({{"name", s.name}, {"overrides", s.overrides}});
  j["sweeps"] = sweeps;
  ojson excluded = ojson::array();
  for (auto ph : t.instrumentation.exclude_phases) excluded.push_back(to_string(ph));
  j["instrumentation"] = {{"time_phases", t.instrumentation.time_phases},
                          {"exclude_phases", excluded},
                          {"per_step", t.instrumentation.per_step}};
  if (t.seed) j["seed"] = *t.seed;
  return j;
}

std::string to_descriptor_text(const TestConfig& t) { return to_json(t).dump(2) + "\n"; }

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  return std::nullopt;
}

// Integers stay integers so that e.g. rails=4 serializes as 4.
std::optional<ojson> parse_scalar(std::string_view s) {
  if (auto i = parse_int(s)) return ojson(*i);
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(s), &used);
    if (used == s.size()) return ojson(d);
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

TestDescriptorBuilder::TestDescriptorBuilder() {
  config_.algorithms = algorithms_for(config_.collective);
}

std::string TestDescriptorBuilder::set(std::string_view key, std::string_view value) {
  auto bad = [&](const std::string& what) {
    return std::string(key) + ": " + what + " (got '" + std::string(value) + "')";
  };
  if (key == "test_id") {
    if (value.empty()) return bad("must not be empty");
    config_.test_id = std::string(value);
  } else if (key == "collective") {
    auto c = parse_collective(value);
    if (!c) return bad("expected allreduce, reduce_scatter, allgather or alltoall");
    config_.collective = *c;
    if (!algorithms_set_) config_.algorithms = algorithms_for(*c);
  } else if (key == "algorithms") {
    std::vector<AlgorithmId> algs;
    if (value == "all") {
      algs = algorithms_for(config_.collective);
    } else {
      for (const auto& name : split(value, ',')) {
        auto id = parse_algorithm(config_.collective, name);
        if (!id)
          return bad("'" + name + "' is not a " + std::string(to_string(config_.collective)) +
                     " algorithm");
        if (std::find(algs.begin(), algs.end(), *id) == algs.end()) algs.push_back(*id);
      }
    }
    config_.algorithms = algs;
    algorithms_set_ = true;
  } else if (key == "sizes") {
    const auto parts = split(value, ':');
    if (parts.size() < 2 || parts.size() > 3) return bad("expected min:max[:multiplier]");
    SizeRange s;
    auto lo = parse_size(parts[0]);
    auto hi = parse_size(parts[1]);
    if (!lo || !hi) return bad("sizes take bytes or KiB/MiB/GiB suffixes");
    s.min_bytes = *lo;
    s.max_bytes = *hi;
    if (parts.size() == 3) {
      auto m = parse_int(parts[2]);
      if (!m || *m < 0) return bad("multiplier must be an integer");
      s.multiplier = static_cast<std::size_t>(*m);
    }
    Diagnostics d;
    check_sizes(s, d);
    if (!d.empty()) return d.joined();
    config_.sizes = s;
  } else if (key == "min_bytes" || key == "max_bytes") {
    auto v = parse_size(value);
    if (!v || *v == 0) return bad("expected a positive size");
    SizeRange s = config_.sizes;
    (key == "min_bytes" ? s.min_bytes : s.max_bytes) = *v;
    Diagnostics d;
    check_sizes(s, d);
    if (!d.empty()) return d.joined();
    config_.sizes = s;
  } else if (key == "multiplier") {
    auto v = parse_int(value);
    if (!v || *v < 2) return "sizes.multiplier: must be >= 2 (got '" + std::string(value) + "')";
    config_.sizes.multiplier = static_cast<std::size_t>(*v);
  } else if (key == "datatype") {
    auto v = parse_datatype(value);
    if (!v) return bad("expected int32, int64, float32 or float64");
    config_.datatype = *v;
  } else if (key == "op") {
    auto v = parse_reduce_op(value);
    if (!v) return bad("expected sum, max or min");
    config_.op = *v;
  } else if (key == "ranks") {
    std::vector<int> ranks;
    for (const auto& part : split(value, ',')) {
      auto v = parse_int(part);
      if (!v || *v < 2 || *v > 4096) return bad("rank counts are integers in [2, 4096]");
      ranks.push_back(static_cast<int>(*v));
    }
    config_.ranks = ranks;
  } else if (key == "iterations" || key == "warmup") {
    auto v = parse_int(value);
    const long long lo = key == "iterations" ? 1 : 0;
    if (!v || *v < lo || *v > 1'000'000) return bad("must be an integer >= " + std::to_string(lo));
    (key == "iterations" ? config_.iterations : config_.warmup) = static_cast<int>(*v);
  } else if (key == "backend") {
    auto v = parse_backend(value);
    if (!v) return bad("expected fabric, netsim or both");
    config_.backend = *v;
  } else if (key == "granularity") {
    auto v = parse_granularity(value);
    if (!v) return bad("expected full, statistics, minimal or summary");
    config_.granularity = *v;
  } else if (key == "allocation") {
    auto v = parse_allocation_policy(value);
    if (!v) return bad("expected block or rr");
    config_.allocation = *v;
  } else if (key == "seed") {
    if (value.empty() || value == "none") {
      config_.seed.reset();
    } else {
      auto v = parse_int(value);
      if (!v || *v < 0) return bad("expected a non-negative integer");
      config_.seed = static_cast<std::uint64_t>(*v);
    }
  } else if (key == "exclude_phases") {
    std::set<PhaseTag> phases;
    if (!value.empty() && value != "none") {
      for (const auto& part : split(value, ',')) {
        auto ph = parse_phase(part);
        if (!ph) return bad("phases are alloc, copy, reduction, communication, sync");
        phases.insert(*ph);
      }
    }
    config_.instrumentation.exclude_phases = phases;
  } else if (key == "time_phases" || key == "per_step") {
    auto v = parse_bool(value);
    if (!v) return bad("expected true or false");
    (key == "time_phases" ? config_.instrumentation.time_phases
                          : config_.instrumentation.per_step) = *v;
  } else if (key == "sweep") {
    return add_sweep(value);
  } else {
    return std::string(key) + ": unknown field";
  }
  return {};
}

std::string TestDescriptorBuilder::add_sweep(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == spec.size())
    return "sweep: expected key=v1,v2,... (got '" + std::string(spec) + "')";
  const std::string key(spec.substr(0, eq));
  std::vector<std::pair<std::string, ojson>> values;
  for (const auto& raw : split(spec.substr(eq + 1), ',')) {
    auto v = parse_scalar(raw);
    if (!v) return "sweep: '" + raw + "' is not a number";
    NetworkModel probe = default_network_model();
    try {
      apply_override(probe, key, *v);
      probe.validate();
    } catch (const Error& e) {
      return std::string("sweep: ") + e.what();
    }
    values.emplace_back(key + "=" + raw, *v);
  }
  // Successive sweeps combine as a cross product.
  std::vector<Sweep> base = config_.sweeps;
  if (base.empty()) base.push_back({"", ojson::object()});
  std::vector<Sweep> out;
  for (const auto& b : base) {
    for (const auto& [name, v] : values) {
      Sweep s = b;
      s.name = b.name.empty() ? name : b.name + "+" + name;
      s.overrides[key] = v;
      out.push_back(std::move(s));
    }
  }
  config_.sweeps = std::move(out);
  return {};
}

std::string TestDescriptorBuilder::text() const {
  Diagnostics d = check();
  if (!d.empty()) fail(Errc::schema, d.joined());
  return to_descriptor_text(config_);
}

}  // namespace pico
