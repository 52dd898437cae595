#include "core/orchestrator.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace pico {

namespace fs = std::filesystem;

RunPlan plan_runs(const EnvConfig& /*env*/, const TestConfig& test) {
  Diagnostics d = check_test(test);
  if (!d.empty()) fail(Errc::schema, d.joined());
  const auto sizes = test.sizes.expand();
  std::vector<Backend> backends;
  if (test.backend == Backend::both)
    backends = {Backend::fabric, Backend::netsim};
  else
    backends = {test.backend};
  const auto variants = test.variants();

  RunPlan plan;
  for (AlgorithmId a : test.algorithms)
    for (int p : test.ranks)
      for (std::size_t n : sizes)
        for (const auto& v : variants)
          for (Backend b : backends) plan.points.push_back({a, p, n, v, b});
  if (plan.points.empty()) fail(Errc::usage, "run plan is empty");
  return plan;
}

fs::path index_path(const fs::path& output_root, const std::string& system) {
  return output_root / (system + "_index.csv");
}

std::vector<IndexRow> read_index(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::string header;
  for (std::size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
  if (header != kIndexHeader) fail(Errc::parse, path.string() + ": not an index file");
  std::vector<IndexRow> rows;
  for (const auto& f : t.rows) {
    IndexRow r;
    try {
      r = {f[0], f[1], f[2], f[3], f[4], std::stoi(f[5]), std::stoull(f[6]), std::stoull(f[7]),
           f[8], f[9], f[10], f[11]};
    } catch (const std::exception&) {
      fail(Errc::parse, path.string() + ": malformed row for " + f[11]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::size_t RunSummary::failed() const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.status != "ok"; }));
}

std::string make_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y%m%d-%H%M%S");
  static std::mt19937 rng(std::random_device{}());
  static constexpr char kAlphabet[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<int> pick(0, 35);
  ss << '-';
  for (int i = 0; i < 4; ++i) ss << kAlphabet[pick(rng)];
  return ss.str();
}

namespace {

constexpr std::string_view kMetadataTitle = "# pico run metadata";

std::string section(const std::string& name, const std::string& body) {
  std::string out = "--- begin " + name + " ---\n" + body;
  if (!body.empty() && body.back() != '\n') out += '\n';
  return out + "--- end " + name + " ---\n";
}

// Env as recorded: embeds the topology so replay does not depend on the
// original file layout.
ojson env_record(const EnvConfig& env) {
  ojson j;
  j["system_name"] = env.system_name;
  j["topology"] = to_json(env.topology);
  j["topology_path"] = env.topology_path.string();
  j["output_root"] = fs::absolute(env.output_root).lexically_normal().string();
  j["network_model"] = to_json(env.network_model);
  j["metadata"] = env.metadata;
  return j;
}

struct Group {
  Backend backend;
  std::string variant;
  int ranks;
  std::vector<const RunPoint*> points;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io, "cannot write " + path.string());
  f << text;
  if (!f) fail(Errc::io, "write failed: " + path.string());
}

std::string join_algorithms(const std::vector<const RunPoint*>& points) {
  std::vector<std::string> names;
  for (const auto* p : points) {
    std::string n(algorithm_name(p->algorithm));
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  }
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ";") + n;
  return out;
}

std::vector<Measurement> simulate_point(const RunPoint& pt, const TestConfig& test,
                                        const EnvConfig& env, const NetworkModel& model,
                                        const Allocation& alloc) {
  const Schedule s = build_schedule(pt.algorithm, pt.ranks, pt.msg_bytes, width(test.datatype));
  const SimResult sim = simulate(s, model, alloc, env.topology);
  std::vector<Measurement> out;
  for (int it = 0; it < test.iterations; ++it) {
    for (int r = 0; r < pt.ranks; ++r) {
      Measurement m;
      m.iteration = it;
      m.rank = r;
      double total = sim.completion[r] * 1e9;
      for (PhaseTag ph : kAllPhases) {
        const double v = test.instrumentation.time_phases ? sim.phases[r][index(ph)] * 1e9 : 0.0;
        m.phase_ns[index(ph)] = v;
        if (test.instrumentation.exclude_phases.count(ph)) total -= sim.phases[r][index(ph)] * 1e9;
      }
      m.total_ns = total;
      out.push_back(m);
    }
  }
  return out;
}

std::vector<Measurement> execute_point(const RunPoint& pt, const TestConfig& test,
                                       const RunOptions& options) {
  const Schedule s = build_schedule(pt.algorithm, pt.ranks, pt.msg_bytes, width(test.datatype));
  const auto inputs = make_inputs(s, test.datatype, test.seed);
  ExecuteOptions eo;
  eo.instr = test.instrumentation;
  eo.iterations = test.iterations;
  eo.warmup = test.warmup;
  eo.timeout = options.timeout;
  eo.workers = options.workers;
  Execution ex = execute(s, inputs, test.op, eo);
  const auto expected = naive_oracle(collective_of(pt.algorithm), inputs, test.op);
  const VerificationReport v = verify(ex.outputs, expected, test.datatype);
  if (!v.ok)
    fail(Errc::verification, qualified_name(pt.algorithm) + " p=" + std::to_string(pt.ranks) +
                                 " n=" + std::to_string(pt.msg_bytes) + ": " + v.message);
  return std::move(ex.measurements);
}

}  // namespace

RunSummary run(const RunPlan& plan, const EnvConfig& env, const TestConfig& test,
               const RunOptions& options) {
  if (plan.points.empty()) fail(Errc::usage, "run plan is empty");
  const fs::path system_dir = env.output_root / env.system_name;
  std::error_code ec;
  fs::create_directories(system_dir, ec);
  if (ec) fail(Errc::io, "cannot create " + system_dir.string() + ": " + ec.message());

  std::string stamp = options.timestamp;
  if (stamp.empty()) {
    do stamp = make_timestamp();
    while (fs::exists(system_dir / stamp));
  }
  RunSummary summary;
  summary.timestamp_dir = system_dir / stamp;
  summary.index = index_path(env.output_root, env.system_name);
  fs::create_directories(summary.timestamp_dir, ec);
  if (ec) fail(Errc::io, "cannot create " + summary.timestamp_dir.string() + ": " + ec.message());

  // Group points by run directory, preserving plan order of first use.
  std::vector<Group> groups;
  for (const auto& pt : plan.points) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.backend == pt.backend && g.variant == pt.variant.name && g.ranks == pt.ranks;
    });
    if (it == groups.end()) {
      groups.push_back({pt.backend, pt.variant.name, pt.ranks, {}});
      it = std::prev(groups.end());
    }
    it->points.push_back(&pt);
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    return std::tuple(a.backend, a.ranks) < std::tuple(b.backend, b.ranks);
  });

  const bool new_index = !fs::exists(summary.index);
  std::ofstream index(summary.index, std::ios::app | std::ios::binary);
  if (!index) fail(Errc::io, "cannot open " + summary.index.string());
  if (new_index) index << kIndexHeader << '\n';

  const std::string descriptor =
      test.source_text.empty() ? to_descriptor_text(test) : test.source_text;

  for (const Group& g : groups) {
    const Sweep& variant = g.points.front()->variant;
    const fs::path rel = fs::path(env.system_name) / stamp /
                         (std::string(to_string(g.backend)) + "_" + g.variant) /
                         ("p" + std::to_string(g.ranks) + "_" +
                          std::string(to_string(test.allocation)));
    RunDirectory rd;
    rd.path = env.output_root / rel;
    rd.status = "ok";
    std::ostringstream runs_log;
    try {
      fs::create_directories(rd.path);
      const NetworkModel model = apply_sweep(env.network_model, variant);

      std::ostringstream meta;
      meta << kMetadataTitle << '\n'
           << "framework_version: " << PICO_VERSION_STRING << '\n'
           << "timestamp: " << stamp << '\n'
           << "system: " << env.system_name << '\n'
           << "test_id: " << test.test_id << '\n'
           << "backend: " << to_string(g.backend) << '\n'
           << "variant: " << g.variant << '\n'
           << "variant_overrides: " << variant.overrides.dump() << '\n'
           << "ranks: " << g.ranks << '\n'
           << "allocation_policy: " << to_string(test.allocation) << '\n'
           << section("test_descriptor", descriptor)
           << section("environment", env_record(env).dump(2))
           << section("network_model", to_json(model).dump(2));
      const fs::path meta_path = rd.path / "metadata.log";
      write_text(meta_path, meta.str());
      rd.files.push_back(meta_path);

      const Allocation alloc = make_allocation(test.allocation, g.ranks, env.topology);
      write_alloc_csv(rd.path / "alloc.csv", alloc);
      rd.files.push_back(rd.path / "alloc.csv");

      for (const RunPoint* pt : g.points) {
        if (options.before_point) options.before_point(*pt);
        if (options.progress)
          *options.progress << "run " << to_string(pt->backend) << ' ' << g.variant << ' '
                            << qualified_name(pt->algorithm) << " p=" << pt->ranks
                            << " bytes=" << pt->msg_bytes << '\n';
        const auto ms = pt->backend == Backend::netsim
                            ? simulate_point(*pt, test, env, model, alloc)
                            : execute_point(*pt, test, options);
        const ResultKey key{collective_of(pt->algorithm), pt->algorithm, pt->ranks,
                            pt->msg_bytes, g.variant};
        const fs::path file = rd.path / (std::string(to_string(key.collective)) + "_" +
                                         std::string(algorithm_name(pt->algorithm)) + "_" +
                                         std::to_string(pt->msg_bytes) + ".csv");
        write_results(key, ms, test.granularity, file);
        rd.files.push_back(file);
        runs_log << file.filename().string() << '\n';
      }
    } catch (const Error& e) {
      rd.status = "failed";
      rd.error = e.what();
    } catch (const std::exception& e) {
      rd.status = "failed";
      rd.error = e.what();
    }
    // Outcome trailer; best effort when the directory itself is unusable.
    if (fs::exists(rd.path)) {
      std::ofstream meta(rd.path / "metadata.log", std::ios::app | std::ios::binary);
      meta << section("results", runs_log.str()) << "status: " << rd.status << '\n';
      if (!rd.error.empty()) meta << "error: " << rd.error << '\n';
    }
    if (options.progress && rd.status != "ok")
      *options.progress << "failed " << rd.path.string() << ": " << rd.error << '\n';

    index << stamp << ',' << test.test_id << ',' << env.system_name << ','
          << to_string(test.collective) << ',' << join_algorithms(g.points) << ',' << g.ranks
          << ',' << test.sizes.min_bytes << ',' << test.sizes.max_bytes << ','
          << to_string(g.backend) << ',' << g.variant << ',' << rd.status << ','
          << rel.generic_string() << '\n';
    index.flush();
    summary.runs.push_back(std::move(rd));
  }
  return summary;
}

Metadata parse_metadata(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  Metadata md;
  std::string line;
  std::string open;
  std::string body;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      if (line != kMetadataTitle) fail(Errc::parse, path.string() + ": not a metadata.log");
      first = false;
      continue;
    }
    if (!open.empty()) {
      if (line == "--- end " + open + " ---") {
        md.sections[open] = body;
        open.clear();
        body.clear();
      } else {
        body += line + '\n';
      }
      continue;
    }
    if (line.rfind("--- begin ", 0) == 0 && line.size() > 14) {
      open = line.substr(10, line.size() - 14);
      continue;
    }
    const auto colon = line.find(": ");
    if (colon != std::string::npos) md.fields[line.substr(0, colon)] = line.substr(colon + 2);
  }
  if (first) fail(Errc::parse, path.string() + ": empty metadata.log");
  if (!open.empty()) fail(Errc::parse, path.string() + ": unterminated section " + open);
  return md;
}

RunSummary replay(const fs::path& metadata_path, const RunOptions& options,
                  const fs::path& output_root) {
  const Metadata md = parse_metadata(metadata_path);
  auto field = [&](const std::string& k) -> const std::string& {
    auto it = md.fields.find(k);
    if (it == md.fields.end()) fail(Errc::parse, metadata_path.string() + ": missing " + k);
    return it->second;
  };
  auto sect = [&](const std::string& k) -> const std::string& {
    auto it = md.sections.find(k);
    if (it == md.sections.end())
      fail(Errc::parse, metadata_path.string() + ": missing section " + k);
    return it->second;
  };

  TestConfig test = parse_test(std::string_view(sect("test_descriptor")));
  nlohmann::json envj;
  try {
    envj = nlohmann::json::parse(sect("environment"));
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::parse, metadata_path.string() + ": environment: " + e.what());
  }
  EnvConfig env;
  env.system_name = envj.at("system_name").get<std::string>();
  env.topology = parse_topology(envj.at("topology"));
  env.topology_path = envj.value("topology_path", std::string());
  env.network_model = parse_network_model(envj.at("network_model"), NetworkModel{});
  env.output_root = output_root.empty() ? fs::path(envj.at("output_root").get<std::string>())
                                        : output_root;
  env.metadata = ojson(envj.value("metadata", nlohmann::json::object()));

  const auto backend = parse_backend(field("backend"));
  if (!backend || *backend == Backend::both)
    fail(Errc::parse, metadata_path.string() + ": bad backend");
  const std::string variant = field("variant");
  const int ranks = std::stoi(field("ranks"));

  RunPlan full = plan_runs(env, test);
  RunPlan plan;
  for (const auto& pt : full.points)
    if (pt.backend == *backend && pt.variant.name == variant && pt.ranks == ranks)
      plan.points.push_back(pt);
  if (plan.points.empty())
    fail(Errc::usage, metadata_path.string() + ": no run matches the recorded parameters");
  return run(plan, env, test, options);
}

}  // namespace pico
