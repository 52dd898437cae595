// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "pico/pico.h"

namespace {

int exit_code(pico_status s) {
  switch (s) {
    case PICO_OK: return 0;
    case PICO_E_USAGE:
    case PICO_E_PARSE:
    case PICO_E_SCHEMA:
    case PICO_E_DANGLING_REFERENCE:
    case PICO_E_UNSUPPORTED:
    case PICO_E_NO_TERMINAL: return 2;
    default: return 1;
  }
}

int report_error(pico_status s) {
  std::cerr << "error (" << pico_status_name(s) << "): " << pico_last_error() << '\n';
  return exit_code(s);
}

struct ReportGuard {
  pico_report* r = nullptr;
  ~ReportGuard() { pico_report_free(r); }
};

int finish(pico_status s, pico_report* r) {
  if (r) std::cout << pico_report_text(r);
  if (s != PICO_OK) return report_error(s);
  return 0;
}

// Descriptor fields in application order; collective comes first so that
// algorithm names resolve against it.
struct GenArgs {
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> sweeps;
  std::string output;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective algorithm benchmarking and modelling"};
  app.set_version_flag("--version", std::string(pico_version()));
  app.require_subcommand(1);

  // init
  auto* init = app.add_subcommand("init", "Build a test descriptor with the interactive wizard");
  std::string init_output = "test.json";
  std::string init_env;
  bool no_tty_check = false;
  init->add_option("-o,--output", init_output, "Descriptor file to write")->capture_default_str();
  init->add_option("--env", init_env, "Environment descriptor used to check rank counts");
  init->add_flag("--no-tty-check", no_tty_check, "Accept non-terminal input (scripted answers)");

  // gen
  auto* gen = app.add_subcommand("gen", "Build a test descriptor from flags");
  GenArgs g;
  static const char* kGenFields[][2] = {
      {"collective", "allreduce, reduce_scatter, allgather or alltoall"},
      {"algorithms", "Comma-separated algorithm names or `all`"},
      {"sizes", "min:max[:multiplier], e.g. 1KiB:4KiB:2"},
      {"datatype", "int32, int64, float32 or float64"},
      {"op", "sum, max or min"},
      {"ranks", "Comma-separated rank counts"},
      {"iterations", "Timed iterations"},
      {"warmup", "Untimed iterations"},
      {"backend", "fabric, netsim or both"},
      {"granularity", "full, statistics, minimal or summary"},
      {"allocation", "block or rr"},
      {"test-id", "Identifier for index rows and plots"},
      {"seed", "Seed for pseudo-random input data"},
      {"exclude-phases", "Comma-separated phases subtracted from total time, or none"},
      {"time-phases", "true or false"},
      {"per-step", "true or false"},
  };
  std::vector<std::optional<std::string>> gen_values(std::size(kGenFields));
  for (std::size_t i = 0; i < std::size(kGenFields); ++i) {
    auto* opt = gen->add_option_function<std::string>(
        std::string("--") + kGenFields[i][0],
        [&gen_values, i](const std::string& v) { gen_values[i] = v; }, kGenFields[i][1]);
    opt->type_name("VALUE");
  }
  gen->add_option("--sweep", g.sweeps, "Network model sweep key=v1,v2 (repeatable)");
  gen->add_option("-o,--output", g.output, "Write here instead of standard output");

  // run
  auto* runc = app.add_subcommand("run", "Execute a test descriptor");
  std::string env_path, test_path;
  int timeout_ms = 0, workers = 0;
  bool quiet = false;
  runc->add_option("--env", env_path, "Environment descriptor")->required();
  runc->add_option("--test", test_path, "Test descriptor")->required();
  runc->add_option("--timeout-ms", timeout_ms, "Deadlock timeout per point");
  runc->add_option("--workers", workers, "Fabric worker threads (0: one per rank)");
  runc->add_flag("-q,--quiet", quiet, "No progress lines");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-execute a run from its metadata.log");
  std::string metadata, output_root;
  replay->add_option("--metadata", metadata, "metadata.log of the run")->required();
  replay->add_option("--output-root", output_root, "Results root (default: the recorded one)");
  replay->add_flag("-q,--quiet", quiet, "No progress lines");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Post-process results listed in an index");
  std::string index, gain, out_dir, backend, variant;
  bool phases = false, tuning = false, plots = false;
  analyze->add_option("--index", index, "<system>_index.csv")->required();
  analyze->add_option("--gain", gain, "Reference algorithm for the gain heatmap");
  analyze->add_flag("--phases", phases, "Phase breakdown chart");
  analyze->add_flag("--tuning", tuning, "Tuning rule file");
  analyze->add_flag("--plots", plots, "Line and bar charts");
  analyze->add_option("--out", out_dir, "Output directory (default: <index dir>/analysis)");
  analyze->add_option("--backend", backend, "Only this backend");
  analyze->add_option("--variant", variant, "Only this variant");

  // trace
  auto* tracec = app.add_subcommand("trace", "Estimate traffic locality of a descriptor");
  std::string topology, policy = "block";
  std::size_t trace_bytes = 0;
  tracec->add_option("--test", test_path, "Test descriptor")->required();
  tracec->add_option("--topology", topology, "Topology descriptor")->required();
  tracec->add_option("--policy", policy, "block or rr")
      ->check(CLI::IsMember({"block", "rr"}))
      ->capture_default_str();
  tracec->add_option("--bytes", trace_bytes, "Message size (default: largest in the test)");
  tracec->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // schedule
  auto* sched = app.add_subcommand("schedule", "Print an algorithm's schedule and cost terms");
  std::string collective = "allreduce", algorithm;
  int ranks = 4;
  std::size_t bytes = 0, elem_width = 4;
  bool costs_only = false;
  sched->add_option("--collective", collective)->capture_default_str();
  sched->add_option("--algorithm", algorithm)->required();
  sched->add_option("--ranks", ranks)->capture_default_str();
  sched->add_option("--bytes", bytes)->required();
  sched->add_option("--width", elem_width, "Element width in bytes")->capture_default_str();
  sched->add_flag("--costs", costs_only, "Only print per-rank cost terms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  pico_run_options ro{timeout_ms, workers, quiet ? nullptr : stderr};

  if (*init) {
    const pico_status s = pico_wizard_run(stdin, stdout, init_output.c_str(),
                                          init_env.empty() ? nullptr : init_env.c_str(),
                                          no_tty_check ? 0 : 1);
    if (s != PICO_OK) return report_error(s);
    std::cout << init_output << '\n';
    return 0;
  }

  if (*gen) {
    pico_builder* b = nullptr;
    if (pico_status s = pico_builder_new(&b); s != PICO_OK) return report_error(s);
    auto apply = [&]() -> pico_status {
      for (std::size_t i = 0; i < std::size(kGenFields); ++i) {
        if (!gen_values[i]) continue;
        std::string key = kGenFields[i][0];
        for (auto& c : key)
          if (c == '-') c = '_';
        if (pico_status s = pico_builder_set(b, key.c_str(), gen_values[i]->c_str()); s != PICO_OK)
          return s;
      }
      for (const auto& sw : g.sweeps)
        if (pico_status s = pico_builder_add_sweep(b, sw.c_str()); s != PICO_OK) return s;
      return PICO_OK;
    };
    pico_status s = apply();
    char* text = nullptr;
    if (s == PICO_OK) s = pico_builder_text(b, &text);
    pico_builder_free(b);
    if (s != PICO_OK) return report_error(s);
    std::string out(text);
    pico_string_free(text);
    if (g.output.empty()) {
      std::cout << out;
      return 0;
    }
    std::ofstream f(g.output, std::ios::binary);
    f << out;
    if (!f) {
      std::cerr << "error (io): cannot write " << g.output << '\n';
      return 1;
    }
    std::cout << g.output << '\n';
    return 0;
  }

  if (*runc) {
    ReportGuard r;
    const pico_status s = pico_run(env_path.c_str(), test_path.c_str(), &ro, &r.r);
    return finish(s, r.r);
  }

  if (*replay) {
    ReportGuard r;
    const pico_status s = pico_replay(metadata.c_str(),
                                      output_root.empty() ? nullptr : output_root.c_str(), &ro,
                                      &r.r);
    return finish(s, r.r);
  }

  if (*analyze) {
    if (gain.empty() && !phases && !tuning && !plots) {
      std::cerr << "analyze: choose at least one of --gain, --phases, --tuning, --plots\n";
      return 2;
    }
    pico_analyze_options ao{};
    ao.out_dir = out_dir.empty() ? nullptr : out_dir.c_str();
    ao.gain_reference = gain.empty() ? nullptr : gain.c_str();
    ao.phases = phases;
    ao.tuning = tuning;
    ao.plots = plots;
    ao.backend = backend.empty() ? nullptr : backend.c_str();
    ao.variant = variant.empty() ? nullptr : variant.c_str();
    ReportGuard r;
    const pico_status s = pico_analyze(index.c_str(), &ao, &r.r);
    return finish(s, r.r);
  }

  if (*tracec) {
    ReportGuard r;
    const pico_status s =
        pico_trace(test_path.c_str(), topology.c_str(), policy.c_str(), trace_bytes,
                   out_dir.empty() ? "." : out_dir.c_str(), &r.r);
    return finish(s, r.r);
  }

  if (*sched) {
    pico_schedule* s = nullptr;
    if (pico_status st = pico_schedule_build(collective.c_str(), algorithm.c_str(), ranks, bytes,
                                             elem_width, &s);
        st != PICO_OK)
      return report_error(st);
    if (!costs_only) {
      char* text = nullptr;
      if (pico_status st = pico_schedule_text(s, &text); st != PICO_OK) {
        pico_schedule_free(s);
        return report_error(st);
      }
      std::cout << text;
      pico_string_free(text);
    }
    std::cout << "# rank steps bytes_sent reduced_elements copy_bytes allocations\n";
    for (int r = 0; r < ranks; ++r) {
      pico_cost_terms ct{};
      pico_schedule_cost_terms(s, r, &ct);
      std::cout << r << ' ' << ct.steps << ' ' << ct.bytes_sent << ' ' << ct.reduced_elements
                << ' ' << ct.copy_bytes << ' ' << ct.allocations << '\n';
    }
    pico_schedule_free(s);
    return 0;
  }
  return 2;
}
