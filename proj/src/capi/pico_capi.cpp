#include "pico/pico.h"

#include <unistd.h>

#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <streambuf>

#include "core/analysis.hpp"
#include "core/orchestrator.hpp"
#include "core/render.hpp"
#include "core/tracer.hpp"
#include "core/wizard.hpp"

struct pico_builder {
  pico::TestDescriptorBuilder builder;
};

struct pico_schedule {
  pico::Schedule schedule;
};

struct pico_report {
  std::string text;
  std::vector<std::string> outputs;
  std::vector<pico::RunDirectory> runs;
  std::vector<std::string> run_paths;
  std::string index;
};

namespace {

thread_local std::string g_last_error;

pico_status to_status(pico::Errc code) {
  switch (code) {
    case pico::Errc::usage: return PICO_E_USAGE;
    case pico::Errc::unsupported: return PICO_E_UNSUPPORTED;
    case pico::Errc::parse: return PICO_E_PARSE;
    case pico::Errc::schema: return PICO_E_SCHEMA;
    case pico::Errc::dangling_reference: return PICO_E_DANGLING_REFERENCE;
    case pico::Errc::io: return PICO_E_IO;
    case pico::Errc::deadlock: return PICO_E_DEADLOCK;
    case pico::Errc::verification: return PICO_E_VERIFICATION;
    case pico::Errc::aborted: return PICO_E_ABORTED;
    case pico::Errc::no_terminal: return PICO_E_NO_TERMINAL;
    case pico::Errc::internal: break;
  }
  return PICO_E_INTERNAL;
}

pico_status set_error(pico_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
pico_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const pico::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(PICO_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PICO_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PICO_E_INTERNAL, e.what());
  }
}

pico_status null_arg(const char* name) {
  return set_error(PICO_E_USAGE, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

// Minimal std::streambuf over a C stream.
class FileBuf : public std::streambuf {
 public:
  explicit FileBuf(FILE* f) : f_(f) {}

 protected:
  int_type overflow(int_type c) override {
    if (traits_type::eq_int_type(c, traits_type::eof())) return traits_type::not_eof(c);
    return std::fputc(c, f_) == EOF ? traits_type::eof() : c;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    return static_cast<std::streamsize>(std::fwrite(s, 1, static_cast<size_t>(n), f_));
  }
  int sync() override { return std::fflush(f_) == 0 ? 0 : -1; }
  int_type underflow() override {
    const int c = std::fgetc(f_);
    if (c == EOF) return traits_type::eof();
    ch_ = static_cast<char>(c);
    setg(&ch_, &ch_, &ch_ + 1);
    return traits_type::to_int_type(ch_);
  }

 private:
  FILE* f_;
  char ch_ = 0;
};

pico::RunOptions run_options(const pico_run_options* o, std::ostream* progress) {
  pico::RunOptions ro;
  if (o && o->timeout_ms > 0) ro.timeout = std::chrono::milliseconds(o->timeout_ms);
  if (o && o->workers > 0) ro.workers = o->workers;
  ro.progress = progress;
  return ro;
}

void fill_run_report(pico_report& r, const pico::RunSummary& s) {
  r.runs = s.runs;
  r.index = s.index.string();
  std::ostringstream text;
  for (const auto& rd : s.runs) {
    r.run_paths.push_back(rd.path.string());
    text << rd.status << ' ' << rd.path.string();
    if (!rd.error.empty()) text << ": " << rd.error;
    text << '\n';
    for (const auto& f : rd.files) r.outputs.push_back(f.string());
  }
  r.outputs.push_back(r.index);
  text << "index " << r.index << '\n';
  r.text = text.str();
}

std::optional<pico::AlgorithmId> parse_reference(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto c = pico::parse_collective(text.substr(0, slash));
    return c ? pico::parse_algorithm(*c, text.substr(slash + 1)) : std::nullopt;
  }
  for (auto c : pico::kAllCollectives)
    if (auto a = pico::parse_algorithm(c, text)) return a;
  return std::nullopt;
}

}  // namespace

extern "C" {

const char* pico_version(void) { return PICO_VERSION_STRING; }

const char* pico_status_name(pico_status status) {
  switch (status) {
    case PICO_OK: return "ok";
    case PICO_E_USAGE: return "usage";
    case PICO_E_UNSUPPORTED: return "unsupported";
    case PICO_E_PARSE: return "parse";
    case PICO_E_SCHEMA: return "schema";
    case PICO_E_DANGLING_REFERENCE: return "dangling_reference";
    case PICO_E_IO: return "io";
    case PICO_E_DEADLOCK: return "deadlock";
    case PICO_E_VERIFICATION: return "verification";
    case PICO_E_ABORTED: return "aborted";
    case PICO_E_NO_TERMINAL: return "no_terminal";
    case PICO_E_INTERNAL: return "internal";
    case PICO_E_RUNS_FAILED: return "runs_failed";
  }
  return "unknown";
}

const char* pico_last_error(void) { return g_last_error.c_str(); }

void pico_string_free(char* s) { std::free(s); }

pico_status pico_builder_new(pico_builder** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new pico_builder();
    return PICO_OK;
  });
}

void pico_builder_free(pico_builder* b) { delete b; }

pico_status pico_builder_set(pico_builder* b, const char* key, const char* value) {
  if (!b || !key || !value) return null_arg("builder, key and value");
  return guarded([&] {
    const std::string err = b->builder.set(key, value);
    return err.empty() ? PICO_OK : set_error(PICO_E_SCHEMA, err);
  });
}

pico_status pico_builder_add_sweep(pico_builder* b, const char* spec) {
  if (!b || !spec) return null_arg("builder and spec");
  return guarded([&] {
    const std::string err = b->builder.add_sweep(spec);
    return err.empty() ? PICO_OK : set_error(PICO_E_SCHEMA, err);
  });
}

pico_status pico_builder_text(const pico_builder* b, char** out) {
  if (!b || !out) return null_arg("builder and out");
  return guarded([&] {
    *out = dup_string(b->builder.text());
    return PICO_OK;
  });
}

pico_status pico_validate_test(const char* test_path) {
  if (!test_path) return null_arg("test_path");
  return guarded([&] {
    pico::load_test(test_path);
    return PICO_OK;
  });
}

pico_status pico_validate_env(const char* env_path) {
  if (!env_path) return null_arg("env_path");
  return guarded([&] {
    pico::load_env(env_path);
    return PICO_OK;
  });
}

pico_status pico_wizard_run(FILE* in, FILE* out, const char* output_path, const char* env_path,
                            int require_tty) {
  if (!in || !out || !output_path) return null_arg("in, out and output_path");
  return guarded([&] {
    if (require_tty && !isatty(fileno(in)))
      return set_error(PICO_E_NO_TERMINAL,
                       "no terminal available for the wizard; use `gen` with flags instead");
    std::optional<pico::EnvConfig> env;
    if (env_path) env = pico::load_env(env_path);
    FileBuf inbuf(in), outbuf(out);
    std::istream is(&inbuf);
    std::ostream os(&outbuf);
    pico::Wizard w(output_path, env ? &*env : nullptr);
    const auto outcome = pico::run_wizard(is, os, w);
    os.flush();
    if (outcome != pico::Wizard::Outcome::written)
      return set_error(PICO_E_ABORTED, "wizard aborted; nothing written");
    return PICO_OK;
  });
}

pico_status pico_run(const char* env_path, const char* test_path, const pico_run_options* options,
                     pico_report** out) {
  if (!env_path || !test_path || !out) return null_arg("env_path, test_path and out");
  *out = nullptr;
  return guarded([&] {
    const pico::EnvConfig env = pico::load_env(env_path);
    const pico::TestConfig test = pico::load_test(test_path);
    const pico::RunPlan plan = pico::plan_runs(env, test);
    std::optional<FileBuf> buf;
    std::optional<std::ostream> progress;
    if (options && options->progress) {
      buf.emplace(options->progress);
      progress.emplace(&*buf);
    }
    auto summary = pico::run(plan, env, test,
                             run_options(options, progress ? &*progress : nullptr));
    if (progress) progress->flush();
    auto report = std::make_unique<pico_report>();
    fill_run_report(*report, summary);
    const bool failed = summary.failed() > 0;
    *out = report.release();
    return failed ? set_error(PICO_E_RUNS_FAILED,
                              std::to_string(summary.failed()) + " run directories failed")
                  : PICO_OK;
  });
}

pico_status pico_replay(const char* metadata_path, const char* output_root,
                        const pico_run_options* options, pico_report** out) {
  if (!metadata_path || !out) return null_arg("metadata_path and out");
  *out = nullptr;
  return guarded([&] {
    std::optional<FileBuf> buf;
    std::optional<std::ostream> progress;
    if (options && options->progress) {
      buf.emplace(options->progress);
      progress.emplace(&*buf);
    }
    auto summary =
        pico::replay(metadata_path, run_options(options, progress ? &*progress : nullptr),
                     output_root ? std::filesystem::path(output_root) : std::filesystem::path());
    if (progress) progress->flush();
    auto report = std::make_unique<pico_report>();
    fill_run_report(*report, summary);
    const bool failed = summary.failed() > 0;
    *out = report.release();
    return failed ? set_error(PICO_E_RUNS_FAILED, "replayed run failed") : PICO_OK;
  });
}

pico_status pico_analyze(const char* index_path, const pico_analyze_options* options,
                         pico_report** out) {
  if (!index_path || !out) return null_arg("index_path and out");
  *out = nullptr;
  pico_analyze_options o{};
  if (options) o = *options;
  return guarded([&] {
    namespace fs = std::filesystem;
    const fs::path index(index_path);
    const auto rows = pico::read_index(index);
    pico::RecordTable table = pico::aggregate(rows, index.parent_path());

    // Narrow to one backend/variant pair.
    std::set<std::pair<std::string, std::string>> groups;
    std::vector<pico::Record> records;
    for (auto& r : table.records) {
      if (o.backend && r.backend != o.backend) continue;
      if (o.variant && r.variant != o.variant) continue;
      groups.insert({r.backend, r.variant});
      records.push_back(std::move(r));
    }
    if (groups.size() > 1) {
      std::string choices;
      for (const auto& [b, v] : groups) choices += "\n  --backend " + b + " --variant " + v;
      return set_error(PICO_E_USAGE, "results mix several backends or variants; pick one:" + choices);
    }
    std::string test_id = "analysis";
    std::string system;
    for (const auto& row : rows)
      if (row.status == "ok") {
        test_id = row.test_id;
        system = row.system;
        break;
      }
    const pico::ArtifactMeta meta{test_id, system,
                                  groups.empty() ? "" : groups.begin()->first + "_" +
                                                           groups.begin()->second};
    const fs::path out_dir = o.out_dir ? fs::path(o.out_dir) : index.parent_path() / "analysis";

    auto report = std::make_unique<pico_report>();
    std::ostringstream text;
    text << "records " << records.size() << " from " << table.files << " files";
    if (table.skipped_rows) text << ", skipped " << table.skipped_rows << " corrupted rows";
    text << '\n';
    auto emit = [&](pico::ArtifactKind kind, const pico::ChartData& d) {
      const auto a = pico::render(kind, d, meta, out_dir);
      report->outputs.push_back(a.svg.string());
      report->outputs.push_back(a.csv.string());
    };

    std::optional<pico::AlgorithmId> reference;
    if (o.gain_reference) {
      reference = parse_reference(o.gain_reference);
      if (!reference)
        return set_error(PICO_E_USAGE,
                         std::string("unknown reference algorithm: ") + o.gain_reference);
      const pico::GainMatrix g = pico::gain_matrix(records, *reference);
      emit(pico::ArtifactKind::heatmap, pico::heatmap_data(g));
      for (std::size_t i = 0; i < g.ranks.size(); ++i) {
        text << "p=" << g.ranks[i] << ':';
        for (const auto& c : g.cells[i]) text << ' ' << (c ? pico::format_label(*c) : "n/a");
        text << '\n';
      }
    }
    if (o.phases) emit(pico::ArtifactKind::breakdown,
                       pico::breakdown_data(pico::phase_breakdown(records)));
    if (o.plots) {
      std::set<int> ranks;
      for (const auto& r : records) ranks.insert(r.ranks);
      if (ranks.empty()) return set_error(PICO_E_USAGE, "no records to plot");
      const int p = *ranks.rbegin();
      emit(pico::ArtifactKind::lines, pico::lines_data(records, p));
      if (reference) emit(pico::ArtifactKind::bars, pico::bars_data(records, *reference, p));
    }
    if (o.tuning) {
      const pico::TuningTable t = pico::emit_tuning_table(records);
      fs::create_directories(out_dir);
      const fs::path path = out_dir / (test_id + "_tuning.txt");
      pico::write_tuning_table(t, path);
      report->outputs.push_back(path.string());
      text << t.rules.size() << " tuning rules\n";
    }
    for (const auto& f : report->outputs) text << "wrote " << f << '\n';
    report->text = text.str();
    *out = report.release();
    return PICO_OK;
  });
}

pico_status pico_trace(const char* test_path, const char* topology_path, const char* policy,
                       size_t msg_bytes, const char* out_dir, pico_report** out) {
  if (!test_path || !topology_path || !policy || !out)
    return null_arg("test_path, topology_path, policy and out");
  *out = nullptr;
  return guarded([&] {
    namespace fs = std::filesystem;
    const pico::TestConfig test = pico::load_test(test_path);
    const pico::Topology topo = pico::load_topology(topology_path);
    const auto pol = pico::parse_allocation_policy(policy);
    if (!pol) return set_error(PICO_E_USAGE, std::string("unknown policy: ") + policy);
    const std::size_t n = msg_bytes ? msg_bytes : test.sizes.expand().back();

    auto report = std::make_unique<pico_report>();
    std::ostringstream text;
    std::vector<pico::TrafficReport> reports;
    for (int p : test.ranks) {
      const pico::Allocation alloc = pico::make_allocation(*pol, p, topo);
      text << "p=" << p << " policy=" << pico::to_string(*pol) << " bytes=" << n << '\n'
           << pico::rank_cell_map(alloc, topo).to_text();
      for (auto a : test.algorithms) {
        pico::Schedule s;
        try {
          s = pico::build_schedule(a, p, n, pico::width(test.datatype));
        } catch (const pico::Error& e) {
          text << "  " << pico::algorithm_name(a) << ": skipped (" << e.what() << ")\n";
          continue;
        }
        auto tr = pico::trace(s, alloc, topo);
        tr.label = std::string(pico::algorithm_name(a)) + " p" + std::to_string(p);
        text << "  " << pico::algorithm_name(a) << ": intra_node=" << tr.intra_node_bytes
             << " local=" << tr.local_bytes << " global=" << tr.global_bytes
             << " total=" << tr.total() << '\n';
        reports.push_back(std::move(tr));
      }
    }
    if (reports.empty()) return set_error(PICO_E_UNSUPPORTED, "no algorithm could be traced");
    const fs::path dir = out_dir ? fs::path(out_dir) : fs::path(".");
    const auto art = pico::render(pico::ArtifactKind::tracer_panel, pico::tracer_data(reports),
                                  {test.test_id, topo.name, std::string(pico::to_string(*pol))},
                                  dir);
    report->outputs = {art.svg.string(), art.csv.string()};
    text << "wrote " << art.svg.string() << "\nwrote " << art.csv.string() << '\n';
    report->text = text.str();
    *out = report.release();
    return PICO_OK;
  });
}

void pico_report_free(pico_report* r) { delete r; }

const char* pico_report_text(const pico_report* r) { return r ? r->text.c_str() : ""; }

size_t pico_report_output_count(const pico_report* r) { return r ? r->outputs.size() : 0; }

const char* pico_report_output(const pico_report* r, size_t i) {
  return r && i < r->outputs.size() ? r->outputs[i].c_str() : nullptr;
}

size_t pico_report_run_count(const pico_report* r) { return r ? r->runs.size() : 0; }

const char* pico_report_run_path(const pico_report* r, size_t i) {
  return r && i < r->runs.size() ? r->run_paths[i].c_str() : nullptr;
}

const char* pico_report_run_status(const pico_report* r, size_t i) {
  return r && i < r->runs.size() ? r->runs[i].status.c_str() : nullptr;
}

const char* pico_report_run_error(const pico_report* r, size_t i) {
  return r && i < r->runs.size() ? r->runs[i].error.c_str() : nullptr;
}

size_t pico_report_failed(const pico_report* r) {
  if (!r) return 0;
  size_t n = 0;
  for (const auto& rd : r->runs) n += rd.status != "ok";
  return n;
}

const char* pico_report_index_path(const pico_report* r) { return r ? r->index.c_str() : ""; }

pico_status pico_schedule_build(const char* collective, const char* algorithm, int ranks,
                                size_t msg_bytes, size_t element_width, pico_schedule** out) {
  if (!collective || !algorithm || !out) return null_arg("collective, algorithm and out");
  *out = nullptr;
  return guarded([&] {
    const auto c = pico::parse_collective(collective);
    if (!c) return set_error(PICO_E_USAGE, std::string("unknown collective: ") + collective);
    const auto a = pico::parse_algorithm(*c, algorithm);
    if (!a)
      return set_error(PICO_E_USAGE, std::string("unknown ") + collective +
                                         " algorithm: " + algorithm);
    *out = new pico_schedule{pico::build_schedule(*a, ranks, msg_bytes, element_width)};
    return PICO_OK;
  });
}

void pico_schedule_free(pico_schedule* s) { delete s; }

size_t pico_schedule_steps(const pico_schedule* s) { return s ? s->schedule.step_count() : 0; }

pico_status pico_schedule_text(const pico_schedule* s, char** out) {
  if (!s || !out) return null_arg("schedule and out");
  return guarded([&] {
    *out = dup_string(pico::to_text(s->schedule));
    return PICO_OK;
  });
}

pico_status pico_schedule_cost_terms(const pico_schedule* s, int rank, pico_cost_terms* out) {
  if (!s || !out) return null_arg("schedule and out");
  return guarded([&] {
    const auto ct = pico::cost_terms(s->schedule, rank);
    *out = {ct.steps, ct.bytes_sent, ct.reduced_elements, ct.bytes_received, ct.copy_bytes,
            ct.allocations};
    return PICO_OK;
  });
}

pico_status pico_schedule_predict(const pico_schedule* s, double alpha, double beta, double gamma,
                                  double* seconds) {
  if (!s || !seconds) return null_arg("schedule and seconds");
  return guarded([&] {
    const auto m = pico::NetworkModel::uniform(alpha, beta, gamma);
    m.validate();
    *seconds = pico::predict_closed_form(s->schedule, m);
    return PICO_OK;
  });
}

pico_status pico_schedule_simulate(const pico_schedule* s, double alpha, double beta, double gamma,
                                   double* seconds) {
  if (!s || !seconds) return null_arg("schedule and seconds");
  return guarded([&] {
    const auto m = pico::NetworkModel::uniform(alpha, beta, gamma);
    *seconds = pico::simulate(s->schedule, m).max_completion();
    return PICO_OK;
  });
}

}  // extern "C"
