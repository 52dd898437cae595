#pragma once

// Expands a test descriptor into runs, executes them on the fabric and/or
// the simulator, and maintains the on-disk results tree:
//
//   <output_root>/<system>/<timestamp>/<backend>_<variant>/p<N>_<policy>/
//       <collective>_<algorithm>_<bytes>.csv   metadata.log   alloc.csv
//   <output_root>/<system>_index.csv           one row per run directory

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/results.hpp"

namespace pico {

struct RunPoint {
  AlgorithmId algorithm = AlgorithmId::allreduce_ring;
  int ranks = 0;
  std::size_t msg_bytes = 0;
  Sweep variant;
  Backend backend = Backend::fabric;  // never Backend::both
};

struct RunPlan {
  std::vector<RunPoint> points;
};

// Algorithm-major, then ranks, size, variant, backend.
RunPlan plan_runs(const EnvConfig& env, const TestConfig& test);

inline constexpr std::string_view kIndexHeader =
    "timestamp,test_id,system,collective,algorithms,ranks,min_bytes,max_bytes,backend,variants,"
    "status,path";

struct IndexRow {
  std::string timestamp;
  std::string test_id;
  std::string system;
  std::string collective;
  std::string algorithms;  // ';'-separated
  int ranks = 0;
  std::size_t min_bytes = 0;
  std::size_t max_bytes = 0;
  std::string backend;
  std::string variants;
  std::string status;  // ok | failed
  std::string path;    // relative to the index file's directory
};

std::filesystem::path index_path(const std::filesystem::path& output_root,
                                 const std::string& system);
std::vector<IndexRow> read_index(const std::filesystem::path& path);

struct RunOptions {
  std::chrono::milliseconds timeout{10'000};
  int workers = 0;
  // Fixed timestamp directory name; generated when empty.
  std::string timestamp;
  // Progress lines; null for silence.
  std::ostream* progress = nullptr;
  // Called before each point executes; throwing fails that run directory.
  std::function<void(const RunPoint&)> before_point;
};

struct RunDirectory {
  std::filesystem::path path;
  std::string status;
  std::string error;
  std::vector<std::filesystem::path> files;
};

struct RunSummary {
  std::filesystem::path timestamp_dir;
  std::filesystem::path index;
  std::vector<RunDirectory> runs;

  std::size_t failed() const;
  int exit_code() const { return failed() ? 1 : 0; }
};

RunSummary run(const RunPlan& plan, const EnvConfig& env, const TestConfig& test,
               const RunOptions& options = {});

// Sections of a metadata.log.
struct Metadata {
  std::map<std::string, std::string> fields;
  std::map<std::string, std::string> sections;
};

Metadata parse_metadata(const std::filesystem::path& path);

// Re-executes the run directory described by a metadata.log (same backend,
// variant, rank count and parameters) into a fresh timestamp directory.
// `output_root` overrides the recorded one when non-empty.
RunSummary replay(const std::filesystem::path& metadata_path, const RunOptions& options = {},
                  const std::filesystem::path& output_root = {});

std::string make_timestamp();

}  // namespace pico
