#pragma once

// Environment and test descriptors: parsing with field-path diagnostics,
// canonical serialization, and the builder shared by the wizard and `gen`.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/fabric.hpp"
#include "core/netsim.hpp"
#include "core/schedule.hpp"
#include "core/topology.hpp"

namespace pico {

using ojson = nlohmann::ordered_json;

enum class Backend { fabric, netsim, both };
std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view text);

enum class Granularity { full, statistics, minimal, summary };
std::string_view to_string(Granularity g);
std::optional<Granularity> parse_granularity(std::string_view text);

struct EnvConfig {
  std::string system_name;
  std::filesystem::path topology_path;  // resolved against the env file
  Topology topology;
  NetworkModel network_model = default_network_model();
  std::filesystem::path output_root = "results";
  // Free-form labels such as {"library": "pico-fabric", "version": "1"}.
  ojson metadata = ojson::object();
  std::string source_text;
};

struct SizeRange {
  std::size_t min_bytes = 1024;
  std::size_t max_bytes = 1 << 20;
  std::size_t multiplier = 2;

  // min * multiplier^k <= max
  std::vector<std::size_t> expand() const;
  friend bool operator==(const SizeRange&, const SizeRange&) = default;
};

struct Sweep {
  std::string name;
  ojson overrides = ojson::object();
};

struct TestConfig {
  std::string test_id = "test";
  CollectiveKind collective = CollectiveKind::allreduce;
  std::vector<AlgorithmId> algorithms;
  SizeRange sizes;
  DataType datatype = DataType::float32;
  ReduceOp op = ReduceOp::sum;
  std::vector<int> ranks{4};
  int iterations = 10;
  int warmup = 3;
  Backend backend = Backend::fabric;
  Granularity granularity = Granularity::full;
  AllocationPolicy allocation = AllocationPolicy::block;
  std::vector<Sweep> sweeps;
  InstrumentationConfig instrumentation;
  std::optional<std::uint64_t> seed;
  // Descriptor text as read from disk; empty for built configs.
  std::string source_text;

  // One unnamed variant when no sweeps are configured.
  std::vector<Sweep> variants() const;
};

// Every problem found, one per line as `field.path: message`.
struct Diagnostics {
  std::vector<std::string> items;
  void add(const std::string& path, const std::string& message) {
    items.push_back(path + ": " + message);
  }
  bool empty() const { return items.empty(); }
  std::string joined() const;
};

// Throws Errc::parse for malformed JSON, Errc::schema listing every
// violation, and Errc::dangling_reference for a missing topology file.
EnvConfig load_env(const std::filesystem::path& path);
EnvConfig parse_env(std::string_view text, const std::filesystem::path& base_dir);
TestConfig load_test(const std::filesystem::path& path);
TestConfig parse_test(std::string_view text);
TestConfig parse_test(const nlohmann::json& j);

// Field-level checks without throwing; used by the wizard per screen.
Diagnostics check_test(const TestConfig& t);

ojson to_json(const TestConfig& t);
// Canonical text: two-space indent, fixed key order, trailing newline.
std::string to_descriptor_text(const TestConfig& t);

// Resolved model of a sweep variant.
NetworkModel apply_sweep(const NetworkModel& base, const Sweep& sweep);

// "4096", "4KiB", "1MiB", "2GiB"
std::optional<std::size_t> parse_size(std::string_view text);
std::string format_size(std::size_t bytes);

// Single construction path behind `gen` and the wizard. Keys are the
// descriptor fields; list fields take comma-separated values, sizes take
// `min:max:multiplier`, sweeps take `key=v1,v2` (one variant per value).
class TestDescriptorBuilder {
 public:
  TestDescriptorBuilder();

  // Returns an error message, empty when accepted.
  std::string set(std::string_view key, std::string_view value);
  std::string add_sweep(std::string_view spec);

  const TestConfig& config() const { return config_; }
  TestConfig& config() { return config_; }
  Diagnostics check() const { return check_test(config_); }
  // Throws Errc::schema when the current state does not validate.
  std::string text() const;

 private:
  TestConfig config_;
  bool algorithms_set_ = false;
};

}  // namespace pico
