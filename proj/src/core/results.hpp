#pragma once

// Result files at the four granularity levels, plus the small CSV reader
// the analysis side uses to load them back.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "core/config.hpp"
#include "core/fabric.hpp"

namespace pico {

struct ResultKey {
  CollectiveKind collective = CollectiveKind::allreduce;
  AlgorithmId algorithm = AlgorithmId::allreduce_ring;
  int ranks = 0;
  std::size_t msg_bytes = 0;
  std::string variant;
};

std::string_view results_header(Granularity mode);

// Shortest text that parses back to exactly `v`.
std::string format_number(double v);

struct Stats {
  double min = 0;
  double max = 0;
  double mean = 0;
  double median = 0;
  double stddev = 0;  // population
};

// Accumulates in the given order; `values` must be non-empty.
Stats compute_stats(std::vector<double> values);

// Measurements are written in (iteration, rank) order.
std::string format_results(const ResultKey& key, const std::vector<Measurement>& measurements,
                           Granularity mode);
void write_results(const ResultKey& key, const std::vector<Measurement>& measurements,
                   Granularity mode, const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t skipped = 0;  // rows whose field count does not match the header

  // -1 when absent.
  int column(std::string_view name) const;
};

// Plain comma-separated text without quoting.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(std::string_view line);

// Identifies the mode from a header line; nullopt when it matches none.
std::optional<Granularity> detect_granularity(const std::vector<std::string>& header);

}  // namespace pico
