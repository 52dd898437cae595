#pragma once

// Post-processing over result files: record loading, gain matrices, phase
// breakdowns and tuning tables.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/orchestrator.hpp"

namespace pico {

struct Record {
  std::string system;
  std::string backend;
  std::string variant;
  CollectiveKind collective = CollectiveKind::allreduce;
  AlgorithmId algorithm = AlgorithmId::allreduce_ring;
  int ranks = 0;
  std::size_t msg_bytes = 0;
  int iteration = -1;  // -1 for Summary rows
  int rank = -1;       // -1 unless Full
  // Full: the rank's time. Statistics/Minimal: max over ranks.
  // Summary: the median over everything.
  double time_ns = 0;
  std::optional<PhaseTimes> phases;  // Full only
  Granularity source = Granularity::full;
  bool aggregate = false;  // Summary rows
};

struct RecordTable {
  std::vector<Record> records;
  std::size_t files = 0;
  std::size_t skipped_rows = 0;
};

// Loads every `ok` run listed in the index. Rows with a bad field count or
// unparsable values are skipped and counted.
RecordTable aggregate(const std::filesystem::path& index_file);
RecordTable aggregate(const std::vector<IndexRow>& rows, const std::filesystem::path& base_dir);
// One result file; appends into `table`.
void load_result_file(const std::filesystem::path& file, const IndexRow& origin,
                      RecordTable& table);

struct CellKey {
  CollectiveKind collective;
  int ranks;
  std::size_t msg_bytes;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

// Median over iterations of the per-iteration completion time (the
// slowest rank), per algorithm and cell.
std::map<CellKey, std::map<AlgorithmId, double>> median_times(const std::vector<Record>& records);

struct GainMatrix {
  AlgorithmId reference = AlgorithmId::allreduce_ring;
  std::vector<int> ranks;
  std::vector<std::size_t> sizes;
  // cells[i][j] for ranks[i], sizes[j]; nullopt when missing.
  std::vector<std::vector<std::optional<double>>> cells;
  // Algorithm the reference was compared against, per cell.
  std::vector<std::vector<std::optional<AlgorithmId>>> against;
};

// Ratio of the best non-reference algorithm's median time to the
// reference's. Below 1 a better alternative exists.
GainMatrix gain_matrix(const std::vector<Record>& records, AlgorithmId reference);

struct PhaseFractions {
  AlgorithmId algorithm;
  int ranks;
  std::size_t msg_bytes;
  // alloc, copy, reduction, communication; sync is excluded.
  std::array<double, 4> fractions{};
  double residual = 0;
};

inline constexpr PhaseTag kBreakdownPhases[] = {PhaseTag::alloc, PhaseTag::copy,
                                                PhaseTag::reduction, PhaseTag::communication};

// Throws Errc::usage when no record carries phase columns.
std::vector<PhaseFractions> phase_breakdown(const std::vector<Record>& records);

struct TuningRule {
  CollectiveKind collective;
  int ranks_min;
  int ranks_max;
  std::size_t bytes_min;
  std::size_t bytes_max;
  AlgorithmId algorithm;

  friend bool operator==(const TuningRule&, const TuningRule&) = default;
};

struct TuningTable {
  std::vector<TuningRule> rules;

  std::optional<AlgorithmId> lookup(CollectiveKind c, int ranks, std::size_t bytes) const;
  std::string to_text() const;
};

// Steps of `id` at p ranks; used to break exact ties.
std::size_t step_count(AlgorithmId id, int ranks);

TuningTable emit_tuning_table(const std::vector<Record>& records);
TuningTable parse_tuning_table(std::string_view text);
void write_tuning_table(const TuningTable& t, const std::filesystem::path& path);

}  // namespace pico
