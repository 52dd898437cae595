#pragma once

// Minimal deterministic SVG charts, each with a CSV sidecar holding the
// plotted numbers and the exact label text shown in the SVG.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/analysis.hpp"
#include "core/tracer.hpp"

namespace pico {

enum class ArtifactKind { heatmap, bars, lines, breakdown, tracer_panel };
std::string_view to_string(ArtifactKind k);
std::optional<ArtifactKind> parse_artifact_kind(std::string_view text);

struct Series {
  std::string name;
  std::vector<std::optional<double>> values;  // one per category; nullopt = missing
};

// Heatmap: series are rows, categories columns. Breakdown: series are
// stacked segments. Everything else: series are grouped bars or lines.
struct ChartData {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> series;
};

struct ArtifactMeta {
  std::string test_id = "test";
  std::string system;
  std::string variant;
};

struct RenderedArtifact {
  std::filesystem::path svg;
  std::filesystem::path csv;
};

// Text used for a value in both the SVG and the sidecar.
std::string format_label(double v);

// Throws Errc::usage on empty data or a series whose length differs from
// the category count; nothing is written in that case.
RenderedArtifact render(ArtifactKind kind, const ChartData& data, const ArtifactMeta& meta,
                        const std::filesystem::path& out_dir);

ChartData heatmap_data(const GainMatrix& g);
// Median time per algorithm normalized to `reference` for each size at p.
ChartData bars_data(const std::vector<Record>& records, AlgorithmId reference, int ranks);
// Median time (us) versus size per algorithm at p.
ChartData lines_data(const std::vector<Record>& records, int ranks);
ChartData breakdown_data(const std::vector<PhaseFractions>& fractions);
ChartData tracer_data(const std::vector<TrafficReport>& reports);

}  // namespace pico
