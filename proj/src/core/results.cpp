#include "core/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace pico {

std::string_view results_header(Granularity mode) {
  switch (mode) {
    case Granularity::full:
      return "collective,algorithm,ranks,msg_bytes,variant,iteration,rank,total_ns,alloc_ns,"
             "copy_ns,reduction_ns,communication_ns,sync_ns";
    case Granularity::statistics:
      return "collective,algorithm,ranks,msg_bytes,variant,iteration,min_ns,max_ns,mean_ns,"
             "median_ns";
    case Granularity::minimal:
      return "collective,algorithm,ranks,msg_bytes,variant,iteration,max_ns";
    case Granularity::summary: break;
  }
  return "collective,algorithm,ranks,msg_bytes,variant,min_ns,max_ns,mean_ns,median_ns,stddev_ns";
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) fail(Errc::internal, "cannot format number");
  return std::string(buf, ptr);
}

Stats compute_stats(std::vector<double> values) {
  if (values.empty()) fail(Errc::usage, "statistics of an empty sample");
  Stats s;
  double sum = 0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  s.mean = sum / n;
  double sq = 0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / n);
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2;
  return s;
}

std::string format_results(const ResultKey& key, const std::vector<Measurement>& measurements,
                           Granularity mode) {
  if (measurements.empty()) fail(Errc::usage, "write_results: no measurements");
  std::vector<Measurement> ms = measurements;
  std::stable_sort(ms.begin(), ms.end(), [](const Measurement& a, const Measurement& b) {
    return std::pair(a.iteration, a.rank) < std::pair(b.iteration, b.rank);
  });

  std::ostringstream out;
  out << results_header(mode) << '\n';
  const std::string prefix = std::string(to_string(key.collective)) + "," +
                             std::string(algorithm_name(key.algorithm)) + "," +
                             std::to_string(key.ranks) + "," + std::to_string(key.msg_bytes) +
                             "," + key.variant + ",";

  std::map<int, std::vector<double>> by_iteration;
  std::vector<double> all;
  for (const auto& m : ms) {
    by_iteration[m.iteration].push_back(m.total_ns);
    all.push_back(m.total_ns);
  }

  switch (mode) {
    case Granularity::full:
      for (const auto& m : ms) {
        out << prefix << m.iteration << ',' << m.rank << ',' << format_number(m.total_ns);
        for (double ph : m.phase_ns) out << ',' << format_number(ph);
        out << '\n';
      }
      break;
    case Granularity::statistics:
      for (const auto& [it, values] : by_iteration) {
        const Stats s = compute_stats(values);
        out << prefix << it << ',' << format_number(s.min) << ',' << format_number(s.max) << ','
            << format_number(s.mean) << ',' << format_number(s.median) << '\n';
      }
      break;
    case Granularity::minimal:
      for (const auto& [it, values] : by_iteration)
        out << prefix << it << ',' << format_number(compute_stats(values).max) << '\n';
      break;
    case Granularity::summary: {
      const Stats s = compute_stats(all);
      out << prefix << format_number(s.min) << ',' << format_number(s.max) << ','
          << format_number(s.mean) << ',' << format_number(s.median) << ','
          << format_number(s.stddev) << '\n';
      break;
    }
  }
  return out.str();
}

void write_results(const ResultKey& key, const std::vector<Measurement>& measurements,
                   Granularity mode, const std::filesystem::path& path) {
  const std::string text = format_results(key, measurements, mode);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io, "cannot write " + path.string());
  f << text;
  if (!f) fail(Errc::io, "write failed: " + path.string());
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  bool first = true;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else if (fields.size() != t.header.size()) {
      ++t.skipped;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::optional<Granularity> detect_granularity(const std::vector<std::string>& header) {
  std::string joined;
  for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + header[i];
  for (auto g : {Granularity::full, Granularity::statistics, Granularity::minimal,
                 Granularity::summary})
    if (results_header(g) == joined) return g;
  return std::nullopt;
}

}  // namespace pico
