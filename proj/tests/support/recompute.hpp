#pragma once

// Independent recomputation of the aggregated result files from a Full file.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core/results.hpp"

namespace pico::testing {

inline double to_double(const std::string& s) {
  double v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

struct Agg {
  double min, max, mean, median, stddev;
};

inline Agg aggregate_values(std::vector<double> v) {
  Agg a{};
  double sum = 0;
  for (double x : v) sum += x;
  a.mean = sum / static_cast<double>(v.size());
  double sq = 0;
  for (double x : v) sq += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(sq / static_cast<double>(v.size()));
  std::sort(v.begin(), v.end());
  a.min = v.front();
  a.max = v.back();
  const auto n = v.size();
  a.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  return a;
}

// Expected text of `mode` given the text of the Full file.
inline std::string recompute(const std::string& full_text, Granularity mode) {
  const CsvTable t = parse_csv(full_text);
  const int it_col = t.column("iteration"), total_col = t.column("total_ns");
  std::map<int, std::vector<double>> by_it;
  std::vector<double> all;
  std::string prefix;
  for (const auto& row : t.rows) {
    prefix = row[0] + "," + row[1] + "," + row[2] + "," + row[3] + "," + row[4] + ",";
    const double v = to_double(row[total_col]);
    by_it[std::stoi(row[it_col])].push_back(v);
    all.push_back(v);
  }
  std::ostringstream out;
  out << results_header(mode) << '\n';
  auto f = [](double v) { return format_number(v); };
  switch (mode) {
    case Granularity::full: return full_text;
    case Granularity::statistics:
      for (const auto& [it, v] : by_it) {
        const Agg a = aggregate_values(v);
        out << prefix << it << ',' << f(a.min) << ',' << f(a.max) << ',' << f(a.mean) << ','
            << f(a.median) << '\n';
      }
      break;
    case Granularity::minimal:
      for (const auto& [it, v] : by_it)
        out << prefix << it << ',' << f(*std::max_element(v.begin(), v.end())) << '\n';
      break;
    case Granularity::summary: {
      const Agg a = aggregate_values(all);
      out << prefix << f(a.min) << ',' << f(a.max) << ',' << f(a.mean) << ',' << f(a.median)
          << ',' << f(a.stddev) << '\n';
      break;
    }
  }
  return out.str();
}

}  // namespace pico::testing
