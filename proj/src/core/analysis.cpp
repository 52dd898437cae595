#include "core/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pico {

namespace fs = std::filesystem;

namespace {

std::optional<double> to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::optional<long long> to_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
}

}  // namespace

void load_result_file(const fs::path& file, const IndexRow& origin, RecordTable& table) {
  const CsvTable csv = read_csv(file);
  const auto mode = detect_granularity(csv.header);
  if (!mode) {
    table.skipped_rows += csv.rows.size();
    return;
  }
  ++table.files;
  table.skipped_rows += csv.skipped;
  auto col = [&](std::string_view name) { return csv.column(name); };
  const int c_coll = col("collective"), c_alg = col("algorithm"), c_p = col("ranks"),
            c_n = col("msg_bytes"), c_var = col("variant");
  for (const auto& row : csv.rows) {
    Record r;
    r.system = origin.system;
    r.backend = origin.backend;
    r.variant = row[c_var];
    r.source = *mode;
    const auto coll = parse_collective(row[c_coll]);
    const auto alg = coll ? parse_algorithm(*coll, row[c_alg]) : std::nullopt;
    const auto p = to_int(row[c_p]);
    const auto n = to_int(row[c_n]);
    if (!coll || !alg || !p || !n || *p < 1 || *n < 0) {
      ++table.skipped_rows;
      continue;
    }
    r.collective = *coll;
    r.algorithm = *alg;
    r.ranks = static_cast<int>(*p);
    r.msg_bytes = static_cast<std::size_t>(*n);
    bool ok = true;
    auto num = [&](std::string_view name) {
      auto v = to_double(row[col(name)]);
      if (!v) ok = false;
      return v.value_or(0);
    };
    auto integer = [&](std::string_view name) {
      auto v = to_int(row[col(name)]);
      if (!v) ok = false;
      return static_cast<int>(v.value_or(0));
    };
    switch (*mode) {
      case Granularity::full: {
        r.iteration = integer("iteration");
        r.rank = integer("rank");
        r.time_ns = num("total_ns");
        PhaseTimes ph{};
        for (PhaseTag t : kAllPhases) ph[index(t)] = num(std::string(to_string(t)) + "_ns");
        r.phases = ph;
        break;
      }
      case Granularity::statistics:
      case Granularity::minimal:
        r.iteration = integer("iteration");
        r.time_ns = num("max_ns");
        break;
      case Granularity::summary:
        r.time_ns = num("median_ns");
        r.aggregate = true;
        break;
    }
    if (!ok) {
      ++table.skipped_rows;
      continue;
    }
    table.records.push_back(std::move(r));
  }
}

RecordTable aggregate(const std::vector<IndexRow>& rows, const fs::path& base_dir) {
  RecordTable table;
  for (const auto& row : rows) {
    if (row.status != "ok") continue;
    const fs::path dir = base_dir / row.path;
    if (!fs::is_directory(dir)) fail(Errc::dangling_reference, "index path missing: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".csv" && e.path().filename() != "alloc.csv")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load_result_file(f, row, table);
  }
  return table;
}

RecordTable aggregate(const fs::path& index_file) {
  return aggregate(read_index(index_file), index_file.parent_path());
}

std::map<CellKey, std::map<AlgorithmId, double>> median_times(const std::vector<Record>& records) {
  // (cell, algorithm, iteration) -> slowest rank
  std::map<std::tuple<CellKey, AlgorithmId, int>, double> per_iteration;
  std::map<std::pair<CellKey, AlgorithmId>, std::vector<double>> summaries;
  for (const auto& r : records) {
    const CellKey cell{r.collective, r.ranks, r.msg_bytes};
    if (r.aggregate) {
      summaries[{cell, r.algorithm}].push_back(r.time_ns);
      continue;
    }
    auto [it, inserted] = per_iteration.try_emplace({cell, r.algorithm, r.iteration}, r.time_ns);
    if (!inserted) it->second = std::max(it->second, r.time_ns);
  }
  std::map<std::pair<CellKey, AlgorithmId>, std::vector<double>> samples;
  for (const auto& [k, v] : per_iteration) samples[{std::get<0>(k), std::get<1>(k)}].push_back(v);
  for (auto& [k, v] : summaries)
    if (!samples.count(k)) samples[k] = v;

  std::map<CellKey, std::map<AlgorithmId, double>> out;
  for (const auto& [k, v] : samples) out[k.first][k.second] = median_of(v);
  return out;
}

GainMatrix gain_matrix(const std::vector<Record>& records, AlgorithmId reference) {
  GainMatrix g;
  g.reference = reference;
  const auto medians = median_times(records);
  std::set<int> ranks;
  std::set<std::size_t> sizes;
  for (const auto& [cell, algs] : medians) {
    if (cell.collective != collective_of(reference)) continue;
    ranks.insert(cell.ranks);
    sizes.insert(cell.msg_bytes);
  }
  g.ranks.assign(ranks.begin(), ranks.end());
  g.sizes.assign(sizes.begin(), sizes.end());
  g.cells.assign(g.ranks.size(), std::vector<std::optional<double>>(g.sizes.size()));
  g.against.assign(g.ranks.size(), std::vector<std::optional<AlgorithmId>>(g.sizes.size()));
  for (std::size_t i = 0; i < g.ranks.size(); ++i) {
    for (std::size_t j = 0; j < g.sizes.size(); ++j) {
      auto it = medians.find({collective_of(reference), g.ranks[i], g.sizes[j]});
      if (it == medians.end()) continue;
      const auto& algs = it->second;
      auto ref = algs.find(reference);
      if (ref == algs.end()) continue;
      std::optional<std::pair<double, AlgorithmId>> best;
      for (const auto& [a, t] : algs)
        if (a != reference && (!best || t < best->first)) best = {t, a};
      if (!best) continue;
      // Exact ties give 1 without dividing zero by zero.
      g.cells[i][j] = best->first == ref->second ? 1.0 : best->first / ref->second;
      g.against[i][j] = best->second;
    }
  }
  return g;
}

std::vector<PhaseFractions> phase_breakdown(const std::vector<Record>& records) {
  std::map<std::tuple<AlgorithmId, int, std::size_t>, std::vector<const Record*>> groups;
  for (const auto& r : records)
    if (r.phases) groups[{r.algorithm, r.ranks, r.msg_bytes}].push_back(&r);
  if (groups.empty())
    fail(Errc::usage, "phase breakdown needs full-granularity results with phase columns");

  std::vector<PhaseFractions> out;
  for (auto& [key, recs] : groups) {
    // The lower-median record by total time keeps the phases consistent
    // with one another.
    std::sort(recs.begin(), recs.end(), [](const Record* a, const Record* b) {
      return std::tuple(a->time_ns, a->iteration, a->rank) <
             std::tuple(b->time_ns, b->iteration, b->rank);
    });
    const Record& m = *recs[(recs.size() - 1) / 2];
    PhaseFractions pf{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}, 0};
    double attributed = 0;
    for (PhaseTag t : kBreakdownPhases) attributed += (*m.phases)[index(t)];
    const double denom = std::max(m.time_ns, attributed);
    double sum = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double v = (*m.phases)[index(kBreakdownPhases[i])];
      pf.fractions[i] = denom > 0 ? v / denom : 0;
      sum += pf.fractions[i];
    }
    pf.residual = std::max(0.0, 1.0 - sum);
    out.push_back(pf);
  }
  return out;
}

std::optional<AlgorithmId> TuningTable::lookup(CollectiveKind c, int ranks,
                                               std::size_t bytes) const {
  for (const auto& r : rules)
    if (r.collective == c && ranks >= r.ranks_min && ranks <= r.ranks_max &&
        bytes >= r.bytes_min && bytes <= r.bytes_max)
      return r.algorithm;
  return std::nullopt;
}

std::string TuningTable::to_text() const {
  std::ostringstream out;
  out << "# collective ranks_min ranks_max bytes_min bytes_max algorithm\n";
  for (const auto& r : rules)
    out << to_string(r.collective) << ' ' << r.ranks_min << ' ' << r.ranks_max << ' '
        << r.bytes_min << ' ' << r.bytes_max << ' ' << algorithm_name(r.algorithm) << '\n';
  return out.str();
}

std::size_t step_count(AlgorithmId id, int ranks) {
  if (!supports_ranks(id, ranks)) return std::numeric_limits<std::size_t>::max();
  return build_schedule(id, ranks, static_cast<std::size_t>(ranks) * 8, 8).step_count();
}

TuningTable emit_tuning_table(const std::vector<Record>& records) {
  const auto medians = median_times(records);
  std::map<CollectiveKind, std::set<int>> ranks;
  std::map<CollectiveKind, std::set<std::size_t>> sizes;
  for (const auto& [cell, algs] : medians) {
    ranks[cell.collective].insert(cell.ranks);
    sizes[cell.collective].insert(cell.msg_bytes);
  }

  TuningTable table;
  for (const auto& [coll, ps] : ranks) {
    const std::vector<int> pv(ps.begin(), ps.end());
    const std::vector<std::size_t> nv(sizes[coll].begin(), sizes[coll].end());
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const int p_hi = i + 1 < pv.size() ? pv[i + 1] - 1 : pv[i];
      std::optional<TuningRule> open;
      for (std::size_t j = 0; j < nv.size(); ++j) {
        const std::size_t n_hi = j + 1 < nv.size() ? nv[j + 1] - 1 : nv[j];
        auto it = medians.find({coll, pv[i], nv[j]});
        // Unmeasured cells inherit the previous choice of the row.
        std::optional<AlgorithmId> choice;
        if (it != medians.end() && !it->second.empty()) {
          const auto& algs = it->second;
          auto better = [&](AlgorithmId a, AlgorithmId b) {
            const double ta = algs.at(a), tb = algs.at(b);
            if (ta != tb) return ta < tb;
            const auto sa = step_count(a, pv[i]), sb = step_count(b, pv[i]);
            if (sa != sb) return sa < sb;
            return algorithm_name(a) < algorithm_name(b);
          };
          AlgorithmId best = algs.begin()->first;
          for (const auto& [a, t] : algs)
            if (better(a, best)) best = a;
          choice = best;
        } else if (open) {
          choice = open->algorithm;
        }
        if (!choice) continue;
        if (open && open->algorithm == *choice) {
          open->bytes_max = n_hi;
          continue;
        }
        if (open) table.rules.push_back(*open);
        open = TuningRule{coll, pv[i], p_hi, nv[j], n_hi, *choice};
      }
      if (open) table.rules.push_back(*open);
    }
  }
  return table;
}

TuningTable parse_tuning_table(std::string_view text) {
  TuningTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string coll, alg, extra;
    long long p0, p1;
    unsigned long long n0, n1;
    if (!(ls >> coll >> p0 >> p1 >> n0 >> n1 >> alg) || (ls >> extra))
      fail(Errc::parse, "tuning rule line " + std::to_string(lineno) +
                            ": expected `collective ranks_min ranks_max bytes_min bytes_max "
                            "algorithm`");
    const auto c = parse_collective(coll);
    const auto a = c ? parse_algorithm(*c, alg) : std::nullopt;
    if (!c || !a)
      fail(Errc::parse, "tuning rule line " + std::to_string(lineno) + ": unknown " +
                            (c ? "algorithm '" + alg + "'" : "collective '" + coll + "'"));
    if (p0 > p1 || n0 > n1 || p0 < 1)
      fail(Errc::parse, "tuning rule line " + std::to_string(lineno) + ": empty interval");
    t.rules.push_back({*c, static_cast<int>(p0), static_cast<int>(p1), n0, n1, *a});
  }
  return t;
}

void write_tuning_table(const TuningTable& t, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io, "cannot write " + path.string());
  f << t.to_text();
}

}  // namespace pico
