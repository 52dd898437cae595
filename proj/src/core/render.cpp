#include "core/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pico {

namespace fs = std::filesystem;

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::heatmap: return "heatmap";
    case ArtifactKind::bars: return "bars";
    case ArtifactKind::lines: return "lines";
    case ArtifactKind::breakdown: return "breakdown";
    case ArtifactKind::tracer_panel: break;
  }
  return "tracer_panel";
}

std::optional<ArtifactKind> parse_artifact_kind(std::string_view text) {
  for (auto k : {ArtifactKind::heatmap, ArtifactKind::bars, ArtifactKind::lines,
                 ArtifactKind::breakdown, ArtifactKind::tracer_panel})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::string format_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

namespace {

constexpr const char* kMissing = "n/a";
constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                    "#59a14f", "#edc948", "#b07aa1", "#9c755f"};

std::string esc(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), ',', ';');
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_of(const std::optional<double>& v) { return v ? format_label(*v) : kMissing; }

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& tip = {}) {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"";
    if (tip.empty())
      body_ << "/>\n";
    else
      body_ << "><title>" << esc(tip) << "</title></rect>\n";
  }
  void text(double x, double y, std::string_view s, const char* anchor = "middle",
            int size = 11) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << esc(s) << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333") {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
          << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      body_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    body_ << "\"/>\n";
  }
  void circle(double x, double y, const std::string& fill, const std::string& tip) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"3\" fill=\"" << fill
          << "\"><title>" << esc(tip) << "</title></circle>\n";
  }

  std::string str(const ChartData& d, const ArtifactMeta& meta, ArtifactKind kind) const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\""
        << num(h_) << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_)
        << "\" font-family=\"sans-serif\">\n"
        << "<metadata>test_id=" << esc(meta.test_id) << " system=" << esc(meta.system)
        << " variant=" << esc(meta.variant) << " kind=" << to_string(kind) << "</metadata>\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << num(w_ / 2) << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">"
        << esc(d.title) << "</text>\n"
        << "<text x=\"" << num(w_ / 2) << "\" y=\"36\" font-size=\"10\" text-anchor=\"middle\" "
           "fill=\"#666\">test "
        << esc(meta.test_id) << ", system " << esc(meta.system.empty() ? "-" : meta.system)
        << ", variant " << esc(meta.variant.empty() ? "-" : meta.variant) << "</text>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

constexpr double kLeft = 90, kTop = 50, kRight = 150, kBottom = 60;

std::string heat_color(const std::optional<double>& v) {
  if (!v) return "#dddddd";
  const double t = std::clamp(std::abs(*v - 1.0), 0.0, 1.0);
  const int fade = static_cast<int>(std::lround(255 * (1 - 0.75 * t)));
  char buf[8];
  if (*v < 1)
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
  else
    std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
  return buf;
}

void legend(Svg& svg, const ChartData& d, double x0) {
  for (std::size_t s = 0; s < d.series.size(); ++s) {
    const double y = kTop + 10 + 16 * static_cast<double>(s);
    svg.rect(x0, y - 9, 10, 10, kPalette[s % std::size(kPalette)]);
    svg.text(x0 + 14, y, d.series[s].name, "start", 10);
  }
}

void axes(Svg& svg, const ChartData& d, double w, double h) {
  svg.line(kLeft, kTop, kLeft, kTop + h);
  svg.line(kLeft, kTop + h, kLeft + w, kTop + h);
  svg.text(kLeft + w / 2, kTop + h + 40, d.x_label);
  svg.text(20, kTop + h / 2, d.y_label, "start", 10);
}

double max_value(const ChartData& d) {
  double m = 0;
  for (const auto& s : d.series)
    for (const auto& v : s.values)
      if (v) m = std::max(m, *v);
  return m > 0 ? m : 1;
}

std::string draw(ArtifactKind kind, const ChartData& d, const ArtifactMeta& meta) {
  const std::size_t ncat = d.categories.size();
  const std::size_t nser = d.series.size();
  switch (kind) {
    case ArtifactKind::heatmap: {
      const double cw = 80, ch = 36;
      const double w = cw * static_cast<double>(ncat), h = ch * static_cast<double>(nser);
      Svg svg(kLeft + w + 40, kTop + h + kBottom);
      for (std::size_t r = 0; r < nser; ++r) {
        const double y = kTop + ch * static_cast<double>(r);
        svg.text(kLeft - 8, y + ch / 2 + 4, d.series[r].name, "end");
        for (std::size_t c = 0; c < ncat; ++c) {
          const double x = kLeft + cw * static_cast<double>(c);
          const auto& v = d.series[r].values[c];
          svg.rect(x, y, cw - 2, ch - 2, heat_color(v));
          svg.text(x + cw / 2, y + ch / 2 + 4, label_of(v));
        }
      }
      for (std::size_t c = 0; c < ncat; ++c)
        svg.text(kLeft + cw * (static_cast<double>(c) + 0.5), kTop + h + 16, d.categories[c]);
      svg.text(kLeft + w / 2, kTop + h + 40, d.x_label);
      svg.text(20, kTop + h / 2, d.y_label, "start", 10);
      return svg.str(d, meta, kind);
    }
    case ArtifactKind::bars:
    case ArtifactKind::tracer_panel: {
      const double w = std::max(360.0, 28.0 * static_cast<double>(ncat * (nser + 1))), h = 260;
      Svg svg(kLeft + w + kRight, kTop + h + kBottom);
      axes(svg, d, w, h);
      const double vmax = max_value(d);
      svg.text(kLeft - 6, kTop + 4, format_label(vmax), "end", 9);
      const double slot = w / static_cast<double>(ncat);
      const double bw = slot / static_cast<double>(nser + 1);
      for (std::size_t c = 0; c < ncat; ++c) {
        const double x0 = kLeft + slot * static_cast<double>(c) + bw / 2;
        for (std::size_t s = 0; s < nser; ++s) {
          const auto& v = d.series[s].values[c];
          const double x = x0 + bw * static_cast<double>(s);
          const double bh = v ? h * (*v / vmax) : 0;
          svg.rect(x, kTop + h - bh, bw - 1, bh, kPalette[s % std::size(kPalette)],
                   d.series[s].name + " " + d.categories[c] + ": " + label_of(v));
          svg.text(x + bw / 2, kTop + h - bh - 3, label_of(v), "middle", 8);
        }
        svg.text(kLeft + slot * (static_cast<double>(c) + 0.5), kTop + h + 16, d.categories[c],
                 "middle", 10);
      }
      legend(svg, d, kLeft + w + 12);
      return svg.str(d, meta, kind);
    }
    case ArtifactKind::lines: {
      const double w = std::max(360.0, 60.0 * static_cast<double>(ncat)), h = 260;
      Svg svg(kLeft + w + kRight, kTop + h + kBottom);
      axes(svg, d, w, h);
      const double vmax = max_value(d);
      svg.text(kLeft - 6, kTop + 4, format_label(vmax), "end", 9);
      const double step = ncat > 1 ? w / static_cast<double>(ncat - 1) : 0;
      auto xy = [&](std::size_t c, double v) {
        return std::pair(kLeft + (ncat > 1 ? step * static_cast<double>(c) : w / 2),
                         kTop + h - h * (v / vmax));
      };
      for (std::size_t s = 0; s < nser; ++s) {
        const std::string color = kPalette[s % std::size(kPalette)];
        std::vector<std::pair<double, double>> pts;
        for (std::size_t c = 0; c < ncat; ++c)
          if (const auto& v = d.series[s].values[c]) pts.push_back(xy(c, *v));
        svg.polyline(pts, color);
        for (std::size_t c = 0; c < ncat; ++c)
          if (const auto& v = d.series[s].values[c]) {
            auto [x, y] = xy(c, *v);
            svg.circle(x, y, color, d.series[s].name + " " + d.categories[c] + ": " + label_of(v));
          }
      }
      for (std::size_t c = 0; c < ncat; ++c)
        svg.text(xy(c, 0).first, kTop + h + 16, d.categories[c], "middle", 10);
      legend(svg, d, kLeft + w + 12);
      return svg.str(d, meta, kind);
    }
    case ArtifactKind::breakdown: {
      const double w = std::max(360.0, 48.0 * static_cast<double>(ncat)), h = 260;
      Svg svg(kLeft + w + kRight, kTop + h + kBottom + 40);
      axes(svg, d, w, h);
      const double slot = w / static_cast<double>(ncat);
      for (std::size_t c = 0; c < ncat; ++c) {
        double acc = 0;
        const double x = kLeft + slot * static_cast<double>(c) + slot * 0.15;
        for (std::size_t s = 0; s < nser; ++s) {
          const auto& v = d.series[s].values[c];
          const double seg = v ? h * std::clamp(*v, 0.0, 1.0) : 0;
          svg.rect(x, kTop + h - acc - seg, slot * 0.7, seg, kPalette[s % std::size(kPalette)],
                   d.series[s].name + " " + d.categories[c] + ": " + label_of(v));
          if (v && *v >= 0.08) svg.text(x + slot * 0.35, kTop + h - acc - seg / 2 + 3, label_of(v), "middle", 8);
          acc += seg;
        }
        svg.text(kLeft + slot * (static_cast<double>(c) + 0.5), kTop + h + 16, d.categories[c],
                 "middle", 8);
      }
      legend(svg, d, kLeft + w + 12);
      return svg.str(d, meta, kind);
    }
  }
  fail(Errc::internal, "unknown artifact kind");
}

std::string sidecar(const ChartData& d, ArtifactKind kind) {
  std::ostringstream out;
  out << "series,category,value,label\n";
  for (const auto& s : d.series)
    for (std::size_t c = 0; c < d.categories.size(); ++c) {
      const auto& v = s.values[c];
      out << csv_field(s.name) << ',' << csv_field(d.categories[c]) << ','
          << (v ? format_number(*v) : "") << ',' << label_of(v) << '\n';
    }
  // Axis maximum shown on value charts.
  if (kind == ArtifactKind::bars || kind == ArtifactKind::tracer_panel ||
      kind == ArtifactKind::lines)
    out << "axis,max," << format_number(max_value(d)) << ',' << format_label(max_value(d))
        << '\n';
  return out.str();
}

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(Errc::io, "cannot write " + tmp.string());
    f << text;
    if (!f) fail(Errc::io, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

RenderedArtifact render(ArtifactKind kind, const ChartData& data, const ArtifactMeta& meta,
                        const fs::path& out_dir) {
  if (data.categories.empty() || data.series.empty())
    fail(Errc::usage, std::string(to_string(kind)) + ": nothing to plot");
  for (const auto& s : data.series)
    if (s.values.size() != data.categories.size())
      fail(Errc::usage, std::string(to_string(kind)) + ": series '" + s.name + "' has " +
                            std::to_string(s.values.size()) + " values for " +
                            std::to_string(data.categories.size()) + " categories");
  const std::string svg = draw(kind, data, meta);
  const std::string csv = sidecar(data, kind);
  fs::create_directories(out_dir);
  const std::string stem = meta.test_id + "_" + std::string(to_string(kind));
  RenderedArtifact out{out_dir / (stem + ".svg"), out_dir / (stem + ".csv")};
  write_file(out.svg, svg);
  write_file(out.csv, csv);
  return out;
}

ChartData heatmap_data(const GainMatrix& g) {
  ChartData d;
  d.title = "Gain of best alternative over " + qualified_name(g.reference);
  d.x_label = "message size";
  d.y_label = "ranks";
  for (auto n : g.sizes) d.categories.push_back(format_size(n));
  for (std::size_t i = 0; i < g.ranks.size(); ++i)
    d.series.push_back({"p=" + std::to_string(g.ranks[i]), g.cells[i]});
  return d;
}

namespace {

std::vector<AlgorithmId> algorithms_in(const std::map<CellKey, std::map<AlgorithmId, double>>& m,
                                       int ranks, std::vector<std::size_t>& sizes) {
  std::set<AlgorithmId> algs;
  std::set<std::size_t> ns;
  for (const auto& [cell, per] : m) {
    if (cell.ranks != ranks) continue;
    ns.insert(cell.msg_bytes);
    for (const auto& [a, t] : per) algs.insert(a);
  }
  sizes.assign(ns.begin(), ns.end());
  return {algs.begin(), algs.end()};
}

}  // namespace

ChartData bars_data(const std::vector<Record>& records, AlgorithmId reference, int ranks) {
  const auto m = median_times(records);
  std::vector<std::size_t> sizes;
  const auto algs = algorithms_in(m, ranks, sizes);
  ChartData d;
  d.title = "Median time relative to " + qualified_name(reference) + ", p=" + std::to_string(ranks);
  d.x_label = "message size";
  d.y_label = "normalized time";
  for (auto n : sizes) d.categories.push_back(format_size(n));
  for (AlgorithmId a : algs) {
    Series s{std::string(algorithm_name(a)), {}};
    for (auto n : sizes) {
      const auto& per = m.at({collective_of(a), ranks, n});
      auto ia = per.find(a);
      auto ir = per.find(reference);
      if (ia == per.end() || ir == per.end() || ir->second <= 0)
        s.values.push_back(std::nullopt);
      else
        s.values.push_back(ia->second / ir->second);
    }
    d.series.push_back(std::move(s));
  }
  return d;
}

ChartData lines_data(const std::vector<Record>& records, int ranks) {
  const auto m = median_times(records);
  std::vector<std::size_t> sizes;
  const auto algs = algorithms_in(m, ranks, sizes);
  ChartData d;
  d.title = "Median time, p=" + std::to_string(ranks);
  d.x_label = "message size";
  d.y_label = "time (us)";
  for (auto n : sizes) d.categories.push_back(format_size(n));
  for (AlgorithmId a : algs) {
    Series s{std::string(algorithm_name(a)), {}};
    for (auto n : sizes) {
      auto it = m.find({collective_of(a), ranks, n});
      std::optional<double> v;
      if (it != m.end())
        if (auto ia = it->second.find(a); ia != it->second.end()) v = ia->second / 1e3;
      s.values.push_back(v);
    }
    d.series.push_back(std::move(s));
  }
  return d;
}

ChartData breakdown_data(const std::vector<PhaseFractions>& fractions) {
  ChartData d;
  d.title = "Execution time breakdown";
  d.x_label = "algorithm, ranks, size";
  d.y_label = "fraction";
  for (const auto& f : fractions)
    d.categories.push_back(std::string(algorithm_name(f.algorithm)) + " p" +
                           std::to_string(f.ranks) + " " + format_size(f.msg_bytes));
  for (std::size_t i = 0; i < 4; ++i) {
    Series s{std::string(to_string(kBreakdownPhases[i])), {}};
    for (const auto& f : fractions) s.values.push_back(f.fractions[i]);
    d.series.push_back(std::move(s));
  }
  Series residual{"unattributed", {}};
  for (const auto& f : fractions) residual.values.push_back(f.residual);
  d.series.push_back(std::move(residual));
  return d;
}

ChartData tracer_data(const std::vector<TrafficReport>& reports) {
  ChartData d;
  d.title = "Estimated traffic per link class";
  d.x_label = "algorithm";
  d.y_label = "bytes";
  for (const auto& r : reports) d.categories.push_back(r.label);
  Series intra{"intra_node", {}}, local{"local", {}}, global{"global", {}};
  for (const auto& r : reports) {
    intra.values.push_back(static_cast<double>(r.intra_node_bytes));
    local.values.push_back(static_cast<double>(r.local_bytes));
    global.values.push_back(static_cast<double>(r.global_bytes));
  }
  d.series = {std::move(intra), std::move(local), std::move(global)};
  return d;
}

}  // namespace pico
