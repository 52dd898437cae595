#include "core/wizard.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace pico {

namespace fs = std::filesystem;

std::string_view to_string(WizardScreen s) {
  switch (s) {
    case WizardScreen::collective: return "collective";
    case WizardScreen::algorithms: return "algorithms";
    case WizardScreen::scale: return "ranks, sizes and iterations";
    case WizardScreen::backend: return "backend and network model";
    case WizardScreen::output: return "granularity and output";
    case WizardScreen::review: break;
  }
  return "review";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
  return out;
}

}  // namespace

Wizard::Wizard(fs::path output, const EnvConfig* env) : output_(std::move(output)), env_(env) {}

std::vector<WizardField> Wizard::fields_of(WizardScreen s) const {
  switch (s) {
    case WizardScreen::collective:
      return {{"collective", "Collective to benchmark: allreduce, reduce_scatter, allgather or "
                             "alltoall. The algorithm list on the next screen depends on it."},
              {"datatype", "Element type: int32, int64, float32 or float64."},
              {"op", "Reduction operator for reducing collectives: sum, max or min."}};
    case WizardScreen::algorithms: {
      std::vector<std::string> names;
      for (auto a : algorithms_for(builder_.config().collective))
        names.emplace_back(algorithm_name(a));
      return {{"algorithms", "Comma-separated subset of: " + join(names, ", ") +
                                 ", or `all`. Power-of-two-only algorithms fail at other rank "
                                 "counts."}};
    }
    case WizardScreen::scale:
      return {{"ranks", "Comma-separated rank counts, each >= 2."},
              {"sizes", "Message sizes as min:max:multiplier; sizes accept KiB, MiB and GiB, "
                        "e.g. 1KiB:1MiB:2. The multiplier must be >= 2."},
              {"iterations", "Timed iterations per point, >= 1."},
              {"warmup", "Untimed iterations before timing, >= 0."}};
    case WizardScreen::backend:
      return {{"backend", "fabric executes real payloads on threads, netsim computes virtual "
                          "time from the network model, both runs each point twice."},
              {"sweep", "Network model variants as key=v1,v2 (e.g. rails=2,4); several keys "
                        "separated by `;` combine as a cross product. `none` for a single "
                        "variant."}};
    case WizardScreen::output:
      return {{"granularity", "full keeps every rank and iteration; statistics keeps per-"
                              "iteration min/max/mean/median; minimal keeps the per-iteration "
                              "maximum; summary keeps one aggregate row."},
              {"allocation", "Rank placement: block fills nodes in order, rr deals ranks "
                             "round-robin across groups."},
              {"test_id", "Identifier used in the index and in plot names."},
              {"output", "Path of the descriptor file to write."}};
    case WizardScreen::review: break;
  }
  return {};
}

std::optional<WizardField> Wizard::field() const {
  const auto fields = fields_of(screen_);
  if (field_ >= fields.size()) return std::nullopt;
  return fields[field_];
}

std::string Wizard::current(const std::string& key) const {
  const TestConfig& t = builder_.config();
  if (key == "collective") return std::string(to_string(t.collective));
  if (key == "datatype") return std::string(to_string(t.datatype));
  if (key == "op") return std::string(to_string(t.op));
  if (key == "algorithms") {
    std::vector<std::string> names;
    for (auto a : t.algorithms) names.emplace_back(algorithm_name(a));
    return join(names, ",");
  }
  if (key == "ranks") {
    std::vector<std::string> v;
    for (int p : t.ranks) v.push_back(std::to_string(p));
    return join(v, ",");
  }
  if (key == "sizes")
    return format_size(t.sizes.min_bytes) + ":" + format_size(t.sizes.max_bytes) + ":" +
           std::to_string(t.sizes.multiplier);
  if (key == "iterations") return std::to_string(t.iterations);
  if (key == "warmup") return std::to_string(t.warmup);
  if (key == "backend") return std::string(to_string(t.backend));
  if (key == "sweep") {
    std::vector<std::string> v;
    for (const auto& s : t.sweeps) v.push_back(s.name);
    return v.empty() ? "none" : join(v, " ");
  }
  if (key == "granularity") return std::string(to_string(t.granularity));
  if (key == "allocation") return std::string(to_string(t.allocation));
  if (key == "test_id") return t.test_id;
  if (key == "output") return output_.string();
  return {};
}

void Wizard::render(std::ostream& out) const {
  for (const auto& m : messages_) out << m << '\n';
  const int n = static_cast<int>(screen_) + 1;
  if (screen_ == WizardScreen::review) {
    out << "[" << n << "/" << kWizardScreens << "] review\n" << review_text();
    if (help_) out << "help: Enter or `w` writes " << output_.string() << ", `b` goes back, `q` aborts.\n";
    out << "write " << output_.string() << "? [w]/b/q: " << std::flush;
    return;
  }
  const auto f = field();
  if (field_ == 0) out << "[" << n << "/" << kWizardScreens << "] " << to_string(screen_) << '\n';
  if (help_ && f) out << "help: " << f->help << '\n';
  if (f) out << f->key << " [" << current(f->key) << "]: " << std::flush;
}

std::string Wizard::review_text() const { return to_descriptor_text(builder_.config()); }

std::string Wizard::validate_screen() const {
  const TestConfig& t = builder_.config();
  Diagnostics d = check_test(t);
  // Only the problems that belong to this screen block it.
  std::vector<std::string> prefixes;
  switch (screen_) {
    case WizardScreen::collective: break;
    case WizardScreen::algorithms: prefixes = {"algorithms"}; break;
    case WizardScreen::scale: prefixes = {"ranks", "sizes", "iterations", "warmup"}; break;
    case WizardScreen::backend: prefixes = {"sweeps"}; break;
    case WizardScreen::output: prefixes = {"test_id"}; break;
    case WizardScreen::review: prefixes = {""}; break;
  }
  std::vector<std::string> errs;
  for (const auto& item : d.items)
    for (const auto& p : prefixes)
      if (item.rfind(p, 0) == 0) {
        errs.push_back(item);
        break;
      }
  if (screen_ == WizardScreen::scale && env_)
    for (int p : t.ranks)
      if (p > env_->topology.capacity())
        errs.push_back("ranks: " + std::to_string(p) + " exceeds the capacity " +
                       std::to_string(env_->topology.capacity()) + " of topology '" +
                       env_->topology.name + "'");
  if (screen_ == WizardScreen::output && output_.empty()) errs.push_back("output: required");
  return join(errs, "\n");
}

void Wizard::enter(WizardScreen s) {
  screen_ = s;
  field_ = 0;
}

void Wizard::write() {
  std::string text;
  try {
    text = builder_.text();
  } catch (const Error& e) {
    messages_ = {std::string("error: ") + e.what()};
    return;
  }
  const fs::path tmp = output_.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      messages_ = {"error: cannot write " + output_.string()};
      return;
    }
  }
  std::error_code ec;
  fs::rename(tmp, output_, ec);
  if (ec) {
    fs::remove(tmp, ec);
    messages_ = {"error: cannot write " + output_.string()};
    return;
  }
  messages_ = {"wrote " + output_.string()};
  outcome_ = Outcome::written;
}

Wizard::Outcome Wizard::feed(const std::string& raw) {
  if (outcome_ != Outcome::pending) return outcome_;
  const std::string line = trim(raw);
  messages_.clear();
  if (line == "?") {
    help_ = !help_;
    return outcome_;
  }
  if (line == "q") {
    outcome_ = Outcome::aborted;
    messages_ = {"aborted; nothing written"};
    return outcome_;
  }
  if (line == "b") {
    if (screen_ == WizardScreen::collective)
      messages_ = {"already at the first screen"};
    else
      enter(static_cast<WizardScreen>(static_cast<int>(screen_) - 1));
    return outcome_;
  }
  if (screen_ == WizardScreen::review) {
    if (line.empty() || line == "w")
      write();
    else
      messages_ = {"error: enter w, b or q"};
    return outcome_;
  }

  const auto f = field();
  if (!f) return outcome_;
  if (!line.empty()) {
    std::string err;
    if (f->key == "output") {
      output_ = line;
    } else if (f->key == "sweep") {
      TestDescriptorBuilder trial = builder_;
      trial.config().sweeps.clear();
      if (line != "none") {
        std::size_t start = 0;
        while (err.empty() && start <= line.size()) {
          auto pos = line.find(';', start);
          if (pos == std::string::npos) pos = line.size();
          const std::string spec = trim(line.substr(start, pos - start));
          if (!spec.empty()) err = trial.add_sweep(spec);
          start = pos + 1;
        }
      }
      if (err.empty()) builder_ = trial;
    } else {
      err = builder_.set(f->key, line);
    }
    if (!err.empty()) {
      messages_ = {"error: " + err};
      return outcome_;
    }
  }
  if (++field_ < fields_of(screen_).size()) return outcome_;

  if (std::string err = validate_screen(); !err.empty()) {
    messages_ = {"error: " + err};
    field_ = 0;
    return outcome_;
  }
  enter(static_cast<WizardScreen>(static_cast<int>(screen_) + 1));
  return outcome_;
}

Wizard::Outcome run_wizard(std::istream& in, std::ostream& out, Wizard& wizard) {
  std::string line;
  while (wizard.outcome() == Wizard::Outcome::pending) {
    wizard.render(out);
    if (!std::getline(in, line)) {
      out << "\ninput closed; aborted, nothing written\n";
      return Wizard::Outcome::aborted;
    }
    wizard.feed(line);
  }
  for (const auto& m : wizard.messages()) out << m << '\n';
  return wizard.outcome();
}

}  // namespace pico
