#pragma once

// Line-oriented form wizard that builds a test descriptor in six screens:
// collective, algorithms, scale, backend, output, review. Input per field:
// a value, empty to keep the shown default, `?` to toggle help, `b` to go
// back a screen, `q` to abort. The file is written only from review.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"

namespace pico {

enum class WizardScreen { collective, algorithms, scale, backend, output, review };
inline constexpr int kWizardScreens = 6;
std::string_view to_string(WizardScreen s);

struct WizardField {
  std::string key;
  std::string help;
};

class Wizard {
 public:
  enum class Outcome { pending, written, aborted };

  explicit Wizard(std::filesystem::path output, const EnvConfig* env = nullptr);

  WizardScreen screen() const { return screen_; }
  std::optional<WizardField> field() const;
  bool help_visible() const { return help_; }
  const std::vector<std::string>& messages() const { return messages_; }
  const TestDescriptorBuilder& builder() const { return builder_; }
  const std::filesystem::path& output() const { return output_; }
  Outcome outcome() const { return outcome_; }

  // Current value of a field as shown in the prompt.
  std::string current(const std::string& key) const;
  // Screen header, optional help overlay and the prompt line.
  void render(std::ostream& out) const;
  // Handles one input line.
  Outcome feed(const std::string& line);
  // Descriptor text the review screen shows and would write.
  std::string review_text() const;

 private:
  std::vector<WizardField> fields_of(WizardScreen s) const;
  std::string validate_screen() const;
  void enter(WizardScreen s);
  void write();

  std::filesystem::path output_;
  const EnvConfig* env_;
  TestDescriptorBuilder builder_;
  WizardScreen screen_ = WizardScreen::collective;
  std::size_t field_ = 0;
  bool help_ = false;
  std::vector<std::string> messages_;
  Outcome outcome_ = Outcome::pending;
};

// Drives a Wizard over streams until it writes or aborts; EOF aborts.
Wizard::Outcome run_wizard(std::istream& in, std::ostream& out, Wizard& wizard);

}  // namespace pico
