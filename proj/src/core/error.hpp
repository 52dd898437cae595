#pragma once

#include <stdexcept>
#include <string>

namespace pico {

enum class Errc {
  usage,
  unsupported,
  parse,
  schema,
  dangling_reference,
  io,
  deadlock,
  verification,
  aborted,
  no_terminal,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace pico
