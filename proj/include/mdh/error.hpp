#pragma once

#include <stdexcept>
#include <string>

namespace mdh {

// Every failure carries a stable machine-readable code next to the human message.
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& msg)
      : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

[[noreturn]] inline void fail(std::string code, const std::string& msg) {
  throw Error(std::move(code), msg);
}

} // namespace mdh
