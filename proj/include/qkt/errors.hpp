#pragma once

#include <stdexcept>
#include <string>

namespace qkt {

// Error taxonomy shared by the library and the CLI.  ConfigError maps to CLI
// exit code 2 (malformed input / precondition violation), BoundError and
// NumericError to exit code 1 (a certified inequality failed at runtime).
struct QktError : std::runtime_error {
  explicit QktError(const std::string& m) : std::runtime_error(m) {}
};

struct ConfigError : QktError {
  explicit ConfigError(const std::string& m) : QktError(m) {}
};

struct BoundError : QktError {
  explicit BoundError(const std::string& m) : QktError(m) {}
};

struct NumericError : QktError {
  explicit NumericError(const std::string& m) : QktError(m) {}
};

}  // namespace qkt
