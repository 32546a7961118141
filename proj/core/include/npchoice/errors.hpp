#pragma once

#include <stdexcept>
#include <string>

namespace npchoice {

// Invalid arguments, configurations or input files. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Failures that happen while running (IO, numerical domain). The CLI maps this to exit code 3.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace npchoice
