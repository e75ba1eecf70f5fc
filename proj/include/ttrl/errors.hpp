#pragma once

#include <stdexcept>
#include <string>

namespace ttrl {

// Invalid configuration or config file; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ttrl
