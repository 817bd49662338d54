#pragma once

#include <stdexcept>
#include <string>

namespace cdd {

/// Invalid or missing configuration value; `key` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}

  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace cdd
