#pragma once

#include <stdexcept>
#include <string>

namespace h2sched {

// Bad configuration or violated precondition; maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent or unusable data encountered at runtime; maps to exit code 1.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace h2sched
