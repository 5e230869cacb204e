#ifndef TESTALLOC_ERRORS_H_
#define TESTALLOC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace testalloc {

// Malformed configuration or usage. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A model, strategy or estimator invariant did not hold at runtime. The CLI
// maps this to exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace testalloc

#endif  // TESTALLOC_ERRORS_H_
