#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iol {

/// Coarse failure classes. The CLI maps these onto exit codes.
enum class ErrorCategory {
  domain,        // argument outside an operation's mathematical domain
  geometry,      // lens geometry cannot realise the requested radius
  anatomy,       // biometry leaves no room for the posterior chamber
  no_solution,   // no sign change of M[0,0] on the search bracket
  convergence,   // iterative method or training run failed to converge
  evaluation,    // invalid primitive inside an autodiff graph
  formula,       // classical formula evaluated outside its domain
  parse,         // malformed input file
  config,        // malformed or unknown configuration
  corrupt_file,  // checksum or structural failure on a persisted file
  contract,      // caller violated a documented precondition
  insufficient_data,
};

std::string_view category_name(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, std::string_view message) {
  if (!condition) fail(ErrorCategory::contract, std::string(message));
}

}  // namespace iol
