#include "iol/error.hpp"

namespace iol {

std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::anatomy: return "anatomy";
    case ErrorCategory::no_solution: return "no_solution";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::evaluation: return "evaluation";
    case ErrorCategory::formula: return "formula_domain";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::config: return "config";
    case ErrorCategory::corrupt_file: return "corrupt_file";
    case ErrorCategory::contract: return "contract";
    case ErrorCategory::insufficient_data: return "insufficient_data";
  }
  return "unknown";
}

}  // namespace iol
