#pragma once

#include <string_view>

#include "iol/optics.hpp"

namespace iol {

struct SolveOptions {
  double r_lo = 0.005;
  double r_hi = 0.200;
  double tol = 1e-12;  // step / bracket width at which iteration stops (m)
  int max_iter = 100;
};

enum class SolveMethod { newton, bisection, newton_with_fallback };

std::string_view method_name(SolveMethod m) noexcept;

struct SolveReport {
  double radius = 0.0;    // R* (m)
  double power = 0.0;     // thick-lens power at R* (D)
  int iterations = 0;
  double residual = 0.0;  // |M[0,0](R*)|
  SolveMethod method = SolveMethod::newton;

  friend bool operator==(const SolveReport&, const SolveReport&) = default;
};

/// Largest |M[0,0]| accepted at a returned root.
inline constexpr double kRootResidualLimit = 1e-10;

/// Root of M[0,0](R) = 0 on [r_lo, r_hi] by bracketed Newton iteration.
/// Newton candidates that leave the bracket or do not reduce |M[0,0]| are
/// replaced by a bisection step.
/// Throws no_solution when the bracket holds no sign change and convergence
/// when max_iter is exhausted.
SolveReport solve_radius(const EyeBiometry& eye, double ref_t, const OpticalConstants& consts,
                         const LensModel& lens, const SolveOptions& opts = {});

/// Plain bisection on the same bracket; the reference the hybrid is checked against.
SolveReport bisect_radius(const EyeBiometry& eye, double ref_t, const OpticalConstants& consts,
                          const LensModel& lens, const SolveOptions& opts = {});

/// dM[0,0]/dR, forward-mode through the matrix chain.
double dm00_dr(double r, const EyeBiometry& eye, double ref_t, const OpticalConstants& consts,
               const LensModel& lens);

/// Thick-lens power of the physical solution.
double oracle_power(const EyeBiometry& eye, double ref_t, const OpticalConstants& consts, const LensModel& lens,
                    const SolveOptions& opts = {});

}  // namespace iol
