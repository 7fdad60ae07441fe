#include "iol/solver.hpp"

#include <cmath>
#include <string>

#include "iol/dual.hpp"

namespace iol {

std::string_view method_name(SolveMethod m) noexcept {
  switch (m) {
    case SolveMethod::newton: return "newton";
    case SolveMethod::bisection: return "bisection";
    case SolveMethod::newton_with_fallback: return "newton_with_fallback";
  }
  return "?";
}

namespace {

struct Sample {
  double f;
  double df;
};

Sample eval_with_slope(double r, const EyeBiometry& eye, double ref_t, const OpticalConstants& c,
                       const LensModel& lens) {
  const Dual d = m00(Dual(r, 1.0), biometry_cast<Dual>(eye), Dual(ref_t), c, lens);
  return {d.v, d.d};
}

struct Bracket {
  double neg;  // f(neg) < 0
  double pos;  // f(pos) > 0
};

// Returns false when one endpoint is already an exact root (stored in `root`).
bool open_bracket(const EyeBiometry& eye, double ref_t, const OpticalConstants& c, const LensModel& lens,
                  const SolveOptions& opts, Bracket& b, double& root) {
  require(opts.r_lo > 0.0 && opts.r_hi > opts.r_lo, "solve: bracket must satisfy 0 < r_lo < r_hi");
  const double f_lo = m00(opts.r_lo, eye, ref_t, c, lens);
  const double f_hi = m00(opts.r_hi, eye, ref_t, c, lens);
  if (f_lo == 0.0 || f_hi == 0.0) {
    root = f_lo == 0.0 ? opts.r_lo : opts.r_hi;
    return false;
  }
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    fail(ErrorCategory::no_solution, "M[0,0] does not change sign on [" + std::to_string(opts.r_lo) + ", " +
                                         std::to_string(opts.r_hi) + "] m");
  }
  b = f_lo < 0.0 ? Bracket{opts.r_lo, opts.r_hi} : Bracket{opts.r_hi, opts.r_lo};
  return true;
}

SolveReport finish(double r, int iterations, SolveMethod method, const EyeBiometry& eye, double ref_t,
                   const OpticalConstants& c, const LensModel& lens) {
  SolveReport rep;
  rep.radius = r;
  rep.iterations = iterations;
  rep.method = method;
  rep.residual = std::abs(m00(r, eye, ref_t, c, lens));
  if (!(rep.residual < kRootResidualLimit)) {
    fail(ErrorCategory::convergence, "root residual " + std::to_string(rep.residual) + " above limit");
  }
  rep.power = thick_lens_power(r, lens, c);
  return rep;
}

}  // namespace

SolveReport solve_radius(const EyeBiometry& eye, double ref_t, const OpticalConstants& c, const LensModel& lens,
                         const SolveOptions& opts) {
  Bracket b{};
  double root = 0.0;
  if (!open_bracket(eye, ref_t, c, lens, opts, b, root)) return finish(root, 0, SolveMethod::newton, eye, ref_t, c, lens);

  bool bisected = false;
  double x = 0.5 * (b.neg + b.pos);
  Sample s = eval_with_slope(x, eye, ref_t, c, lens);

  for (int it = 1; it <= opts.max_iter; ++it) {
    if (s.f == 0.0) return finish(x, it - 1, bisected ? SolveMethod::newton_with_fallback : SolveMethod::newton, eye, ref_t, c, lens);
    if (s.f < 0.0) b.neg = x; else b.pos = x;

    const double lo = std::min(b.neg, b.pos);
    const double hi = std::max(b.neg, b.pos);
    double next = x;
    Sample ns{};
    bool accepted = false;
    if (s.df != 0.0) {
      next = x - s.f / s.df;
      if (next > lo && next < hi) {
        ns = eval_with_slope(next, eye, ref_t, c, lens);
        accepted = std::abs(ns.f) < std::abs(s.f);
      }
    }
    if (!accepted) {
      bisected = true;
      next = 0.5 * (lo + hi);
      ns = eval_with_slope(next, eye, ref_t, c, lens);
    }
    const double step = std::abs(next - x);
    x = next;
    s = ns;
    if (step < opts.tol || hi - lo < opts.tol) {
      return finish(x, it, bisected ? SolveMethod::newton_with_fallback : SolveMethod::newton, eye, ref_t, c, lens);
    }
  }
  fail(ErrorCategory::convergence, "Newton/bisection did not converge in " + std::to_string(opts.max_iter) + " iterations");
}

SolveReport bisect_radius(const EyeBiometry& eye, double ref_t, const OpticalConstants& c, const LensModel& lens,
                          const SolveOptions& opts) {
  Bracket b{};
  double root = 0.0;
  if (!open_bracket(eye, ref_t, c, lens, opts, b, root)) return finish(root, 0, SolveMethod::bisection, eye, ref_t, c, lens);

  // Bisection needs ~log2(width / tol) steps; allow at least that many.
  const int limit = std::max(opts.max_iter, 200);
  for (int it = 1; it <= limit; ++it) {
    const double mid = 0.5 * (b.neg + b.pos);
    const double f = m00(mid, eye, ref_t, c, lens);
    if (f == 0.0) return finish(mid, it, SolveMethod::bisection, eye, ref_t, c, lens);
    if (f < 0.0) b.neg = mid; else b.pos = mid;
    if (std::abs(b.pos - b.neg) < opts.tol) {
      return finish(0.5 * (b.neg + b.pos), it, SolveMethod::bisection, eye, ref_t, c, lens);
    }
  }
  fail(ErrorCategory::convergence, "bisection did not converge");
}

double dm00_dr(double r, const EyeBiometry& eye, double ref_t, const OpticalConstants& c, const LensModel& lens) {
  return eval_with_slope(r, eye, ref_t, c, lens).df;
}

double oracle_power(const EyeBiometry& eye, double ref_t, const OpticalConstants& c, const LensModel& lens,
                    const SolveOptions& opts) {
  return solve_radius(eye, ref_t, c, lens, opts).power;
}

}  // namespace iol
