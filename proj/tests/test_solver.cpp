#include "doctest.h"
#include "iol/solver.hpp"
#include "test_helpers.hpp"

using namespace iol;
using iol::test::close;

// Frozen bisection roots from tests/reference/optics_reference.py.
constexpr double kRootRefEye = 0.01138186994930009;
constexpr double kPowerRefEye = 21.7077433826;
constexpr double kPowerMyopicTarget = 23.1671176481;  // ref_t = -1 D
constexpr double kPowerLongEye = 12.9877982844;       // al = 26 mm

TEST_CASE("reference eye root") {
  const EyeBiometry eye = iol::test::reference_eye();
  const SolveReport r = solve_radius(eye, 0.0, OpticalConstants{}, LensModel{});
  CHECK(std::abs(r.radius - kRootRefEye) < 1e-12);
  CHECK(r.residual < kRootResidualLimit);
  CHECK(std::abs(m00(r.radius, eye, 0.0, OpticalConstants{}, LensModel{})) < 1e-10);
  CHECK(r.power == doctest::Approx(kPowerRefEye).epsilon(1e-9));
  CHECK(r.power > 18.0);
  CHECK(r.power < 24.0);
  CHECK(physical_loss(r.radius, eye, 0.0, OpticalConstants{}, LensModel{}) < 1e-20);
  CHECK(r == solve_radius(eye, 0.0, OpticalConstants{}, LensModel{}));
  const SolveReport b = bisect_radius(eye, 0.0, OpticalConstants{}, LensModel{});
  CHECK(std::abs(b.radius - r.radius) < 1e-9);
  // Root is bracketed by a sign change.
  const double lo = m00(0.8 * r.radius, eye, 0.0, OpticalConstants{}, LensModel{});
  const double hi = m00(1.2 * r.radius, eye, 0.0, OpticalConstants{}, LensModel{});
  CHECK(lo * hi < 0.0);
  CHECK(dm00_dr(r.radius, eye, 0.0, OpticalConstants{}, LensModel{}) != 0.0);
}

TEST_CASE("target refraction and axial length move the power the physical way") {
  EyeBiometry eye = iol::test::reference_eye();
  const double myopic = oracle_power(eye, -1.0, OpticalConstants{}, LensModel{});
  CHECK(myopic == doctest::Approx(kPowerMyopicTarget).epsilon(1e-9));
  CHECK(myopic > oracle_power(eye, 0.0, OpticalConstants{}, LensModel{}));
  eye.al = 0.026;
  CHECK(oracle_power(eye, 0.0, OpticalConstants{}, LensModel{}) == doctest::Approx(kPowerLongEye).epsilon(1e-9));
}

TEST_CASE("only the mean keratometry matters") {
  EyeBiometry a = iol::test::reference_eye();
  a.k_max = 0.0080;
  a.k_min = 0.0074;
  EyeBiometry b = a;
  std::swap(b.k_max, b.k_min);
  CHECK(oracle_power(a, 0.0, OpticalConstants{}, LensModel{}) == oracle_power(b, 0.0, OpticalConstants{}, LensModel{}));
}

TEST_CASE("dm00_dr matches finite differences") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const EyeBiometry eye = iol::test::random_eye(rng);
    const double r = rng.uniform(0.008, 0.05);
    const double ref = rng.uniform(-3.0, 1.0);
    const double d = dm00_dr(r, eye, ref, OpticalConstants{}, LensModel{});
    const double fd = iol::test::central_difference(
        [&](double x) { return m00(x, eye, ref, OpticalConstants{}, LensModel{}); }, r, 1e-6 * r);
    REQUIRE(close(d, fd, 1e-6, 1e-9));
  }
}

TEST_CASE("flat lens surfaces leave m00 independent of R") {
  LensModel lens;
  lens.n_l = 1.336;  // no index step at the lens, so R has no effect
  const double d = dm00_dr(0.012, iol::test::reference_eye(), 0.0, OpticalConstants{}, lens);
  CHECK(d == 0.0);
}

TEST_CASE("non-bracketing eye is a no-solution error") {
  EyeBiometry eye = iol::test::reference_eye();
  eye.al = 0.0105;  // far too short: even the strongest lens cannot focus
  try {
    solve_radius(eye, 0.0, OpticalConstants{}, LensModel{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::no_solution);
  }
}

TEST_CASE("hybrid and bisection agree on random eyes") {
  Rng rng(17);
  int solved = 0;
  for (int i = 0; i < 300; ++i) {
    const EyeBiometry eye = iol::test::random_eye(rng);
    const double ref = rng.uniform(-3.0, 1.0);
    SolveReport h, b;
    try {
      h = solve_radius(eye, ref, OpticalConstants{}, LensModel{});
    } catch (const Error& e) {
      REQUIRE(e.category() == ErrorCategory::no_solution);
      CHECK_THROWS_AS(bisect_radius(eye, ref, OpticalConstants{}, LensModel{}), Error);
      continue;
    }
    b = bisect_radius(eye, ref, OpticalConstants{}, LensModel{});
    REQUIRE(std::abs(h.radius - b.radius) < 1e-9);
    REQUIRE(h.residual < 1e-10);
    ++solved;
  }
  CHECK(solved > 250);
}
