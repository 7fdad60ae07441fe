#include "doctest.h"
#include "iol/dual.hpp"
#include "iol/optics.hpp"
#include "test_helpers.hpp"

using namespace iol;
using iol::test::close;

// Frozen values from tests/reference/optics_reference.py (50-digit mpmath).
constexpr double kM00RefEye12mm = 0.01233151938355231351;
constexpr double kCorneaM10 = -35.4877680459;
constexpr double kSagThickness = 0.000936750011688;
constexpr double kPower12_4mm = 19.9315068493;

TEST_CASE("propagation matrix") {
  const auto id = propagation_matrix(0.0);
  CHECK(id.m00 == 1.0);
  CHECK(id.m01 == 0.0);
  CHECK(id.m10 == 0.0);
  CHECK(id.m11 == 1.0);
  const auto p = propagation_matrix(0.012);
  CHECK(p.m01 == 0.012);
  CHECK(determinant(p) == 1.0);
  const auto ab = propagation_matrix(0.001) * propagation_matrix(0.002);
  CHECK(ab.m01 == doctest::Approx(0.003).epsilon(1e-15));
  CHECK(ab.m00 == 1.0);
  CHECK(ab.m10 == 0.0);
  CHECK_THROWS_AS(propagation_matrix(-1e-6), Error);
  CHECK_THROWS_AS(propagation_matrix(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("refraction matrix") {
  const auto same = refraction_matrix(1.336, 1.336, 0.01);
  CHECK(same.m10 == 0.0);
  CHECK(same.m11 == 1.0);
  const auto flat = refraction_matrix(1.0, 1.376, kFlatSurface);
  CHECK(flat.m10 == 0.0);
  CHECK(flat.m11 == doctest::Approx(1.0 / 1.376).epsilon(1e-15));
  const auto cornea = refraction_matrix(1.0, 1.376, 0.0077);
  CHECK(cornea.m10 == doctest::Approx(kCorneaM10).epsilon(1e-10));
  CHECK(determinant(cornea) == doctest::Approx(1.0 / 1.376).epsilon(1e-15));
  try {
    refraction_matrix(1.0, 1.376, 0.0);
    FAIL("zero radius accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::domain);
  }
}

TEST_CASE("target refraction matrix") {
  const auto zero = target_refraction_matrix(0.0);
  CHECK(zero.m10 == 0.0);
  CHECK(target_refraction_matrix(-0.5).m10 == 0.5);
  CHECK(target_refraction_matrix(2.0).m10 == -2.0);
  CHECK(target_refraction_matrix(2.0, TargetSign::flipped).m10 == 2.0);
  CHECK(determinant(target_refraction_matrix(1.25)) == 1.0);
}

TEST_CASE("lens thickness") {
  LensModel constant;
  CHECK(lens_thickness(0.012, constant) == 0.001);
  CHECK(lens_thickness(0.1, constant) == 0.001);
  LensModel sag;
  sag.mode = ThicknessMode::biconvex_sag;
  CHECK(lens_thickness(0.0124, sag) == doctest::Approx(kSagThickness).epsilon(1e-12));
  CHECK(lens_thickness(kFlatSurface, sag) == sag.edge_thickness);
  CHECK(lens_thickness(1e6, sag) == doctest::Approx(sag.edge_thickness).epsilon(1e-9));
  try {
    lens_thickness(0.003, sag);
    FAIL("radius at the semi-aperture accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::geometry);
  }
  // Smooth in R: forward-mode derivative against central differences.
  const Dual d = lens_thickness(Dual(0.0124, 1.0), sag);
  const double fd = iol::test::central_difference([&](double r) { return lens_thickness(r, sag); }, 0.0124, 1e-8);
  CHECK(close(d.d, fd, 1e-6));
}

TEST_CASE("system matrix against the arbitrary-precision chain") {
  const EyeBiometry eye = iol::test::reference_eye();
  const auto m = system_matrix(0.012, eye, 0.0, OpticalConstants{}, LensModel{});
  CHECK(close(m.m00, kM00RefEye12mm, 1e-12));
  CHECK(determinant(m) == doctest::Approx(1.0 / 1.336).epsilon(1e-12));
  CHECK(m00(0.012, eye, 0.0, OpticalConstants{}, LensModel{}) == doctest::Approx(m.m00).epsilon(1e-14));
}

TEST_CASE("degenerate flat system keeps ray height") {
  EyeChain<double> g{0.0, 0.0, kFlatSurface, 0.0, 0.0, kFlatSurface, 0.0, 0.0};
  const auto m = compose(g, OpticalConstants{}, 1.46);
  CHECK(m.m00 == 1.0);
  CHECK(m.m10 == 0.0);
}

TEST_CASE("segments add up to the axial length") {
  const EyeBiometry eye = iol::test::reference_eye();
  LensModel sag;
  sag.mode = ThicknessMode::biconvex_sag;
  const auto g = make_chain(0.011, eye, 0.0, OpticalConstants{}, sag);
  CHECK(g.cct + g.acd + g.lt + g.pcd == doctest::Approx(eye.al).epsilon(1e-15));
}

TEST_CASE("anatomy without a posterior chamber is rejected") {
  EyeBiometry eye = iol::test::reference_eye();
  eye.al = eye.cct + eye.acd_iol + 0.0005;
  try {
    system_matrix(0.012, eye, 0.0, OpticalConstants{}, LensModel{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::anatomy);
  }
}

TEST_CASE("determinants over random eyes") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const EyeBiometry eye = iol::test::random_eye(rng);
    const double r = rng.uniform(0.006, 0.05);
    const double ref = rng.uniform(-3.0, 1.0);
    const auto m = system_matrix(r, eye, ref, OpticalConstants{}, LensModel{});
    REQUIRE(std::abs(determinant(m) - 1.0 / 1.336) < 1e-12);
    const double loss = physical_loss(r, eye, ref, OpticalConstants{}, LensModel{});
    REQUIRE(loss >= 0.0);
    REQUIRE(loss == m00(r, eye, ref, OpticalConstants{}, LensModel{}) * m00(r, eye, ref, OpticalConstants{}, LensModel{}));
  }
}

TEST_CASE("m00 gradients match finite differences for every input") {
  Rng rng(5);
  const OpticalConstants c;
  LensModel sag;
  sag.mode = ThicknessMode::biconvex_sag;
  for (const LensModel& lens : {LensModel{}, sag}) {
    for (int i = 0; i < 100; ++i) {
      const EyeBiometry eye = iol::test::random_eye(rng);
      const double r = rng.uniform(0.008, 0.04);
      const double ref = rng.uniform(-3.0, 1.0);
      // Perturb one input at a time through a Dual seed.
      for (int k = 0; k < 7; ++k) {
        auto eval = [&](auto x) {
          using T = decltype(x);
          Biometry<T> b = biometry_cast<T>(eye);
          T rr(r), rt(ref);
          T* fields[7] = {&rr, &b.al, &b.cct, &b.acd_iol, &b.k_max, &b.k_min, &rt};
          *fields[k] = x;
          return m00(rr, b, rt, c, lens);
        };
        const double base = k == 0 ? r : k == 6 ? ref : std::array{eye.al, eye.cct, eye.acd_iol, eye.k_max, eye.k_min}[k - 1];
        const double h = k == 6 ? 1e-4 : 1e-5 * base;
        const Dual d = eval(Dual(base, 1.0));
        const double fd = iol::test::five_point_difference([&](double x) { return eval(x); }, base, h);
        REQUIRE_MESSAGE(close(d.d, fd, 1e-5, 1e-7), "input " << k << " dual " << d.d << " fd " << fd << " value " << d.v);
      }
    }
  }
}

TEST_CASE("thick lens power") {
  LensModel thin;
  thin.lt_const = 0.0;
  CHECK(thick_lens_power(0.0124, thin, OpticalConstants{}) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(thick_lens_power(0.0124, LensModel{}, OpticalConstants{}) == doctest::Approx(kPower12_4mm).epsilon(1e-10));
  CHECK(thick_lens_power(kFlatSurface, LensModel{}, OpticalConstants{}) == 0.0);
  double prev = thick_lens_power(0.006, LensModel{}, OpticalConstants{});
  for (double r = 0.0061; r <= 0.1; r += 0.0001) {
    const double p = thick_lens_power(r, LensModel{}, OpticalConstants{});
    REQUIRE(p < prev);
    prev = p;
  }
  const Dual d = thick_lens_power(Dual(0.0124, 1.0), LensModel{}, OpticalConstants{});
  const double fd = iol::test::central_difference(
      [](double r) { return thick_lens_power(r, LensModel{}, OpticalConstants{}); }, 0.0124, 1e-9);
  CHECK(close(d.d, fd, 1e-6));
}

TEST_CASE("optics is pure") {
  const EyeBiometry eye = iol::test::reference_eye();
  const auto a = system_matrix(0.0113, eye, -0.5, OpticalConstants{}, LensModel{});
  const auto b = system_matrix(0.0113, eye, -0.5, OpticalConstants{}, LensModel{});
  CHECK(a.m00 == b.m00);
  CHECK(a.m01 == b.m01);
  CHECK(a.m10 == b.m10);
  CHECK(a.m11 == b.m11);
}

TEST_CASE("validation of constants, lens and biometry") {
  OpticalConstants c;
  c.gullstrand = 1.2;
  CHECK_THROWS_AS(validate(c), Error);
  EyeBiometry eye = iol::test::reference_eye();
  eye.k_max = 0.007;
  eye.k_min = 0.008;
  CHECK_THROWS_AS(validate(eye), Error);
  LensModel lens;
  lens.n_l = 0.9;
  CHECK_THROWS_AS(validate(lens), Error);
}
