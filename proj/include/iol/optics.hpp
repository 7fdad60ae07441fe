#pragma once

// Paraxial eye model: element transfer matrices, the pseudophakic eye chain,
// the squared-M[0,0] physical loss and thick-lens IOL power.
//
// Units are SI throughout: lengths in metres, powers and refractions in
// dioptres (1/m). Everything is templated on the scalar type so the same code
// is evaluated on double, on forward-mode Dual (Newton derivative) and on
// reverse-mode Var (network training).

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "iol/autodiff.hpp"
#include "iol/error.hpp"

namespace iol {

/// Radius of a flat surface. Gives an exactly zero power entry.
inline constexpr double kFlatSurface = std::numeric_limits<double>::infinity();

/// 2×2 paraxial transfer matrix acting on the column vector (height, angle).
/// m01 carries metres, m10 carries 1/m.
template <class T>
struct RayMatrix {
  T m00{1.0};
  T m01{0.0};
  T m10{0.0};
  T m11{1.0};
};

template <class T>
RayMatrix<T> operator*(const RayMatrix<T>& a, const RayMatrix<T>& b) {
  return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
          a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

template <class T>
T determinant(const RayMatrix<T>& m) {
  return m.m00 * m.m11 - m.m01 * m.m10;
}

/// Biometry of one pseudophakic eye. Keratometry is stored as radii.
template <class T>
struct Biometry {
  T al{};       // axial length
  T cct{};      // central cornea thickness
  T acd_iol{};  // cornea to IOL front surface
  T k_max{};    // maximum anterior cornea radius
  T k_min{};    // minimum anterior cornea radius

  T mean_k() const { return (k_max + k_min) * 0.5; }

  friend bool operator==(const Biometry&, const Biometry&) = default;
};

using EyeBiometry = Biometry<double>;

template <class T>
Biometry<T> biometry_cast(const EyeBiometry& eye) {
  return {T(eye.al), T(eye.cct), T(eye.acd_iol), T(eye.k_max), T(eye.k_min)};
}

/// Throws ErrorCategory::domain on violation of the biometry invariants.
void validate(const EyeBiometry& eye);

/// Sign of the target-refraction thin element. `standard` puts −Ref_T into
/// the lower-left entry, i.e. a spectacle lens whose power equals Ref_T.
enum class TargetSign { standard, flipped };

struct OpticalConstants {
  double n_v = 1.336;               // aqueous and vitreous
  double n_c = 1.376;               // cornea
  double gullstrand = 6.8 / 7.7;    // posterior / anterior cornea radius
  double vertex_distance = 0.012;   // spectacle plane to cornea
  TargetSign target_sign = TargetSign::standard;
};

void validate(const OpticalConstants& c);

enum class ThicknessMode { constant, biconvex_sag };

/// Equi-biconvex IOL with a single free radius R.
struct LensModel {
  double n_l = 1.46;
  ThicknessMode mode = ThicknessMode::constant;
  double lt_const = 0.001;
  double edge_thickness = 0.0002;
  double semi_aperture = 0.003;
};

void validate(const LensModel& lens);

// ---------------------------------------------------------------------------
// Element matrices

template <class T>
RayMatrix<T> propagation_matrix(const T& x) {
  const double xv = value_of(x);
  if (!(xv >= 0.0) || !std::isfinite(xv)) {
    fail(ErrorCategory::domain, "propagation distance must be finite and >= 0, got " + std::to_string(xv));
  }
  return {T(1.0), x, T(0.0), T(1.0)};
}

/// Refraction from index n1 into n2 at a surface of signed radius r.
/// r = ±kFlatSurface is a plane surface.
template <class T>
RayMatrix<T> refraction_matrix(double n1, double n2, const T& r) {
  if (!(n1 > 0.0) || !(n2 > 0.0)) fail(ErrorCategory::domain, "refractive indices must be positive");
  const double rv = value_of(r);
  if (std::isnan(rv)) fail(ErrorCategory::domain, "surface radius is NaN");
  if (rv == 0.0) fail(ErrorCategory::domain, "singular surface: radius is zero");
  const T power = std::isinf(rv) ? T(0.0) : T(n1 - n2) / (n2 * r);
  return {T(1.0), T(0.0), power, T(n1 / n2)};
}

/// Thin element placed at the spectacle plane that models the target refraction.
template <class T>
RayMatrix<T> target_refraction_matrix(const T& ref_t, TargetSign sign = TargetSign::standard) {
  if (!std::isfinite(value_of(ref_t))) fail(ErrorCategory::domain, "target refraction must be finite");
  return {T(1.0), T(0.0), sign == TargetSign::standard ? -ref_t : ref_t, T(1.0)};
}

/// Central IOL thickness LT(R).
template <class T>
T lens_thickness(const T& r, const LensModel& lens) {
  using std::sqrt;
  const double rv = value_of(r);
  if (!(rv > 0.0)) fail(ErrorCategory::domain, "lens radius must be positive");
  if (lens.mode == ThicknessMode::constant) return T(lens.lt_const);
  const double a = lens.semi_aperture;
  if (!(rv > a)) {
    fail(ErrorCategory::geometry,
         "lens radius " + std::to_string(rv) + " m does not exceed the semi-aperture " + std::to_string(a) + " m");
  }
  if (std::isinf(rv)) return T(lens.edge_thickness);
  // r - sqrt(r^2 - a^2), written without cancellation.
  const T sag = (a * a) / (r + sqrt(r * r - a * a));
  return lens.edge_thickness + 2.0 * sag;
}

// ---------------------------------------------------------------------------
// Eye chain

/// Raw segment description of the pseudophakic eye, ordered as light meets it.
template <class T>
struct EyeChain {
  T ref_t{};          // target refraction at the spectacle plane
  T vertex{};         // spectacle plane to anterior cornea
  T cornea_radius{};  // anterior cornea radius; posterior is gullstrand times this
  T cct{};
  T acd{};
  T lens_radius{};    // front +R, back −R
  T lt{};
  T pcd{};
};

/// The ten element matrices, outermost (retina side) first.
template <class T>
std::array<RayMatrix<T>, 10> chain_elements(const EyeChain<T>& g, const OpticalConstants& c, double n_l) {
  return {propagation_matrix(g.pcd),
          refraction_matrix(n_l, c.n_v, T(-g.lens_radius)),
          propagation_matrix(g.lt),
          refraction_matrix(c.n_v, n_l, g.lens_radius),
          propagation_matrix(g.acd),
          refraction_matrix(c.n_c, c.n_v, T(c.gullstrand * g.cornea_radius)),
          propagation_matrix(g.cct),
          refraction_matrix(1.0, c.n_c, g.cornea_radius),
          propagation_matrix(g.vertex),
          target_refraction_matrix(g.ref_t, c.target_sign)};
}

template <class T>
RayMatrix<T> compose(const EyeChain<T>& g, const OpticalConstants& c, double n_l) {
  const auto elements = chain_elements(g, c, n_l);
  RayMatrix<T> m = elements[0];
  for (std::size_t i = 1; i < elements.size(); ++i) m = m * elements[i];
  return m;
}

/// Builds the chain for radius r, checking that the posterior chamber is non-empty.
template <class T>
EyeChain<T> make_chain(const T& r, const Biometry<T>& eye, const T& ref_t, const OpticalConstants& c,
                       const LensModel& lens) {
  const T lt = lens_thickness(r, lens);
  const T pcd = eye.al - eye.cct - eye.acd_iol - lt;
  if (!(value_of(pcd) > 0.0)) {
    fail(ErrorCategory::anatomy,
         "no room for the posterior chamber: al - cct - acd_iol - LT = " + std::to_string(value_of(pcd)) + " m");
  }
  return {ref_t, T(c.vertex_distance), eye.mean_k(), eye.cct, eye.acd_iol, r, lt, pcd};
}

/// System matrix M of the eye with an equi-biconvex IOL of radius r.
template <class T>
RayMatrix<T> system_matrix(const T& r, const Biometry<T>& eye, const T& ref_t, const OpticalConstants& c,
                           const LensModel& lens) {
  return compose(make_chain(r, eye, ref_t, c, lens), c, lens.n_l);
}

/// M[0,0]: ray height at the retina per unit input height of an axis-parallel
/// ray. Evaluated as the first row of M only.
template <class T>
T m00(const T& r, const Biometry<T>& eye, const T& ref_t, const OpticalConstants& c, const LensModel& lens) {
  const auto elements = chain_elements(make_chain(r, eye, ref_t, c, lens), c, lens.n_l);
  T a = elements[0].m00;
  T b = elements[0].m01;
  for (std::size_t i = 1; i < elements.size(); ++i) {
    const RayMatrix<T>& e = elements[i];
    const T na = a * e.m00 + b * e.m10;
    b = a * e.m01 + b * e.m11;
    a = na;
  }
  return a;
}

template <class T>
T physical_loss(const T& r, const Biometry<T>& eye, const T& ref_t, const OpticalConstants& c,
                const LensModel& lens) {
  return square(m00(r, eye, ref_t, c, lens));
}

/// Thick-lens power of the equi-biconvex IOL immersed in aqueous.
template <class T>
T thick_lens_power(const T& r, const LensModel& lens, const OpticalConstants& c) {
  const T lt = lens_thickness(r, lens);
  const double dn = lens.n_l - c.n_v;
  return dn * (2.0 / r - dn * lt / (lens.n_l * r * r));
}

}  // namespace iol
