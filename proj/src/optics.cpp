#include "iol/optics.hpp"

namespace iol {

namespace {

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

void validate(const EyeBiometry& eye) {
  if (!positive_finite(eye.al) || !positive_finite(eye.cct) || !positive_finite(eye.acd_iol) ||
      !positive_finite(eye.k_max) || !positive_finite(eye.k_min)) {
    fail(ErrorCategory::domain, "biometry fields must be positive and finite");
  }
  if (eye.k_max < eye.k_min) fail(ErrorCategory::domain, "k_max must not be smaller than k_min");
  if (!(eye.al > eye.cct + eye.acd_iol)) {
    fail(ErrorCategory::domain, "axial length must exceed cct + acd_iol");
  }
}

void validate(const OpticalConstants& c) {
  if (!(c.n_v > 1.0) || !(c.n_c > 1.0)) fail(ErrorCategory::domain, "refractive indices must exceed 1");
  if (!(c.gullstrand > 0.0 && c.gullstrand < 1.0)) fail(ErrorCategory::domain, "gullstrand ratio must lie in (0, 1)");
  if (!(c.vertex_distance >= 0.0) || !std::isfinite(c.vertex_distance)) {
    fail(ErrorCategory::domain, "vertex distance must be finite and >= 0");
  }
}

void validate(const LensModel& lens) {
  if (!(lens.n_l > 1.0)) fail(ErrorCategory::domain, "lens index must exceed 1");
  if (lens.mode == ThicknessMode::constant) {
    if (!positive_finite(lens.lt_const)) fail(ErrorCategory::domain, "constant lens thickness must be positive");
  } else {
    if (!positive_finite(lens.edge_thickness) || !positive_finite(lens.semi_aperture)) {
      fail(ErrorCategory::domain, "edge thickness and semi-aperture must be positive");
    }
  }
}

}  // namespace iol
