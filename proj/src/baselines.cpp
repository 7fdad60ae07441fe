#include "iol/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iol/error.hpp"
#include "iol/ini.hpp"
#include "iol/solver.hpp"

namespace iol {

std::string_view formula_name(FormulaId id) noexcept {
  switch (id) {
    case FormulaId::srkt: return "srkt";
    case FormulaId::hofferq: return "hofferq";
    case FormulaId::holladay1: return "holladay1";
    case FormulaId::haigis: return "haigis";
    case FormulaId::raytracer: return "raytracer";
  }
  return "?";
}

std::optional<FormulaId> parse_formula(std::string_view name) noexcept {
  for (FormulaId id : kAllFormulas) {
    if (formula_name(id) == name) return id;
  }
  return std::nullopt;
}

void validate(const FormulaConstants& k) {
  for (double v : {k.srkt_a, k.hofferq_pacd, k.holladay1_sf, k.haigis.a0, k.haigis.a1, k.haigis.a2}) {
    if (!std::isfinite(v)) fail(ErrorCategory::config, "formula constants must be finite");
  }
  if (!(k.keratometric_index > 1.0 && k.keratometric_index < 2.0)) {
    fail(ErrorCategory::config, "keratometric index must lie in (1, 2)");
  }
}

FormulaConstants parse_formula_constants(const std::string& text, const std::string& source) {
  const IniDocument doc = parse_ini(text, source, ErrorCategory::config);
  FormulaConstants k;
  for (const IniEntry& e : doc.entries) {
    double* target = nullptr;
    if (e.section == "srkt" && e.key == "a_constant") target = &k.srkt_a;
    else if (e.section == "hofferq" && e.key == "pacd") target = &k.hofferq_pacd;
    else if (e.section == "holladay1" && e.key == "surgeon_factor") target = &k.holladay1_sf;
    else if (e.section == "haigis" && e.key == "a0") target = &k.haigis.a0;
    else if (e.section == "haigis" && e.key == "a1") target = &k.haigis.a1;
    else if (e.section == "haigis" && e.key == "a2") target = &k.haigis.a2;
    else if (e.section == "keratometry" && e.key == "index") target = &k.keratometric_index;
    if (!target) fail(ErrorCategory::config, where(doc, e) + ": unknown formula constant");
    *target = ini_number(doc, e, ErrorCategory::config);
  }
  validate(k);
  return k;
}

FormulaConstants load_formula_constants(const std::filesystem::path& path) {
  return parse_formula_constants(read_text_file(path, ErrorCategory::config), path.string());
}

double keratometric_power(const EyeBiometry& eye, double keratometric_index) {
  return (keratometric_index - 1.0) / eye.mean_k();
}

namespace {

[[noreturn]] void formula_error(std::string_view formula, const std::string& what) {
  fail(ErrorCategory::formula, std::string(formula) + ": " + what);
}

void check_inputs(std::string_view formula, double al_mm, double k, double ref_target) {
  if (!(al_mm > 0.0) || !(k > 0.0) || !std::isfinite(al_mm) || !std::isfinite(k) || !std::isfinite(ref_target)) {
    formula_error(formula, "axial length and corneal power must be positive and finite");
  }
}

double tan_deg(double deg) { return std::tan(deg * std::numbers::pi / 180.0); }

double finite_or_fail(std::string_view formula, double p) {
  if (!std::isfinite(p)) formula_error(formula, "vergence denominator vanished");
  return p;
}

// Thin-lens vergence power used by SRK/T and Holladay 1 (index 4/3 cornea
// model): aqueous index na, corneal index nc, corneal radius r (mm), optical
// axial length l (mm), lens plane c (mm) and spectacle vertex v (mm).
double vergence_power(double na, double nc, double r, double l, double c, double ref, double v) {
  const double ncm1 = nc - 1.0;
  const double num = 1000.0 * na * (na * r - ncm1 * l - 0.001 * ref * (v * (na * r - ncm1 * l) + l * r));
  const double den = (l - c) * (na * r - ncm1 * c - 0.001 * ref * (v * (na * r - ncm1 * c) + c * r));
  return num / den;
}

}  // namespace

double srkt_power(double al_mm, double k_d, double a_constant, double ref_target) {
  check_inputs("srkt", al_mm, k_d, ref_target);
  const double l = al_mm;
  const double lcor = l <= 24.2 ? l : -3.446 + 1.716 * l - 0.0237 * l * l;
  const double cw = -5.41 + 0.58412 * lcor + 0.098 * k_d;
  const double r = 337.5 / k_d;
  const double disc = r * r - cw * cw / 4.0;
  if (disc < 0.0) formula_error("srkt", "corneal height undefined (r^2 < Cw^2 / 4)");
  const double h = r - std::sqrt(disc);
  const double acd_const = 0.62467 * a_constant - 68.747;
  const double elp = h + acd_const - 3.336;
  const double retinal_thickness = 0.65696 - 0.02029 * l;
  const double lopt = l + retinal_thickness;
  return finite_or_fail("srkt", vergence_power(1.336, 1.333, r, lopt, elp, ref_target, 12.0));
}

double hofferq_power(double al_mm, double k_d, double pacd_mm, double ref_target) {
  check_inputs("hofferq", al_mm, k_d, ref_target);
  const double m = al_mm <= 23.0 ? 1.0 : -1.0;
  const double g = al_mm <= 23.0 ? 28.0 : 23.5;
  const double l = std::clamp(al_mm, 18.5, 31.0);
  const double tk = tan_deg(k_d);
  double acd = pacd_mm + 0.3 * (l - 23.5) + tk * tk +
               0.1 * m * (23.5 - l) * (23.5 - l) * tan_deg(0.1 * (g - l) * (g - l)) - 0.99166;
  acd = std::clamp(acd, 2.5, 6.5);
  const double rx = ref_target / (1.0 - 0.012 * ref_target);
  // The axial length clamp applies to the ACD prediction only.
  const double p = 1336.0 / (al_mm - acd - 0.05) - 1.336 / (1.336 / (k_d + rx) - (acd + 0.05) / 1000.0);
  return finite_or_fail("hofferq", p);
}

double holladay1_power(double al_mm, double k_d, double sf_mm, double ref_target) {
  check_inputs("holladay1", al_mm, k_d, ref_target);
  const double r = 337.5 / k_d;
  const double rag = std::max(r, 7.0);
  const double ag = std::min(12.5 * al_mm / 23.45, 13.5);
  const double disc = rag * rag - ag * ag / 4.0;
  if (disc < 0.0) formula_error("holladay1", "anatomic chamber depth undefined");
  const double acd = 0.56 + rag - std::sqrt(disc);
  const double l = al_mm + 0.2;
  return finite_or_fail("holladay1", vergence_power(1.336, 4.0 / 3.0, r, l, acd + sf_mm, ref_target, 12.0));
}

double haigis_power(double al_mm, double corneal_radius_mm, double acd_mm, const HaigisConstants& k,
                    double ref_target) {
  check_inputs("haigis", al_mm, corneal_radius_mm, ref_target);
  const double n = 1.336;
  const double nc = 1.3315;
  const double dx = 0.012;
  const double d = (k.a0 + k.a1 * acd_mm + k.a2 * al_mm) / 1000.0;
  const double l = al_mm / 1000.0;
  if (!(d > 0.0 && d < l)) formula_error("haigis", "lens position outside the eye");
  const double dc = (nc - 1.0) / (corneal_radius_mm / 1000.0);
  const double z = dc + ref_target / (1.0 - ref_target * dx);
  return finite_or_fail("haigis", n / (l - d) - n / (n / z - d));
}

double formula_power(FormulaId id, const EyeCase& c, const FormulaConstants& k, const ModelSetup& model) {
  const double al_mm = c.eye.al * 1e3;
  const double k_d = keratometric_power(c.eye, k.keratometric_index);
  switch (id) {
    case FormulaId::srkt: return srkt_power(al_mm, k_d, k.srkt_a, c.ref_target);
    case FormulaId::hofferq: return hofferq_power(al_mm, k_d, k.hofferq_pacd, c.ref_target);
    case FormulaId::holladay1: return holladay1_power(al_mm, k_d, k.holladay1_sf, c.ref_target);
    case FormulaId::haigis: return haigis_power(al_mm, c.eye.mean_k() * 1e3, c.eye.acd_iol * 1e3, k.haigis, c.ref_target);
    case FormulaId::raytracer: return oracle_power(c.eye, c.ref_target, model.consts, model.lens, model.solve);
  }
  fail(ErrorCategory::contract, "unknown formula id");
}

double offset_calibrate(std::span<const double> predictions, std::span<const double> truths) {
  require(!predictions.empty(), "offset_calibrate: empty input");
  require(predictions.size() == truths.size(), "offset_calibrate: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += predictions[i] - truths[i];
  return sum / static_cast<double>(predictions.size());
}

std::vector<double> apply_offset(std::span<const double> predictions, double offset) {
  std::vector<double> out(predictions.begin(), predictions.end());
  for (double& p : out) p -= offset;
  return out;
}

}  // namespace iol
