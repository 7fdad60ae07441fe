#pragma once

// Classical vergence IOL formulas, the raytracing predictor and mean-offset
// calibration.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iol/cohort.hpp"

namespace iol {

enum class FormulaId { srkt, hofferq, holladay1, haigis, raytracer };

inline constexpr std::array<FormulaId, 5> kAllFormulas{FormulaId::srkt, FormulaId::hofferq, FormulaId::holladay1,
                                                       FormulaId::haigis, FormulaId::raytracer};

std::string_view formula_name(FormulaId id) noexcept;
std::optional<FormulaId> parse_formula(std::string_view name) noexcept;

struct HaigisConstants {
  double a0 = 1.527;
  double a1 = 0.4;
  double a2 = 0.1;

  friend bool operator==(const HaigisConstants&, const HaigisConstants&) = default;
};

struct FormulaConstants {
  double srkt_a = 118.4;         // SRK/T A-constant
  double hofferq_pacd = 5.199;   // Hoffer Q personalised ACD (mm)
  double holladay1_sf = 1.450;   // Holladay 1 surgeon factor (mm)
  HaigisConstants haigis;
  double keratometric_index = 1.3375;

  friend bool operator==(const FormulaConstants&, const FormulaConstants&) = default;
};

void validate(const FormulaConstants& k);

/// Reads the constants registry: `[section]` headers (srkt, hofferq,
/// holladay1, haigis, keratometry), `name = value` lines and `#` comments.
FormulaConstants load_formula_constants(const std::filesystem::path& path);
FormulaConstants parse_formula_constants(const std::string& text, const std::string& source = "<memory>");

/// Mean corneal power in keratometric dioptres.
double keratometric_power(const EyeBiometry& eye, double keratometric_index);

// Individual formulas on clinical units: lengths in mm, K in dioptres,
// target refraction in dioptres at the spectacle plane. Each throws a
// formula error when evaluated outside its domain.
double srkt_power(double al_mm, double k_d, double a_constant, double ref_target);
double hofferq_power(double al_mm, double k_d, double pacd_mm, double ref_target);
double holladay1_power(double al_mm, double k_d, double sf_mm, double ref_target);
double haigis_power(double al_mm, double corneal_radius_mm, double acd_mm, const HaigisConstants& k,
                    double ref_target);

/// IOL power predicted by formula `id` for the case's target refraction.
/// The raytracer uses the case's acd_iol as given, so callers substitute a
/// predicted position first when the true one is unknown.
double formula_power(FormulaId id, const EyeCase& c, const FormulaConstants& k, const ModelSetup& model);

/// mean(predictions - truths).
double offset_calibrate(std::span<const double> predictions, std::span<const double> truths);
std::vector<double> apply_offset(std::span<const double> predictions, double offset);

}  // namespace iol
