#pragma once

// Simulated and pseudo-real eye cohorts, CSV persistence, cross-validation
// folds and the IOL position predictor.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iol/network.hpp"
#include "iol/optics.hpp"
#include "iol/solver.hpp"

namespace iol {

struct EyeCase {
  std::string id;
  EyeBiometry eye;
  double ref_target = 0.0;                  // D
  std::optional<double> inserted_power;     // D
  std::optional<double> postop_refraction;  // D

  friend bool operator==(const EyeCase&, const EyeCase&) = default;
};

inline constexpr double kMaxAbsTarget = 10.0;
inline constexpr double kMinInsertedPower = -5.0;
inline constexpr double kMaxInsertedPower = 40.0;

/// Throws domain errors naming the case id.
void validate(const EyeCase& c);

/// Unlabeled training input. Physical pretraining only ever sees these.
struct EyeSample {
  EyeBiometry eye;
  double ref_t = 0.0;
};

struct LabeledSample {
  EyeSample x;
  double power = 0.0;
};

enum class Provenance { simulated, pseudo_real, ingested };
std::string_view provenance_name(Provenance p) noexcept;

struct Cohort {
  std::vector<EyeCase> cases;
  Provenance provenance = Provenance::simulated;
  std::uint64_t seed = 0;

  friend bool operator==(const Cohort&, const Cohort&) = default;
};

std::vector<EyeSample> unlabeled(const Cohort& cohort);
/// Requires inserted_power on every case.
std::vector<LabeledSample> labeled(const Cohort& cohort);

struct Interval {
  double lo;
  double hi;
};

/// Optional linear coupling of the IOL position to AL:
/// acd_iol = base + slope * (AL - al_ref) + U(-half_width, half_width).
struct PositionCoupling {
  bool enabled = false;
  double base = 0.0046;
  double slope = 0.15;
  double al_ref = 0.025;
  double half_width = 0.00015;
};

struct SamplingRanges {
  Interval al{0.020, 0.030};
  Interval acd_iol{0.0035, 0.0055};
  Interval cct{0.00045, 0.00065};
  Interval k_min{0.0070, 0.0085};
  double k_max_hi = 0.0090;  // k_max drawn from [k_min, k_max_hi]
  Interval ref_t{-3.0, 1.0};
  /// Eyes whose physical IOL power falls outside this range are resampled.
  Interval power{kMinInsertedPower, kMaxInsertedPower};
  PositionCoupling coupling;
};

void validate(const SamplingRanges& r);

/// Per-feature ranges in network input order, for input normalisation.
std::array<FeatureRange, kInputs> feature_ranges(const SamplingRanges& r);

struct ModelSetup {
  OpticalConstants consts;
  LensModel lens;
  SolveOptions solve;
};

/// n cases drawn i.i.d. uniform (rejection sampling on invalid anatomy,
/// non-bracketing eyes and out-of-range powers). Case i draws from its own
/// derived seed, so generation order does not matter.
Cohort sample_cohort(std::size_t n, const SamplingRanges& ranges, std::uint64_t seed, const ModelSetup& model);

/// Sets inserted_power to the physical oracle power of every case.
Cohort label_cohort(const Cohort& cohort, const ModelSetup& model);

/// Surgeon / device effect applied to a labeled cohort.
struct SiteModel {
  double power_bias = 0.0;      // D added to the oracle power
  double noise_sd = 0.0;        // D, gaussian
  double position_shift = 0.0;  // m added to acd_iol
  double lens_step = 0.0;       // D; inserted power rounded to this grid when > 0
  double liu_factor = 0.655;    // power error → refraction error

  friend bool operator==(const SiteModel&, const SiteModel&) = default;
};

struct PseudoRealResult {
  Cohort cohort;
  std::vector<std::string> dropped;  // "id: reason"
};

/// The power the eye needs is oracle + bias + noise; the inserted lens is that
/// power rounded to the lens grid, and the post-operative refraction is the
/// target shifted by the rounding error through the Liu factor.
PseudoRealResult make_pseudo_real(const Cohort& labeled_cohort, const SiteModel& site, std::uint64_t seed);

inline constexpr std::string_view kCohortHeader =
    "id,al_mm,cct_mm,acd_iol_mm,k_max_mm,k_min_mm,ref_target_d,inserted_power_d,postop_refraction_d";

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);
std::string cohort_csv(const Cohort& cohort);
Cohort load_cohort_csv(const std::filesystem::path& path);
Cohort parse_cohort_csv(const std::string& text, const std::string& source = "<memory>");

struct SplitFractions {
  double train = 0.60;
  double val = 0.30;
  double test = 0.10;
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct FoldPlan {
  std::size_t k = 10;
  std::vector<std::size_t> test_fold;  // per case
  std::vector<Fold> folds;
  SplitFractions split;
  std::uint64_t seed = 0;
};

/// Seeded shuffle cut into k near-equal test blocks (sizes differ by at most
/// one, larger blocks last). For each fold the remaining cases, read on from
/// the end of its test block, give floor(val * n) validation cases and the
/// rest for training.
FoldPlan make_folds(std::size_t n, std::size_t k, const SplitFractions& split, std::uint64_t seed);

/// Least-squares map from [AL, CCT, K_max, K_min, Ref_T] to acd_iol.
struct PositionPredictor {
  std::array<double, 5> coefficients{};
  double intercept = 0.0;
  double fit_rmse = 0.0;
  Interval clip{0.0025, 0.0065};
};

inline constexpr std::size_t kMinPositionFitCases = 10;

PositionPredictor fit_position_predictor(const std::vector<EyeCase>& train_cases);
double predict_position(const PositionPredictor& pred, const EyeCase& c);
/// Copy of the case with acd_iol replaced by the predicted position.
EyeCase with_predicted_position(const PositionPredictor& pred, EyeCase c);

std::vector<EyeCase> select(const Cohort& cohort, const std::vector<std::size_t>& indices);

}  // namespace iol
