#pragma once

// Error metrics, power-to-refraction conversion, the Wilcoxon signed-rank
// test and back-prediction evaluation over cross-validation folds.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "iol/cohort.hpp"

namespace iol {

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double sd = 0.0;  // population standard deviation
};

Metrics metrics(std::span<const double> errors);

/// Linear conversion of an IOL power error to a spectacle-plane refraction error.
struct LiuFactor {
  double factor = 0.655;
};

void validate(const LiuFactor& f);
inline double liu_convert(double power_error, const LiuFactor& f) { return f.factor * power_error; }

struct WilcoxonResult {
  double w = 0.0;     // min(W+, W-)
  double p = 1.0;     // two-sided
  std::size_t n = 0;  // non-zero differences
  bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactMax = 12;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

/// Two-sided signed-rank test on a - b. Zero differences are dropped, tied
/// magnitudes get mid-ranks. Exact distribution for n <= 12, normal
/// approximation with tie correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// "***" for p < 0.001, "**" for p < 0.01, "*" for p <= 0.05, "" otherwise.
std::string significance_stars(double p);

/// Outcome of back-predicting one case.
struct CaseResult {
  std::string id;
  std::size_t fold = 0;
  double predicted = 0.0;
  double inserted = 0.0;
  double power_error = 0.0;
  double refraction_error = 0.0;
};

/// Predicts the IOL power for a case. Back-prediction passes the case with
/// ref_target already replaced by the measured post-operative refraction.
using Predictor = std::function<double(const EyeCase&)>;

/// Copy of the case set up for back-prediction (ref_target <- postop refraction).
/// Requires inserted_power and postop_refraction.
EyeCase back_prediction_case(const EyeCase& c);

struct CaseEvaluation {
  std::vector<CaseResult> results;
  std::vector<std::string> skipped;  // "id: reason"
};

/// Back-predicts every case; cases missing ground truth or failing the
/// predictor are skipped with a reason. `offset` is subtracted from each prediction.
CaseEvaluation evaluate_cases(const Predictor& predict, std::span<const EyeCase> cases, const LiuFactor& liu,
                              double offset = 0.0, std::size_t fold = 0);

struct FoldMetrics {
  std::size_t fold = 0;
  Metrics power;
  Metrics refraction;
  double offset = 0.0;
  double mean_error = 0.0;  // signed
  std::size_t n_skipped = 0;
};

FoldMetrics fold_metrics(const CaseEvaluation& eval, double offset);

/// Everything a fold needs to build a predictor: the cohort, the fold and the
/// position predictor fitted on the fold's training cases.
struct FoldContext {
  const Cohort& cohort;
  const Fold& fold;
  std::size_t fold_index;
  const PositionPredictor& position;
};

using PredictorFactory = std::function<Predictor(const FoldContext&)>;

struct EvaluationOptions {
  bool calibrate = true;  // subtract the mean training-split error before testing
  LiuFactor liu;
};

struct EvalRecord {
  std::vector<CaseResult> cases;  // test cases of every fold, fold order
  std::vector<FoldMetrics> folds;
  std::vector<std::string> skipped;
  std::size_t n_attempted = 0;
};

/// Mean offset of the predictor on the fold's training cases. Throws a
/// contract error if any calibration case belongs to the fold's test split.
double calibrate_on_training(const Predictor& predict, const Cohort& cohort, const Fold& fold, const LiuFactor& liu);

/// Back-prediction over all folds: per fold, fit the position predictor on
/// the training cases, build the method, optionally calibrate on the training
/// cases, then evaluate the test cases.
EvalRecord wang_evaluate(const PredictorFactory& method, const Cohort& cohort, const FoldPlan& folds,
                         const EvaluationOptions& opts);

struct Summary {
  double rmse_p = 0.0;
  double mae_p = 0.0;
  double rmse_ref = 0.0;
  double mae_ref = 0.0;
  double sd_rmse_p = 0.0;
  double sd_mae_p = 0.0;
  std::size_t n_folds = 0;
};

/// Means and population standard deviations of the per-fold metrics.
Summary summarize(std::span<const FoldMetrics> folds);

}  // namespace iol
