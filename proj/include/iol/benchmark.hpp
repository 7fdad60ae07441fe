#pragma once

// Back-prediction benchmark of the classical formulas, the raytracer and the
// two fine-tuned networks over one or more cohorts, with a CSV report and an
// aligned text table. Output depends only on the inputs and the seed.

#include <limits>
#include <string>
#include <vector>

#include "iol/baselines.hpp"
#include "iol/cohort.hpp"
#include "iol/evaluation.hpp"
#include "iol/training.hpp"

namespace iol {

enum class WilcoxonPairs { per_fold, per_patient };

inline constexpr std::string_view kSoloMethod = "solo_nn";
inline constexpr std::string_view kPhysMethod = "physnet";

struct BenchmarkDataset {
  std::string name;
  Cohort cohort;
};

/// Pseudo-real site cohort: n eyes sampled from `ranges`, labeled by the
/// oracle and perturbed by the site model. Ids are "<name>-000001", ...
struct SiteDataset {
  BenchmarkDataset dataset;
  std::vector<std::string> dropped;
};
SiteDataset make_site_dataset(const std::string& name, std::size_t n, const SamplingRanges& ranges,
                              const SiteModel& site, std::uint64_t seed, const ModelSetup& model);

/// Concatenation of datasets under a new name.
BenchmarkDataset combine_datasets(const std::string& name, const std::vector<BenchmarkDataset>& parts);

struct BenchmarkSettings {
  std::vector<std::string> methods{"srkt", "hofferq", "holladay1", "haigis", "raytracer", "solo_nn", "physnet"};
  FormulaConstants constants;
  EvaluationOptions eval;
  FinetuneOptions finetune;
  InitOptions init;
  std::size_t folds = 10;
  SplitFractions split;
  double solo_discard_rmse = 1.0;  // D; Solo NN folds above this are dropped from the summary
  WilcoxonPairs pairs = WilcoxonPairs::per_fold;
  double max_skipped_fraction = 0.1;  // a method skipping more test cases than this fails
  std::uint64_t seed = 0;
  ModelSetup model;
};

struct BenchmarkRow {
  std::string dataset;
  std::string method;
  Summary summary;
  double p_value = std::numeric_limits<double>::quiet_NaN();  // vs physnet
  std::string stars;
  std::size_t n_discarded = 0;
  std::size_t n_skipped = 0;
  bool failed = false;
  std::string failure;
  std::vector<FoldMetrics> folds;  // retained folds
  std::vector<CaseResult> cases;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::vector<std::string> log;
};

BenchmarkReport run_benchmark(const std::vector<BenchmarkDataset>& datasets, const NetParams& pretrained,
                              const BenchmarkSettings& settings);

inline constexpr std::string_view kReportHeader =
    "dataset,method,rmse_p,mae_p,rmse_ref,mae_ref,sd_rmse_p,sd_mae_p,p_value,stars,n_discarded";

std::string report_csv(const BenchmarkReport& report);
std::string report_table(const BenchmarkReport& report);

}  // namespace iol
