#pragma once

// Experiment configuration. Every tunable default lives here under a
// section and key; files use the grammar of ini.hpp. Lengths are in metres,
// powers and refractions in dioptres.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iol/baselines.hpp"
#include "iol/benchmark.hpp"
#include "iol/cohort.hpp"
#include "iol/evaluation.hpp"
#include "iol/training.hpp"

namespace iol {

struct SiteConfig {
  std::size_t n_cases = 130;
  SiteModel model;
};

struct EvaluationConfig {
  std::size_t folds = 10;
  SplitFractions split;
  bool calibrate = true;
  LiuFactor liu;
  double solo_discard_rmse = 1.0;  // D; Solo NN folds above this are discarded
  std::vector<std::string> methods{"srkt", "hofferq", "holladay1", "haigis", "raytracer", "solo_nn", "physnet"};
  WilcoxonPairs pairs = WilcoxonPairs::per_fold;
};

struct IoConfig {
  std::string formula_constants;  // constants registry; empty = built-in defaults
  std::string weights;            // pretrained weights; empty = pretrain from [training]
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ModelSetup model;
  SamplingRanges ranges;       // pretraining eyes
  SamplingRanges site_ranges;  // base eyes of the pseudo-real cohorts
  TrainConfig training;
  FinetuneOptions finetune;
  std::vector<std::size_t> figure2_sizes{100, 1000, 10000, 100000};
  std::size_t figure2_repeats = 10;
  SiteConfig site1;
  SiteConfig site2;
  EvaluationConfig evaluation;
  IoConfig io;
};

/// Defaults, including the clinical pseudo-real ranges and the two sites.
ExperimentConfig default_config();

/// Defaults overlaid with the file. Unknown sections or keys are config errors.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<memory>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one "section.key=value" override.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Checks cross-field invariants (ranges, fractions, factor bounds).
void validate(const ExperimentConfig& cfg);

/// Every resolved value as canonical `key = value` text; parse_config of the
/// dump reproduces the configuration exactly.
std::string dump_config(const ExperimentConfig& cfg);

/// FNV-1a of dump_config.
std::string config_hash(const ExperimentConfig& cfg);

/// Formula constants from [io] formula_constants, or the built-in defaults.
FormulaConstants resolve_formula_constants(const ExperimentConfig& cfg);

/// Benchmark settings drawn from the configuration.
BenchmarkSettings benchmark_settings(const ExperimentConfig& cfg, const FormulaConstants& constants);

/// Site 1, site 2 and their union, generated from [site_ranges] and [site1] / [site2].
std::vector<BenchmarkDataset> site_datasets(const ExperimentConfig& cfg, std::vector<std::string>* dropped = nullptr);

}  // namespace iol
