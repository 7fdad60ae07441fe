#pragma once

// Unsupervised physical pretraining, supervised power fine-tuning and the
// per-fold fine-tuning protocol.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "iol/cohort.hpp"
#include "iol/evaluation.hpp"
#include "iol/network.hpp"

namespace iol {

enum class LossKind { physical, supervised_mse };
std::string_view loss_name(LossKind k) noexcept;

struct TrainConfig {
  std::size_t n_samples = 10000;
  std::size_t epochs = 200;
  std::size_t batch_size = 0;  // 0: full batch for n_samples <= 1000, else 256
  std::size_t max_steps = 0;   // optimiser step cap, 0 = none
  std::uint64_t seed = 0;
  LossKind loss = LossKind::physical;
  double convergence_rmse_limit = 1.0;  // D
  std::size_t eval_samples = 10000;     // size of the validation and test sets
  std::uint64_t eval_seed = 20240;      // shared by all runs so they see the same held-out eyes
  AdamConfig adam;
  InitOptions init;
  bool parallel = true;
};

void validate(const TrainConfig& cfg);
std::size_t effective_batch_size(const TrainConfig& cfg);

struct CurvePoint {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_rmse = 0.0;
};

struct PretrainResult {
  NetParams params;  // best validation checkpoint
  std::vector<CurvePoint> curve;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
  double val_rmse = 0.0;   // D, at the checkpoint
  double test_rmse = 0.0;  // D, on the held-out test eyes
  bool converged = true;   // test_rmse <= convergence_rmse_limit
};

/// Held-out eyes with physical oracle labels.
struct HeldOut {
  std::vector<EyeSample> eyes;
  std::vector<double> powers;
};

HeldOut make_held_out(std::size_t n, const SamplingRanges& ranges, std::uint64_t seed, const ModelSetup& model);

/// RMSE of the network power against the oracle labels.
double power_rmse(const NetParams& params, const HeldOut& set, const ModelSetup& model, bool parallel = true);

/// Trains a fresh network on n_samples simulated eyes. The physical loss
/// consumes unlabeled eyes only; the supervised loss consumes oracle labels.
/// Validation and test sets are separate simulated cohorts scored against
/// the oracle. Throws a convergence error when the loss becomes non-finite.
PretrainResult pretrain(const TrainConfig& cfg, const SamplingRanges& ranges, const ModelSetup& model);

/// Same, with explicit held-out sets (lets several runs share them).
PretrainResult pretrain(const TrainConfig& cfg, const SamplingRanges& ranges, const ModelSetup& model,
                        const HeldOut& val, const HeldOut& test);

struct FinetuneOptions {
  std::size_t max_epochs = 1000;
  std::size_t patience = 50;   // epochs without validation improvement
  std::size_t batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool parallel = false;       // batches are tiny
};

struct FinetuneResult {
  NetParams params;  // best validation checkpoint
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
};

inline constexpr std::size_t kMinFinetuneCases = 5;

/// Minibatch MSE on P_IOL with early stopping on validation MSE.
FinetuneResult finetune_samples(const NetParams& start, std::span<const LabeledSample> train,
                                std::span<const LabeledSample> val, const FinetuneOptions& opts,
                                const ModelSetup& model);

/// Back-prediction training samples: the position predictor supplies
/// acd_iol, the post-operative refraction is the target, the inserted power the label.
std::vector<LabeledSample> finetune_samples_for(const std::vector<EyeCase>& cases, const PositionPredictor& position);

/// Network predictor for back-prediction evaluation (position from `position`).
Predictor network_predictor(NetParams params, PositionPredictor position, ModelSetup model);

/// Starting parameters for a fold's fine-tuning.
using StartForFold = std::function<NetParams(std::size_t fold)>;

/// Method that fine-tunes start(fold) on each fold's training cases (early
/// stopping on its validation cases). Results are appended to `log` when given.
PredictorFactory finetuned_method(StartForFold start, FinetuneOptions opts, ModelSetup model,
                                  std::vector<FinetuneResult>* log = nullptr);

struct FinetuneRun {
  std::vector<FinetuneResult> folds;
  EvalRecord record;
};

/// Per fold: fit the position predictor on the training cases, fine-tune a
/// copy of `start` on them, then back-predict the test cases.
FinetuneRun finetune(const NetParams& start, const Cohort& cohort, const FoldPlan& folds,
                     const FinetuneOptions& opts, const EvaluationOptions& eval, const ModelSetup& model);

}  // namespace iol
