#include "iol/training.hpp"

#include <cmath>
#include <numeric>

#include "iol/error.hpp"
#include "iol/kernels.hpp"
#include "iol/random.hpp"

namespace iol {

std::string_view loss_name(LossKind k) noexcept {
  switch (k) {
    case LossKind::physical: return "physical";
    case LossKind::supervised_mse: return "supervised_mse";
  }
  return "?";
}

void validate(const TrainConfig& cfg) {
  if (cfg.n_samples < 1) fail(ErrorCategory::config, "training needs at least one sample");
  if (cfg.epochs < 1) fail(ErrorCategory::config, "training needs at least one epoch");
  if (cfg.batch_size > cfg.n_samples) fail(ErrorCategory::config, "batch size exceeds the number of samples");
  if (!(cfg.convergence_rmse_limit > 0.0)) fail(ErrorCategory::config, "convergence RMSE limit must be positive");
  if (cfg.eval_samples < 1) fail(ErrorCategory::config, "evaluation sets need at least one eye");
  if (!(cfg.adam.lr > 0.0)) fail(ErrorCategory::config, "learning rate must be positive");
}

std::size_t effective_batch_size(const TrainConfig& cfg) {
  if (cfg.batch_size > 0) return cfg.batch_size;
  return cfg.n_samples <= 1000 ? cfg.n_samples : 256;
}

HeldOut make_held_out(std::size_t n, const SamplingRanges& ranges, std::uint64_t seed, const ModelSetup& model) {
  HeldOut h;
  h.eyes = unlabeled(sample_cohort(n, ranges, seed, model));
  h.powers = solve_powers_parallel(h.eyes, model);
  return h;
}

double power_rmse(const NetParams& params, const HeldOut& set, const ModelSetup& model, bool parallel) {
  const std::vector<double> pred =
      parallel ? predict_powers_parallel(params, set.eyes, model) : predict_powers_serial(params, set.eyes, model);
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sq += (pred[i] - set.powers[i]) * (pred[i] - set.powers[i]);
  return std::sqrt(sq / static_cast<double>(pred.size()));
}

namespace {

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    fail(ErrorCategory::convergence, "training diverged: non-finite loss in epoch " + std::to_string(epoch));
  }
}

}  // namespace

PretrainResult pretrain(const TrainConfig& cfg, const SamplingRanges& ranges, const ModelSetup& model) {
  const HeldOut val = make_held_out(cfg.eval_samples, ranges, derive_seed(cfg.eval_seed, 1), model);
  const HeldOut test = make_held_out(cfg.eval_samples, ranges, derive_seed(cfg.eval_seed, 2), model);
  return pretrain(cfg, ranges, model, val, test);
}

PretrainResult pretrain(const TrainConfig& cfg, const SamplingRanges& ranges, const ModelSetup& model,
                        const HeldOut& val, const HeldOut& test) {
  validate(cfg);
  const Cohort cohort = sample_cohort(cfg.n_samples, ranges, derive_seed(cfg.seed, 1), model);
  // The physical arm only ever holds unlabeled eyes.
  std::vector<EyeSample> eyes;
  std::vector<LabeledSample> labels;
  if (cfg.loss == LossKind::physical) {
    eyes = unlabeled(cohort);
  } else {
    labels = labeled(label_cohort(cohort, model));
  }

  PretrainResult res;
  NetParams params = init_network(derive_seed(cfg.seed, 2), make_input_norm(feature_ranges(ranges)), cfg.init);
  AdamState state;
  Rng rng(derive_seed(cfg.seed, 3));
  const std::size_t batch = effective_batch_size(cfg);
  std::vector<std::size_t> order(cfg.n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});

  res.params = params;
  res.val_rmse = power_rmse(params, val, model, cfg.parallel);
  bool capped = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs && !capped; ++epoch) {
    if (batch < cfg.n_samples) rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(batch, order.size() - start));
      BatchGradient g;
      if (cfg.loss == LossKind::physical) {
        g = cfg.parallel ? physical_gradient_parallel(params, eyes, idx, model)
                         : physical_gradient_serial(params, eyes, idx, model);
      } else {
        g = cfg.parallel ? power_mse_gradient_parallel(params, labels, idx, model)
                         : power_mse_gradient_serial(params, labels, idx, model);
      }
      check_finite(g.loss, epoch);
      adam_step(cfg.adam, state, params, g.grads);
      loss_sum += g.loss;
      ++batches;
      ++res.steps;
      if (cfg.max_steps > 0 && res.steps >= cfg.max_steps) {
        capped = true;
        break;
      }
    }
    const double v = power_rmse(params, val, model, cfg.parallel);
    res.curve.push_back({epoch, loss_sum / static_cast<double>(batches), v});
    if (v < res.val_rmse) {
      res.val_rmse = v;
      res.params = params;
      res.best_epoch = epoch;
    }
  }
  res.test_rmse = power_rmse(res.params, test, model, cfg.parallel);
  res.converged = res.test_rmse <= cfg.convergence_rmse_limit;
  return res;
}

namespace {

double mse(const NetParams& params, std::span<const LabeledSample> data, const ModelSetup& model) {
  double sq = 0.0;
  for (const LabeledSample& s : data) {
    const double e = network_power(params, s.x.eye, s.x.ref_t, model.consts, model.lens) - s.power;
    sq += e * e;
  }
  return sq / static_cast<double>(data.size());
}

}  // namespace

FinetuneResult finetune_samples(const NetParams& start, std::span<const LabeledSample> train,
                                std::span<const LabeledSample> val, const FinetuneOptions& opts,
                                const ModelSetup& model) {
  require(train.size() >= kMinFinetuneCases, "fine-tuning needs at least " + std::to_string(kMinFinetuneCases) +
                                                 " training cases, got " + std::to_string(train.size()));
  require(!val.empty(), "fine-tuning needs validation cases");
  require(opts.batch_size >= 1 && opts.max_epochs >= 1, "fine-tuning batch size and epochs must be positive");

  FinetuneResult res;
  NetParams params = start;
  AdamState state;
  Rng rng(derive_seed(opts.seed, 0xF17E));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  res.params = start;
  res.best_val_mse = mse(start, val, model);
  std::size_t wait = 0;
  for (std::size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t s = 0; s < order.size(); s += opts.batch_size) {
      const std::span<const std::size_t> idx(order.data() + s, std::min(opts.batch_size, order.size() - s));
      const BatchGradient g = opts.parallel ? power_mse_gradient_parallel(params, train, idx, model)
                                            : power_mse_gradient_serial(params, train, idx, model);
      check_finite(g.loss, epoch);
      adam_step(opts.adam, state, params, g.grads);
    }
    res.epochs_run = epoch;
    const double v = mse(params, val, model);
    if (v < res.best_val_mse) {
      res.best_val_mse = v;
      res.params = params;
      res.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= opts.patience) {
      break;
    }
  }
  return res;
}

std::vector<LabeledSample> finetune_samples_for(const std::vector<EyeCase>& cases, const PositionPredictor& position) {
  std::vector<LabeledSample> out;
  out.reserve(cases.size());
  for (const EyeCase& c : cases) {
    const EyeCase b = with_predicted_position(position, back_prediction_case(c));
    out.push_back({{b.eye, b.ref_target}, *b.inserted_power});
  }
  return out;
}

Predictor network_predictor(NetParams params, PositionPredictor position, ModelSetup model) {
  return [params = std::move(params), position, model](const EyeCase& c) {
    const EyeCase p = with_predicted_position(position, c);
    return network_power(params, p.eye, p.ref_target, model.consts, model.lens);
  };
}

PredictorFactory finetuned_method(StartForFold start, FinetuneOptions opts, ModelSetup model,
                                  std::vector<FinetuneResult>* log) {
  return [start = std::move(start), opts, model, log](const FoldContext& ctx) {
    FinetuneOptions fold_opts = opts;
    fold_opts.seed = derive_seed(opts.seed, ctx.fold_index);
    const auto train = finetune_samples_for(select(ctx.cohort, ctx.fold.train), ctx.position);
    const auto val = finetune_samples_for(select(ctx.cohort, ctx.fold.val), ctx.position);
    FinetuneResult r = finetune_samples(start(ctx.fold_index), train, val, fold_opts, model);
    Predictor p = network_predictor(r.params, ctx.position, model);
    if (log) log->push_back(std::move(r));
    return p;
  };
}

FinetuneRun finetune(const NetParams& start, const Cohort& cohort, const FoldPlan& folds,
                     const FinetuneOptions& opts, const EvaluationOptions& eval, const ModelSetup& model) {
  FinetuneRun run;
  const PredictorFactory method = finetuned_method([&start](std::size_t) { return start; }, opts, model, &run.folds);
  run.record = wang_evaluate(method, cohort, folds, eval);
  return run;
}

}  // namespace iol
