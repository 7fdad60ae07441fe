#include "iol/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "iol/baselines.hpp"
#include "iol/error.hpp"

namespace iol {

Metrics metrics(std::span<const double> errors) {
  require(!errors.empty(), "metrics: empty error list");
  const double n = static_cast<double>(errors.size());
  double sq = 0.0, abs = 0.0, sum = 0.0;
  for (double e : errors) {
    sq += e * e;
    abs += std::abs(e);
    sum += e;
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  return {std::sqrt(sq / n), abs / n, std::sqrt(var / n)};
}

void validate(const LiuFactor& f) {
  if (!(f.factor > 0.4 && f.factor < 0.9)) fail(ErrorCategory::config, "Liu factor must lie in (0.4, 0.9)");
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "wilcoxon: samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (diff != 0.0) d.push_back(diff);
  }
  const std::size_t n = d.size();
  if (n < kWilcoxonMinPairs) {
    fail(ErrorCategory::insufficient_data, "wilcoxon: " + std::to_string(n) +
                                               " non-zero differences, need at least " +
                                               std::to_string(kWilcoxonMinPairs));
  }

  // Doubled mid-ranks stay integral.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long mid2 = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = mid2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) plus2 += rank2[i];
  }
  const long w2 = std::min(plus2, total2 - plus2);

  WilcoxonResult res;
  res.n = n;
  res.w = static_cast<double>(w2) / 2.0;
  if (n <= kWilcoxonExactMax) {
    // count[s] = number of sign assignments with doubled positive rank sum s.
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + rank2[i])] += count[static_cast<std::size_t>(s)];
      reach += rank2[i];
    }
    double tail = 0.0;
    for (long s = 0; s <= w2; ++s) tail += count[static_cast<std::size_t>(s)];
    res.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    res.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    res.p = var > 0.0 ? std::min(1.0, std::erfc(std::abs(res.w - mean) / std::sqrt(var) / std::sqrt(2.0))) : 1.0;
    res.exact = false;
  }
  return res;
}

std::string significance_stars(double p) {
  if (!(p <= 0.05)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  return "*";
}

EyeCase back_prediction_case(const EyeCase& c) {
  require(c.inserted_power.has_value() && c.postop_refraction.has_value(),
          "back-prediction needs inserted power and post-operative refraction");
  EyeCase out = c;
  out.ref_target = *c.postop_refraction;
  return out;
}

CaseEvaluation evaluate_cases(const Predictor& predict, std::span<const EyeCase> cases, const LiuFactor& liu,
                              double offset, std::size_t fold) {
  CaseEvaluation out;
  for (const EyeCase& c : cases) {
    if (!c.inserted_power || !c.postop_refraction) {
      out.skipped.push_back(c.id + ": missing inserted power or post-operative refraction");
      continue;
    }
    try {
      const double predicted = predict(back_prediction_case(c)) - offset;
      if (!std::isfinite(predicted)) {
        out.skipped.push_back(c.id + ": non-finite prediction");
        continue;
      }
      const double err = predicted - *c.inserted_power;
      out.results.push_back({c.id, fold, predicted, *c.inserted_power, err, liu_convert(err, liu)});
    } catch (const Error& e) {
      out.skipped.push_back(c.id + ": " + e.what());
    }
  }
  return out;
}

FoldMetrics fold_metrics(const CaseEvaluation& eval, double offset) {
  require(!eval.results.empty(), "fold has no evaluated cases");
  std::vector<double> p, r;
  double sum = 0.0;
  for (const CaseResult& c : eval.results) {
    p.push_back(c.power_error);
    r.push_back(c.refraction_error);
    sum += c.power_error;
  }
  FoldMetrics m;
  m.power = metrics(p);
  m.refraction = metrics(r);
  m.offset = offset;
  m.mean_error = sum / static_cast<double>(p.size());
  m.n_skipped = eval.skipped.size();
  return m;
}

double calibrate_on_training(const Predictor& predict, const Cohort& cohort, const Fold& fold, const LiuFactor& liu) {
  const std::set<std::size_t> test(fold.test.begin(), fold.test.end());
  for (std::size_t i : fold.train) require(!test.contains(i), "calibration case taken from the test split");
  const std::vector<EyeCase> train = select(cohort, fold.train);
  const CaseEvaluation eval = evaluate_cases(predict, train, liu);
  if (eval.results.empty()) fail(ErrorCategory::insufficient_data, "no training case could be calibrated");
  std::vector<double> preds, truths;
  for (const CaseResult& c : eval.results) {
    preds.push_back(c.predicted);
    truths.push_back(c.inserted);
  }
  return offset_calibrate(preds, truths);
}

EvalRecord wang_evaluate(const PredictorFactory& method, const Cohort& cohort, const FoldPlan& folds,
                         const EvaluationOptions& opts) {
  validate(opts.liu);
  EvalRecord rec;
  for (std::size_t f = 0; f < folds.folds.size(); ++f) {
    const Fold& fold = folds.folds[f];
    const PositionPredictor position = fit_position_predictor(select(cohort, fold.train));
    const Predictor predict = method(FoldContext{cohort, fold, f, position});
    const double offset = opts.calibrate ? calibrate_on_training(predict, cohort, fold, opts.liu) : 0.0;
    const std::vector<EyeCase> test = select(cohort, fold.test);
    CaseEvaluation eval = evaluate_cases(predict, test, opts.liu, offset, f);
    rec.n_attempted += test.size();
    if (!eval.results.empty()) {
      rec.folds.push_back(fold_metrics(eval, offset));
      rec.folds.back().fold = f;
    }
    rec.skipped.insert(rec.skipped.end(), eval.skipped.begin(), eval.skipped.end());
    rec.cases.insert(rec.cases.end(), eval.results.begin(), eval.results.end());
  }
  return rec;
}

Summary summarize(std::span<const FoldMetrics> folds) {
  require(!folds.empty(), "summarize: no folds");
  std::vector<double> rmse_p, mae_p, rmse_ref, mae_ref;
  for (const FoldMetrics& f : folds) {
    rmse_p.push_back(f.power.rmse);
    mae_p.push_back(f.power.mae);
    rmse_ref.push_back(f.refraction.rmse);
    mae_ref.push_back(f.refraction.mae);
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const auto sd = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  return {mean(rmse_p), mean(mae_p), mean(rmse_ref), mean(mae_ref), sd(rmse_p), sd(mae_p), folds.size()};
}

}  // namespace iol
