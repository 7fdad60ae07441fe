#include "iol/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "iol/error.hpp"
#include "iol/random.hpp"

namespace iol {

SiteDataset make_site_dataset(const std::string& name, std::size_t n, const SamplingRanges& ranges,
                              const SiteModel& site, std::uint64_t seed, const ModelSetup& model) {
  const Cohort base = label_cohort(sample_cohort(n, ranges, derive_seed(seed, 1), model), model);
  PseudoRealResult pr = make_pseudo_real(base, site, derive_seed(seed, 2));
  for (std::size_t i = 0; i < pr.cohort.cases.size(); ++i) {
    const std::string& id = pr.cohort.cases[i].id;
    pr.cohort.cases[i].id = name + "-" + id.substr(id.find_first_of("0123456789"));
  }
  pr.cohort.seed = seed;
  return {{name, std::move(pr.cohort)}, std::move(pr.dropped)};
}

BenchmarkDataset combine_datasets(const std::string& name, const std::vector<BenchmarkDataset>& parts) {
  BenchmarkDataset out{name, {}};
  for (const BenchmarkDataset& p : parts) {
    out.cohort.cases.insert(out.cohort.cases.end(), p.cohort.cases.begin(), p.cohort.cases.end());
    out.cohort.provenance = p.cohort.provenance;
  }
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PredictorFactory formula_method(FormulaId id, const FormulaConstants& k, const ModelSetup& model) {
  const bool uses_position = id == FormulaId::haigis || id == FormulaId::raytracer;
  return [id, k, model, uses_position](const FoldContext& ctx) -> Predictor {
    const PositionPredictor position = ctx.position;
    return [id, k, model, uses_position, position](const EyeCase& c) {
      return formula_power(id, uses_position ? with_predicted_position(position, c) : c, k, model);
    };
  };
}

PredictorFactory method_factory(const std::string& method, std::size_t dataset_index, const NetParams& pretrained,
                                const BenchmarkSettings& s) {
  FinetuneOptions ft = s.finetune;
  ft.seed = derive_seed(s.seed, 0x200 + dataset_index);
  if (method == kPhysMethod) {
    return finetuned_method([&pretrained](std::size_t) { return pretrained; }, ft, s.model, nullptr);
  }
  if (method == kSoloMethod) {
    const std::uint64_t init_seed = derive_seed(s.seed, 0x300 + dataset_index);
    const InputNorm norm = pretrained.norm;
    const InitOptions init = s.init;
    return finetuned_method(
        [init_seed, norm, init](std::size_t fold) { return init_network(derive_seed(init_seed, fold), norm, init); },
        ft, s.model, nullptr);
  }
  const auto id = parse_formula(method);
  if (!id) fail(ErrorCategory::config, "unknown benchmark method '" + method + "'");
  return formula_method(*id, s.constants, s.model);
}

std::string fmt(const char* f, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

BenchmarkRow evaluate_method(const BenchmarkDataset& ds, std::size_t d, const FoldPlan& plan,
                             const std::string& method, const NetParams& pretrained, const BenchmarkSettings& s,
                             std::vector<std::string>& log) {
  BenchmarkRow row;
  row.dataset = ds.name;
  row.method = method;
  try {
    const EvalRecord rec = wang_evaluate(method_factory(method, d, pretrained, s), ds.cohort, plan, s.eval);
    row.n_skipped = rec.skipped.size();
    for (const std::string& sk : rec.skipped) log.push_back(ds.name + " " + method + " skipped " + sk);
    if (static_cast<double>(rec.skipped.size()) > s.max_skipped_fraction * static_cast<double>(rec.n_attempted)) {
      fail(ErrorCategory::evaluation, std::to_string(rec.skipped.size()) + " of " +
                                          std::to_string(rec.n_attempted) + " test cases skipped");
    }
    for (const FoldMetrics& f : rec.folds) {
      if (method == kSoloMethod && f.power.rmse > s.solo_discard_rmse) {
        ++row.n_discarded;
        log.push_back(ds.name + " " + method + " fold " + std::to_string(f.fold) + " discarded: RMSE " +
                      fmt("%.4f", f.power.rmse) + " D");
        continue;
      }
      row.folds.push_back(f);
    }
    for (const CaseResult& c : rec.cases) {
      const bool kept = std::any_of(row.folds.begin(), row.folds.end(),
                                    [&](const FoldMetrics& f) { return f.fold == c.fold; });
      if (kept) row.cases.push_back(c);
    }
    if (row.folds.empty()) fail(ErrorCategory::evaluation, "every fold was discarded");
    row.summary = summarize(row.folds);
  } catch (const Error& e) {
    row.failed = true;
    row.failure = std::string(category_name(e.category())) + ": " + e.what();
    row.summary = {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, 0};
    row.stars = "failed";
    log.push_back(ds.name + " " + method + " failed: " + row.failure);
  }
  return row;
}

void compare_to_physnet(BenchmarkRow& row, const BenchmarkRow& phys, WilcoxonPairs pairs,
                        std::vector<std::string>& log) {
  std::vector<double> a, b;
  if (pairs == WilcoxonPairs::per_fold) {
    for (const FoldMetrics& f : row.folds) {
      for (const FoldMetrics& g : phys.folds) {
        if (g.fold == f.fold) {
          a.push_back(f.power.mae);
          b.push_back(g.power.mae);
        }
      }
    }
  } else {
    std::map<std::string, double> ref;
    for (const CaseResult& c : phys.cases) ref[c.id] = std::abs(c.power_error);
    for (const CaseResult& c : row.cases) {
      const auto it = ref.find(c.id);
      if (it == ref.end()) continue;
      a.push_back(std::abs(c.power_error));
      b.push_back(it->second);
    }
  }
  try {
    const WilcoxonResult w = wilcoxon_signed_rank(a, b);
    row.p_value = w.p;
    row.stars = significance_stars(w.p);
  } catch (const Error& e) {
    log.push_back(row.dataset + " " + row.method + " no significance test: " + e.what());
  }
}

}  // namespace

BenchmarkReport run_benchmark(const std::vector<BenchmarkDataset>& datasets, const NetParams& pretrained,
                              const BenchmarkSettings& s) {
  validate(pretrained);
  validate(s.constants);
  require(!s.methods.empty(), "run_benchmark: no methods");
  for (const std::string& m : s.methods) {
    if (m != kSoloMethod && m != kPhysMethod && !parse_formula(m)) {
      fail(ErrorCategory::config, "unknown benchmark method '" + m + "'");
    }
  }
  BenchmarkReport report;
  report.log.push_back("seed " + std::to_string(s.seed) + ", folds " + std::to_string(s.folds) + ", val fraction " +
                       fmt("%.6g", s.split.val) + ", liu factor " + fmt("%.6g", s.eval.liu.factor) +
                       ", calibrate " + (s.eval.calibrate ? "true" : "false"));
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const BenchmarkDataset& ds = datasets[d];
    const std::uint64_t fold_seed = derive_seed(s.seed, 0x100 + d);
    const FoldPlan plan = make_folds(ds.cohort.cases.size(), s.folds, s.split, fold_seed);
    report.log.push_back(ds.name + ": " + std::to_string(ds.cohort.cases.size()) + " cases, fold seed " +
                         std::to_string(fold_seed));
    const std::size_t first = report.rows.size();
    for (const std::string& m : s.methods) {
      report.rows.push_back(evaluate_method(ds, d, plan, m, pretrained, s, report.log));
    }
    const BenchmarkRow* phys = nullptr;
    for (std::size_t r = first; r < report.rows.size(); ++r) {
      if (report.rows[r].method == kPhysMethod && !report.rows[r].failed) phys = &report.rows[r];
    }
    if (!phys) continue;
    for (std::size_t r = first; r < report.rows.size(); ++r) {
      BenchmarkRow& row = report.rows[r];
      if (&row != phys && !row.failed) compare_to_physnet(row, *phys, s.pairs, report.log);
    }
  }
  return report;
}

std::string report_csv(const BenchmarkReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const BenchmarkRow& r : report.rows) {
    const Summary& m = r.summary;
    out += r.dataset + "," + r.method + "," + fmt("%.6f", m.rmse_p) + "," + fmt("%.6f", m.mae_p) + "," +
           fmt("%.6f", m.rmse_ref) + "," + fmt("%.6f", m.mae_ref) + "," + fmt("%.6f", m.sd_rmse_p) + "," +
           fmt("%.6f", m.sd_mae_p) + "," + fmt("%.6g", r.p_value) + "," + r.stars + "," +
           std::to_string(r.n_discarded) + "\n";
  }
  return out;
}

std::string report_table(const BenchmarkReport& report) {
  std::string out;
  char buf[256];
  std::string dataset = "\x01";
  for (const BenchmarkRow& r : report.rows) {
    if (r.dataset != dataset) {
      dataset = r.dataset;
      if (!out.empty()) out += "\n";
      out += dataset + "\n";
      std::snprintf(buf, sizeof buf, "  %-10s %15s %15s %15s %15s %10s %9s\n", "method", "RMSE P [D]", "MAE P [D]",
                    "RMSE Ref [D]", "MAE Ref [D]", "p", "discarded");
      out += buf;
    }
    const Summary& m = r.summary;
    const auto pm = [](double v, double sd) { return std::isnan(v) ? std::string("nan") : fmt("%.3f", v) + " ± " + fmt("%.3f", sd); };
    std::snprintf(buf, sizeof buf, "  %-10s %16s %16s %15s %15s %10s %9zu\n", r.method.c_str(),
                  pm(m.rmse_p, m.sd_rmse_p).c_str(), pm(m.mae_p, m.sd_mae_p).c_str(), fmt("%.3f", m.rmse_ref).c_str(),
                  fmt("%.3f", m.mae_ref).c_str(), (fmt("%.3g", r.p_value) + r.stars).c_str(), r.n_discarded);
    out += buf;
  }
  return out;
}

}  // namespace iol
