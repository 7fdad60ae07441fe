// Command-line driver: simulate, solve, pretrain, finetune, evaluate,
// benchmark, figure2. Every run writes its artifacts, the resolved
// configuration and a manifest under --out.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iol/benchmark.hpp"
#include "iol/config.hpp"
#include "iol/ini.hpp"
#include "iol/random.hpp"
#include "iol/solver.hpp"
#include "iol/weights_io.hpp"

#ifndef IOL_VERSION
#define IOL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace iol;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> set;
};

std::string num(const char* f, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::contract, "cannot write " + path.string());
  out << text;
}

// Collects inputs, seeds and outputs of a run and writes the manifest.
class Run {
 public:
  Run(std::string command, const Common& common, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), out_(common.out) {
    cfg_ = common.config.empty() ? default_config() : load_config(common.config);
    if (!common.config.empty()) input(common.config);
    for (const std::string& s : common.set) apply_override(cfg_, s);
    if (common.seed) cfg_.seed = *common.seed;
    fs::create_directories(out_);
  }

  ExperimentConfig& cfg() { return cfg_; }

  void input(const std::string& path) {
    inputs_.push_back(path + " " + hex64(fnv1a(read_text_file(path, ErrorCategory::parse))));
  }
  void seed(const std::string& name, std::uint64_t v) { seeds_.push_back(name + " = " + std::to_string(v)); }
  void note(const std::string& line) { notes_.push_back(line); }

  void output(const std::string& name, const std::string& text) {
    write_file(out_ / name, text);
    outputs_.push_back(name + " " + hex64(fnv1a(text)));
  }

  void finish() {
    const std::string config_text = dump_config(cfg_);
    write_file(out_ / "config.ini", config_text);
    // config.ini already holds --config, --set and --seed.
    std::string m = "# rerun: iolnet --config config.ini";
    for (std::size_t i = 0; i < argv_.size(); ++i) {
      const std::string& a = argv_[i];
      if (a == "--config" || a == "--set" || a == "--seed") {
        ++i;
        continue;
      }
      if (a.starts_with("--config=") || a.starts_with("--set=") || a.starts_with("--seed=")) continue;
      m += " " + a;
    }
    m += "\ncommand = " + command_ + "\nversion = " IOL_VERSION "\nconfig_hash = " + config_hash(cfg_) + "\n";
    m += "seed = " + std::to_string(cfg_.seed) + "\n";
    const auto block = [&m](const char* name, const std::vector<std::string>& lines) {
      m += std::string("\n[") + name + "]\n";
      for (const std::string& l : lines) m += l + "\n";
    };
    block("inputs", inputs_);
    block("seeds", seeds_);
    block("outputs", outputs_);
    block("notes", notes_);
    m += "\n[config]\n" + config_text;
    write_file(out_ / "manifest.txt", m);
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  fs::path out_;
  ExperimentConfig cfg_;
  std::vector<std::string> inputs_, seeds_, outputs_, notes_;
};

NetParams obtain_weights(Run& run, const std::string& weights_flag) {
  const std::string path = weights_flag.empty() ? run.cfg().io.weights : weights_flag;
  if (!path.empty()) {
    run.input(path);
    return load_weights(path).params;
  }
  TrainConfig tc = run.cfg().training;
  tc.seed = derive_seed(run.cfg().seed, 0x9e7);
  run.seed("pretrain", tc.seed);
  const PretrainResult r = pretrain(tc, run.cfg().ranges, run.cfg().model);
  run.note("pretrained in-process: test RMSE " + num("%.4f", r.test_rmse) + " D, best epoch " +
           std::to_string(r.best_epoch));
  if (!r.converged) fail(ErrorCategory::convergence, "pretraining did not converge: test RMSE " + num("%.4f", r.test_rmse));
  return r.params;
}

Cohort obtain_cohort(Run& run, const std::string& cohort_flag, const std::string& site) {
  if (!cohort_flag.empty()) {
    run.input(cohort_flag);
    return load_cohort_csv(cohort_flag);
  }
  std::vector<std::string> dropped;
  for (BenchmarkDataset& d : site_datasets(run.cfg(), &dropped)) {
    if (d.name == site) {
      run.note("cohort: generated " + site + " (" + std::to_string(d.cohort.cases.size()) + " cases)");
      return std::move(d.cohort);
    }
  }
  fail(ErrorCategory::config, "unknown site '" + site + "' (site1, site2, combined)");
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "epoch,train_loss,val_rmse\n";
  for (const CurvePoint& c : curve) {
    out += std::to_string(c.epoch) + "," + num("%.17g", c.train_loss) + "," + num("%.17g", c.val_rmse) + "\n";
  }
  return out;
}

std::string cases_csv(const std::vector<CaseResult>& cases) {
  std::string out = "id,fold,predicted_power_d,inserted_power_d,power_error_d,refraction_error_d\n";
  for (const CaseResult& c : cases) {
    out += c.id + "," + std::to_string(c.fold) + "," + num("%.6f", c.predicted) + "," + num("%.6f", c.inserted) + "," +
           num("%.6f", c.power_error) + "," + num("%.6f", c.refraction_error) + "\n";
  }
  return out;
}

std::string folds_csv(const std::vector<FoldMetrics>& folds) {
  std::string out = "fold,rmse_p,mae_p,rmse_ref,mae_ref,mean_error,offset,n_skipped\n";
  for (const FoldMetrics& f : folds) {
    out += std::to_string(f.fold) + "," + num("%.6f", f.power.rmse) + "," + num("%.6f", f.power.mae) + "," +
           num("%.6f", f.refraction.rmse) + "," + num("%.6f", f.refraction.mae) + "," + num("%.6f", f.mean_error) +
           "," + num("%.6f", f.offset) + "," + std::to_string(f.n_skipped) + "\n";
  }
  return out;
}

std::string summary_csv(const std::string& method, const Summary& s) {
  return "method,rmse_p,mae_p,rmse_ref,mae_ref,sd_rmse_p,sd_mae_p,n_folds\n" + method + "," + num("%.6f", s.rmse_p) +
         "," + num("%.6f", s.mae_p) + "," + num("%.6f", s.rmse_ref) + "," + num("%.6f", s.mae_ref) + "," +
         num("%.6f", s.sd_rmse_p) + "," + num("%.6f", s.sd_mae_p) + "," + std::to_string(s.n_folds) + "\n";
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::convergence: return 4;
    case ErrorCategory::contract: return 1;
    default: return 3;
  }
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IOL power prediction: optics oracle, physics-pretrained network, benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", IOL_VERSION);
  Common common;
  app.add_option("--config", common.config, "Experiment configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Master seed (overrides the configuration)");
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--set", common.set, "Override one value: section.key=value (repeatable)");

  std::optional<std::size_t> n;
  bool label = false;
  std::string site, eval_site = "site1", cohort_path, weights_path, method = "physnet", loss;
  std::optional<std::size_t> epochs, repeats;
  bool no_calibrate = false;

  auto* simulate = app.add_subcommand("simulate", "Write a cohort CSV");
  simulate->add_option("-n", n, "Number of eyes (default: [training] n_samples or the site size)");
  simulate->add_option("--site", site, "Pseudo-real cohort: site1, site2 or combined");
  simulate->add_flag("--label", label, "Add the oracle power as inserted_power_d");

  auto* solve = app.add_subcommand("solve", "Oracle radius and power for every case of a cohort");
  solve->add_option("--cohort", cohort_path, "Cohort CSV")->required()->check(CLI::ExistingFile);

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain the network on simulated eyes");
  pretrain_cmd->add_option("-n", n, "Training eyes");
  pretrain_cmd->add_option("--loss", loss, "physical or supervised_mse");
  pretrain_cmd->add_option("--epochs", epochs, "Epochs");

  auto* finetune_cmd = app.add_subcommand("finetune", "Cross-validated fine-tuning on a cohort");
  finetune_cmd->add_option("--weights", weights_path, "Pretrained weights (default: [io] weights or pretrain)");
  finetune_cmd->add_option("--cohort", cohort_path, "Cohort CSV with outcomes (default: generated site)");
  finetune_cmd->add_option("--site", eval_site, "Generated cohort when --cohort is absent")->capture_default_str();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Back-prediction evaluation of one method");
  evaluate_cmd->add_option("--method", method,
                           "srkt, hofferq, holladay1, haigis, raytracer, pretrained, physnet or solo_nn")
      ->capture_default_str();
  evaluate_cmd->add_option("--weights", weights_path, "Pretrained weights");
  evaluate_cmd->add_option("--cohort", cohort_path, "Cohort CSV with outcomes");
  evaluate_cmd->add_option("--site", eval_site, "Generated cohort when --cohort is absent")->capture_default_str();
  evaluate_cmd->add_flag("--no-calibrate", no_calibrate, "Skip the per-fold offset calibration");

  auto* benchmark_cmd = app.add_subcommand("benchmark", "All methods on site1, site2 and combined");
  benchmark_cmd->add_option("--weights", weights_path, "Pretrained weights");

  auto* figure2_cmd = app.add_subcommand("figure2", "RMSE against training-set size for both losses");
  figure2_cmd->add_option("--repeats", repeats, "Repetitions per size and loss");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::vector<std::string> raw(argv + 1, argv + argc);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    Run run(cmd->get_name(), common, raw);
    ExperimentConfig& cfg = run.cfg();

    if (cmd == simulate) {
      if (!site.empty()) {
        if (n) (site == "site2" ? cfg.site2 : cfg.site1).n_cases = *n;
        std::vector<std::string> dropped;
        std::optional<Cohort> cohort;
        for (BenchmarkDataset& d : site_datasets(cfg, &dropped)) {
          if (d.name == site) cohort = std::move(d.cohort);
        }
        if (!cohort) fail(ErrorCategory::config, "unknown site '" + site + "' (site1, site2, combined)");
        for (const std::string& d : dropped) run.note("dropped " + d);
        run.output("cohort.csv", cohort_csv(*cohort));
      } else {
        const std::uint64_t s = derive_seed(cfg.seed, 0x51);
        run.seed("cohort", s);
        Cohort c = sample_cohort(n.value_or(cfg.training.n_samples), cfg.ranges, s, cfg.model);
        if (label) c = label_cohort(c, cfg.model);
        run.output("cohort.csv", cohort_csv(c));
      }
    } else if (cmd == solve) {
      run.input(cohort_path);
      const Cohort c = load_cohort_csv(cohort_path);
      std::string out = "id,radius_mm,power_d,iterations,residual,method\n";
      std::string errors = "id,category,message\n";
      std::size_t failures = 0;
      for (const EyeCase& e : c.cases) {
        try {
          const SolveReport r = solve_radius(e.eye, e.ref_target, cfg.model.consts, cfg.model.lens, cfg.model.solve);
          out += e.id + "," + num("%.12f", r.radius * 1e3) + "," + num("%.12f", r.power) + "," +
                 std::to_string(r.iterations) + "," + num("%.3e", r.residual) + "," +
                 std::string(method_name(r.method)) + "\n";
        } catch (const Error& err) {
          ++failures;
          errors += e.id + "," + std::string(category_name(err.category())) + "," + one_line(err.what()) + "\n";
          std::cout << e.id << ": " << category_name(err.category()) << ": " << one_line(err.what()) << "\n";
        }
      }
      run.output("solutions.csv", out);
      run.output("solve_errors.csv", errors);
      run.finish();
      if (failures > 0) {
        std::cerr << "error category=no_solution message=" << failures << " of " << c.cases.size()
                  << " cases failed; see solve_errors.csv\n";
        return 3;
      }
      return 0;
    } else if (cmd == pretrain_cmd) {
      TrainConfig tc = cfg.training;
      if (n) tc.n_samples = *n;
      if (epochs) tc.epochs = *epochs;
      if (!loss.empty()) {
        if (loss == "physical") tc.loss = LossKind::physical;
        else if (loss == "supervised_mse") tc.loss = LossKind::supervised_mse;
        else fail(ErrorCategory::config, "unknown loss '" + loss + "'");
      }
      tc.seed = cfg.seed;
      run.seed("pretrain", tc.seed);
      const PretrainResult r = pretrain(tc, cfg.ranges, cfg.model);
      run.output("weights.txt", weights_text({r.params, std::nullopt}));
      run.output("curve.csv", curve_csv(r.curve));
      run.output("pretrain.csv", "n,loss,seed,best_epoch,steps,val_rmse,test_rmse,converged\n" +
                                     std::to_string(tc.n_samples) + "," + std::string(loss_name(tc.loss)) + "," +
                                     std::to_string(tc.seed) + "," + std::to_string(r.best_epoch) + "," +
                                     std::to_string(r.steps) + "," + num("%.6f", r.val_rmse) + "," +
                                     num("%.6f", r.test_rmse) + "," + (r.converged ? "true" : "false") + "\n");
      run.finish();
      if (!r.converged) {
        std::cerr << "error category=convergence message=test RMSE " << num("%.4f", r.test_rmse)
                  << " D exceeds the convergence limit\n";
        return 4;
      }
      return 0;
    } else if (cmd == finetune_cmd || cmd == evaluate_cmd) {
      const Cohort cohort = obtain_cohort(run, cohort_path, eval_site);
      const std::uint64_t fold_seed = derive_seed(cfg.seed, 0x100);
      run.seed("folds", fold_seed);
      const FoldPlan plan = make_folds(cohort.cases.size(), cfg.evaluation.folds, cfg.evaluation.split, fold_seed);
      EvaluationOptions eo{cfg.evaluation.calibrate && !no_calibrate, cfg.evaluation.liu};
      FinetuneOptions fo = cfg.finetune;
      fo.seed = derive_seed(cfg.seed, 0x200);
      EvalRecord rec;
      if (cmd == finetune_cmd) {
        const NetParams start = obtain_weights(run, weights_path);
        run.seed("finetune", fo.seed);
        const FinetuneRun fr = finetune(start, cohort, plan, fo, eo, cfg.model);
        std::string log = "fold,epochs_run,best_epoch,best_val_mse\n";
        for (std::size_t f = 0; f < fr.folds.size(); ++f) {
          log += std::to_string(f) + "," + std::to_string(fr.folds[f].epochs_run) + "," +
                 std::to_string(fr.folds[f].best_epoch) + "," + num("%.6f", fr.folds[f].best_val_mse) + "\n";
          run.output("weights_fold" + std::to_string(f) + ".txt", weights_text({fr.folds[f].params, std::nullopt}));
        }
        run.output("finetune.csv", log);
        rec = fr.record;
        method = "physnet";
      } else {
        BenchmarkSettings bs = benchmark_settings(cfg, resolve_formula_constants(cfg));
        PredictorFactory factory;
        if (parse_formula(method)) {
          if (!cfg.io.formula_constants.empty()) run.input(cfg.io.formula_constants);
          const FormulaId id = *parse_formula(method);
          const bool positional = id == FormulaId::haigis || id == FormulaId::raytracer;
          factory = [id, bs, positional](const FoldContext& ctx) -> Predictor {
            const PositionPredictor pos = ctx.position;
            return [id, bs, positional, pos](const EyeCase& c) {
              return formula_power(id, positional ? with_predicted_position(pos, c) : c, bs.constants, bs.model);
            };
          };
        } else if (method == "pretrained" || method == "physnet" || method == "solo_nn") {
          const NetParams start = method == "solo_nn" ? NetParams{} : obtain_weights(run, weights_path);
          if (method == "pretrained") {
            factory = [start, model = cfg.model](const FoldContext& ctx) {
              return network_predictor(start, ctx.position, model);
            };
          } else if (method == "physnet") {
            run.seed("finetune", fo.seed);
            factory = finetuned_method([start](std::size_t) { return start; }, fo, cfg.model, nullptr);
          } else {
            const std::uint64_t init_seed = derive_seed(cfg.seed, 0x300);
            run.seed("finetune", fo.seed);
            run.seed("solo_init", init_seed);
            const InputNorm norm = make_input_norm(feature_ranges(cfg.ranges));
            const InitOptions init = cfg.training.init;
            factory = finetuned_method(
                [init_seed, norm, init](std::size_t f) { return init_network(derive_seed(init_seed, f), norm, init); },
                fo, cfg.model, nullptr);
          }
        } else {
          fail(ErrorCategory::config, "unknown method '" + method + "'");
        }
        rec = wang_evaluate(factory, cohort, plan, eo);
      }
      for (const std::string& s : rec.skipped) run.note("skipped " + s);
      if (rec.folds.empty()) fail(ErrorCategory::insufficient_data, "no fold produced any evaluated case");
      run.output("cases.csv", cases_csv(rec.cases));
      run.output("folds.csv", folds_csv(rec.folds));
      run.output("summary.csv", summary_csv(method, summarize(rec.folds)));
    } else if (cmd == benchmark_cmd) {
      const FormulaConstants constants = resolve_formula_constants(cfg);
      if (!cfg.io.formula_constants.empty()) run.input(cfg.io.formula_constants);
      const NetParams start = obtain_weights(run, weights_path);
      std::vector<std::string> dropped;
      const std::vector<BenchmarkDataset> data = site_datasets(cfg, &dropped);
      for (const std::string& d : dropped) run.note("dropped " + d);
      run.seed("benchmark", cfg.seed);
      const BenchmarkReport report = run_benchmark(data, start, benchmark_settings(cfg, constants));
      std::string log;
      for (const std::string& l : report.log) log += l + "\n";
      run.output("report.csv", report_csv(report));
      run.output("report.txt", report_table(report));
      run.output("benchmark.log", log);
      std::cout << report_table(report);
    } else if (cmd == figure2_cmd) {
      const std::size_t reps = repeats.value_or(cfg.figure2_repeats);
      if (reps < 1) fail(ErrorCategory::config, "--repeats must be positive");
      TrainConfig base = cfg.training;
      const HeldOut val = make_held_out(base.eval_samples, cfg.ranges, derive_seed(base.eval_seed, 1), cfg.model);
      const HeldOut test = make_held_out(base.eval_samples, cfg.ranges, derive_seed(base.eval_seed, 2), cfg.model);
      run.seed("eval", base.eval_seed);
      std::string runs = "n,loss,repeat,seed,best_epoch,steps,val_rmse,test_rmse,converged\n";
      std::string summary = "n,loss,mean_rmse,sd_rmse,n_converged,n_runs\n";
      std::string curves = "n,loss,repeat,epoch,train_loss,val_rmse\n";
      for (std::size_t size : cfg.figure2_sizes) {
        for (LossKind lk : {LossKind::physical, LossKind::supervised_mse}) {
          std::vector<double> kept;
          for (std::size_t r = 0; r < reps; ++r) {
            TrainConfig tc = base;
            tc.n_samples = size;
            tc.loss = lk;
            tc.seed = derive_seed(cfg.seed, r);
            const PretrainResult res = pretrain(tc, cfg.ranges, cfg.model, val, test);
            const std::string head = std::to_string(size) + "," + std::string(loss_name(lk)) + "," + std::to_string(r);
            runs += head + "," + std::to_string(tc.seed) + "," + std::to_string(res.best_epoch) + "," +
                    std::to_string(res.steps) + "," + num("%.6f", res.val_rmse) + "," + num("%.6f", res.test_rmse) +
                    "," + (res.converged ? "true" : "false") + "\n";
            for (const CurvePoint& c : res.curve) {
              curves += head + "," + std::to_string(c.epoch) + "," + num("%.8g", c.train_loss) + "," +
                        num("%.8g", c.val_rmse) + "\n";
            }
            if (res.converged) kept.push_back(res.test_rmse);
            std::cout << "figure2 N=" << size << " " << loss_name(lk) << " repeat " << r << ": test RMSE "
                      << num("%.4f", res.test_rmse) << " D\n";
          }
          double mean = std::nan(""), sd = std::nan("");
          if (!kept.empty()) {
            mean = 0.0;
            for (double v : kept) mean += v;
            mean /= static_cast<double>(kept.size());
            sd = 0.0;
            for (double v : kept) sd += (v - mean) * (v - mean);
            sd = std::sqrt(sd / static_cast<double>(kept.size()));
          }
          summary += std::to_string(size) + "," + std::string(loss_name(lk)) + "," + num("%.6f", mean) + "," +
                     num("%.6f", sd) + "," + std::to_string(kept.size()) + "," + std::to_string(reps) + "\n";
        }
      }
      run.output("figure2_runs.csv", runs);
      run.output("figure2.csv", summary);
      run.output("figure2_curves.csv", curves);
    }
    run.finish();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error category=" << category_name(e.category()) << " message=" << one_line(e.what()) << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error category=internal message=" << one_line(e.what()) << "\n";
    return 1;
  }
}
