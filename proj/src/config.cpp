#include "iol/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "iol/ini.hpp"
#include "iol/random.hpp"

namespace iol {

namespace {

constexpr ErrorCategory kCfg = ErrorCategory::config;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One configurable value: where it lives and how to read / write it.
struct Field {
  std::string section;
  std::string key;
  std::function<void(const IniDocument&, const IniEntry&)> set;
  std::function<std::string()> get;
};

class Fields {
 public:
  void number(const std::string& section, const std::string& key, double& v) {
    add(section, key, [&v](const IniDocument& d, const IniEntry& e) { v = ini_number(d, e, kCfg); },
        [&v] { return fmt_double(v); });
  }

  template <class Int>
  void integer(const std::string& section, const std::string& key, Int& v) {
    add(section, key,
        [&v](const IniDocument& d, const IniEntry& e) {
          const std::int64_t x = ini_integer(d, e, kCfg);
          if (x < 0) fail(kCfg, where(d, e) + ": must be non-negative");
          v = static_cast<Int>(x);
        },
        [&v] { return std::to_string(v); });
  }

  void boolean(const std::string& section, const std::string& key, bool& v) {
    add(section, key, [&v](const IniDocument& d, const IniEntry& e) { v = ini_bool(d, e, kCfg); },
        [&v] { return std::string(v ? "true" : "false"); });
  }

  void text(const std::string& section, const std::string& key, std::string& v) {
    add(section, key, [&v](const IniDocument&, const IniEntry& e) { v = e.value; }, [&v] { return v; });
  }

  template <class Enum>
  void choice(const std::string& section, const std::string& key, Enum& v,
              std::vector<std::pair<std::string, Enum>> options) {
    add(section, key,
        [&v, options](const IniDocument& d, const IniEntry& e) {
          for (const auto& [name, value] : options) {
            if (name == e.value) {
              v = value;
              return;
            }
          }
          std::string allowed;
          for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o.first;
          fail(kCfg, where(d, e) + ": expected one of {" + allowed + "}, got '" + e.value + "'");
        },
        [&v, options] {
          for (const auto& [name, value] : options) {
            if (value == v) return name;
          }
          return std::string("?");
        });
  }

  void list(const std::string& section, const std::string& key, std::vector<std::string>& v) {
    add(section, key,
        [&v](const IniDocument&, const IniEntry& e) {
          v.clear();
          std::stringstream ss(e.value);
          std::string item;
          while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto t = item.find_last_not_of(" \t");
            if (b != std::string::npos) v.push_back(item.substr(b, t - b + 1));
          }
        },
        [&v] {
          std::string out;
          for (const std::string& s : v) out += (out.empty() ? "" : ",") + s;
          return out;
        });
  }

  void sizes(const std::string& section, const std::string& key, std::vector<std::size_t>& v) {
    add(section, key,
        [&v](const IniDocument& d, const IniEntry& e) {
          v.clear();
          std::stringstream ss(e.value);
          std::string item;
          while (std::getline(ss, item, ',')) {
            IniEntry one = e;
            one.value = item;
            const auto b = one.value.find_first_not_of(" \t");
            const auto t = one.value.find_last_not_of(" \t");
            one.value = b == std::string::npos ? "" : one.value.substr(b, t - b + 1);
            const std::int64_t x = ini_integer(d, one, kCfg);
            if (x < 1) fail(kCfg, where(d, e) + ": sizes must be positive");
            v.push_back(static_cast<std::size_t>(x));
          }
        },
        [&v] {
          std::string out;
          for (std::size_t s : v) out += (out.empty() ? "" : ",") + std::to_string(s);
          return out;
        });
  }

  const std::vector<Field>& all() const { return fields_; }

  const Field* find(const std::string& section, const std::string& key) const {
    for (const Field& f : fields_) {
      if (f.section == section && f.key == key) return &f;
    }
    return nullptr;
  }

 private:
  void add(const std::string& section, const std::string& key,
           std::function<void(const IniDocument&, const IniEntry&)> set, std::function<std::string()> get) {
    fields_.push_back({section, key, std::move(set), std::move(get)});
  }

  std::vector<Field> fields_;
};

void bind_ranges(Fields& f, const std::string& s, SamplingRanges& r) {
  f.number(s, "al_lo", r.al.lo);
  f.number(s, "al_hi", r.al.hi);
  f.number(s, "acd_iol_lo", r.acd_iol.lo);
  f.number(s, "acd_iol_hi", r.acd_iol.hi);
  f.number(s, "cct_lo", r.cct.lo);
  f.number(s, "cct_hi", r.cct.hi);
  f.number(s, "k_min_lo", r.k_min.lo);
  f.number(s, "k_min_hi", r.k_min.hi);
  f.number(s, "k_max_hi", r.k_max_hi);
  f.number(s, "ref_t_lo", r.ref_t.lo);
  f.number(s, "ref_t_hi", r.ref_t.hi);
  f.number(s, "power_lo", r.power.lo);
  f.number(s, "power_hi", r.power.hi);
  f.boolean(s, "acd_coupling", r.coupling.enabled);
  f.number(s, "acd_coupling_base", r.coupling.base);
  f.number(s, "acd_coupling_slope", r.coupling.slope);
  f.number(s, "acd_coupling_al_ref", r.coupling.al_ref);
  f.number(s, "acd_coupling_half_width", r.coupling.half_width);
}

void bind_site(Fields& f, const std::string& s, SiteConfig& site) {
  f.integer(s, "n_cases", site.n_cases);
  f.number(s, "power_bias", site.model.power_bias);
  f.number(s, "noise_sd", site.model.noise_sd);
  f.number(s, "position_shift", site.model.position_shift);
  f.number(s, "lens_step", site.model.lens_step);
}

Fields bind(ExperimentConfig& c) {
  Fields f;
  f.integer("", "seed", c.seed);

  f.number("optics", "n_v", c.model.consts.n_v);
  f.number("optics", "n_c", c.model.consts.n_c);
  f.number("optics", "gullstrand", c.model.consts.gullstrand);
  f.number("optics", "vertex_distance", c.model.consts.vertex_distance);
  f.choice("optics", "target_sign", c.model.consts.target_sign,
           {{"standard", TargetSign::standard}, {"flipped", TargetSign::flipped}});

  f.number("lens", "n_l", c.model.lens.n_l);
  f.choice("lens", "thickness_mode", c.model.lens.mode,
           {{"constant", ThicknessMode::constant}, {"biconvex_sag", ThicknessMode::biconvex_sag}});
  f.number("lens", "lt_const", c.model.lens.lt_const);
  f.number("lens", "edge_thickness", c.model.lens.edge_thickness);
  f.number("lens", "semi_aperture", c.model.lens.semi_aperture);

  f.number("solver", "r_lo", c.model.solve.r_lo);
  f.number("solver", "r_hi", c.model.solve.r_hi);
  f.number("solver", "tol", c.model.solve.tol);
  f.integer("solver", "max_iter", c.model.solve.max_iter);

  bind_ranges(f, "ranges", c.ranges);

  f.number("network", "output_bias_mm", c.training.init.output_bias_mm);
  f.number("network", "output_scale", c.training.init.output_scale);
  f.number("network", "lr", c.training.adam.lr);
  f.number("network", "beta1", c.training.adam.beta1);
  f.number("network", "beta2", c.training.adam.beta2);
  f.number("network", "eps", c.training.adam.eps);
  f.number("network", "weight_decay", c.training.adam.weight_decay);

  f.integer("training", "n_samples", c.training.n_samples);
  f.integer("training", "epochs", c.training.epochs);
  f.integer("training", "batch_size", c.training.batch_size);
  f.integer("training", "max_steps", c.training.max_steps);
  f.choice("training", "loss", c.training.loss,
           {{"physical", LossKind::physical}, {"supervised_mse", LossKind::supervised_mse}});
  f.number("training", "convergence_rmse_limit", c.training.convergence_rmse_limit);
  f.integer("training", "eval_samples", c.training.eval_samples);
  f.integer("training", "eval_seed", c.training.eval_seed);
  f.boolean("training", "parallel", c.training.parallel);
  f.sizes("training", "figure2_sizes", c.figure2_sizes);
  f.integer("training", "figure2_repeats", c.figure2_repeats);
  f.integer("training", "finetune_max_epochs", c.finetune.max_epochs);
  f.integer("training", "finetune_patience", c.finetune.patience);
  f.integer("training", "finetune_batch_size", c.finetune.batch_size);
  f.number("training", "finetune_lr", c.finetune.adam.lr);
  f.number("training", "finetune_weight_decay", c.finetune.adam.weight_decay);

  bind_ranges(f, "site_ranges", c.site_ranges);
  bind_site(f, "site1", c.site1);
  bind_site(f, "site2", c.site2);

  f.integer("evaluation", "folds", c.evaluation.folds);
  f.number("evaluation", "val_fraction", c.evaluation.split.val);
  f.boolean("evaluation", "calibrate", c.evaluation.calibrate);
  f.number("evaluation", "liu_factor", c.evaluation.liu.factor);
  f.number("evaluation", "solo_discard_rmse", c.evaluation.solo_discard_rmse);
  f.list("evaluation", "methods", c.evaluation.methods);
  f.choice("evaluation", "wilcoxon_pairs", c.evaluation.pairs,
           {{"per_fold", WilcoxonPairs::per_fold}, {"per_patient", WilcoxonPairs::per_patient}});

  f.text("io", "formula_constants", c.io.formula_constants);
  f.text("io", "weights", c.io.weights);
  return f;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  SamplingRanges& s = c.site_ranges;
  s.al = {0.021, 0.027};
  s.cct = {0.00050, 0.00060};
  s.k_min = {0.0072, 0.0082};
  s.k_max_hi = 0.0084;
  s.ref_t = {-2.0, 0.5};
  s.coupling.enabled = true;

  c.site1.n_cases = 130;
  c.site1.model.power_bias = 0.3;
  c.site1.model.noise_sd = 0.25;
  c.site2.n_cases = 76;
  c.site2.model.power_bias = -0.2;
  c.site2.model.noise_sd = 0.30;
  c.site2.model.position_shift = 0.0001;
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  const IniDocument doc = parse_ini(text, source, kCfg);
  ExperimentConfig cfg = default_config();
  const Fields fields = bind(cfg);
  for (const IniEntry& e : doc.entries) {
    const Field* field = fields.find(e.section, e.key);
    if (!field) fail(kCfg, where(doc, e) + ": unknown configuration key");
    field->set(doc, e);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path, kCfg), path.string());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(kCfg, "override '" + assignment + "' is not section.key=value");
  const std::string name = assignment.substr(0, eq);
  const auto dot = name.rfind('.');
  const std::string section = dot == std::string::npos ? "" : name.substr(0, dot);
  const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
  IniDocument doc;
  doc.source = "--set";
  IniEntry e{section, key, assignment.substr(eq + 1), 0};
  const Fields fields = bind(cfg);
  const Field* field = fields.find(section, key);
  if (!field) fail(kCfg, "--set: unknown configuration key '" + name + "'");
  field->set(doc, e);
  validate(cfg);
}

void validate(const ExperimentConfig& c) {
  validate(c.model.consts);
  validate(c.model.lens);
  if (!(c.model.solve.r_lo > 0.0 && c.model.solve.r_hi > c.model.solve.r_lo)) {
    fail(kCfg, "[solver] needs 0 < r_lo < r_hi");
  }
  if (!(c.model.solve.tol > 0.0) || c.model.solve.max_iter < 1) fail(kCfg, "[solver] tol and max_iter must be positive");
  validate(c.ranges);
  validate(c.site_ranges);
  validate(c.training);
  validate(c.evaluation.liu);
  if (c.evaluation.folds < 2) fail(kCfg, "[evaluation] folds must be at least 2");
  if (!(c.evaluation.split.val >= 0.0 && c.evaluation.split.val < 1.0)) {
    fail(kCfg, "[evaluation] val_fraction must lie in [0, 1)");
  }
  if (c.evaluation.methods.empty()) fail(kCfg, "[evaluation] methods is empty");
  for (const std::string& m : c.evaluation.methods) {
    if (m != "solo_nn" && m != "physnet" && !parse_formula(m)) fail(kCfg, "[evaluation] unknown method '" + m + "'");
  }
  if (c.figure2_sizes.empty() || c.figure2_repeats < 1) fail(kCfg, "[training] figure2 sizes and repeats required");
  if (c.finetune.batch_size < 1 || c.finetune.max_epochs < 1) fail(kCfg, "[training] fine-tuning sizes must be positive");
  for (const SiteConfig* s : {&c.site1, &c.site2}) {
    if (s->n_cases < c.evaluation.folds) fail(kCfg, "site cohorts need at least as many cases as folds");
    if (!(s->model.noise_sd >= 0.0) || !(s->model.lens_step >= 0.0)) {
      fail(kCfg, "site noise_sd and lens_step must be non-negative");
    }
  }
}

std::string dump_config(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  const Fields fields = bind(copy);
  std::string out;
  std::string section = "\x01";
  for (const Field& f : fields.all()) {
    if (f.section != section) {
      section = f.section;
      if (!section.empty()) out += (out.empty() ? "" : "\n") + ("[" + section + "]\n");
    }
    out += f.key + " = " + f.get() + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a(dump_config(cfg))); }

FormulaConstants resolve_formula_constants(const ExperimentConfig& cfg) {
  return cfg.io.formula_constants.empty() ? FormulaConstants{} : load_formula_constants(cfg.io.formula_constants);
}

BenchmarkSettings benchmark_settings(const ExperimentConfig& cfg, const FormulaConstants& constants) {
  BenchmarkSettings s;
  s.methods = cfg.evaluation.methods;
  s.constants = constants;
  s.eval.calibrate = cfg.evaluation.calibrate;
  s.eval.liu = cfg.evaluation.liu;
  s.finetune = cfg.finetune;
  s.init = cfg.training.init;
  s.folds = cfg.evaluation.folds;
  s.split = cfg.evaluation.split;
  s.solo_discard_rmse = cfg.evaluation.solo_discard_rmse;
  s.pairs = cfg.evaluation.pairs;
  s.seed = cfg.seed;
  s.model = cfg.model;
  return s;
}

std::vector<BenchmarkDataset> site_datasets(const ExperimentConfig& cfg, std::vector<std::string>* dropped) {
  std::vector<BenchmarkDataset> out;
  const SiteConfig* sites[2] = {&cfg.site1, &cfg.site2};
  for (std::size_t i = 0; i < 2; ++i) {
    SiteModel m = sites[i]->model;
    m.liu_factor = cfg.evaluation.liu.factor;
    SiteDataset sd = make_site_dataset("site" + std::to_string(i + 1), sites[i]->n_cases, cfg.site_ranges, m,
                                       derive_seed(cfg.seed, 0x5173 + i), cfg.model);
    if (dropped) dropped->insert(dropped->end(), sd.dropped.begin(), sd.dropped.end());
    out.push_back(std::move(sd.dataset));
  }
  out.push_back(combine_datasets("combined", out));
  return out;
}

}  // namespace iol
