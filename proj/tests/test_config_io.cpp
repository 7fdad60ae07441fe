#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "iol/config.hpp"
#include "iol/error.hpp"
#include "iol/ini.hpp"
#include "iol/weights_io.hpp"

using namespace iol;

namespace {

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("no error");
  return ErrorCategory::contract;
}

SavedNetwork sample_network() {
  SavedNetwork s;
  s.params = init_network(77, make_input_norm(feature_ranges(SamplingRanges{})));
  s.params.values[5] = 1.0 / 3.0;
  s.params.values[90] = -0.0;
  s.params.values[91 - 2] = 1e-300;
  return s;
}

std::string resign(std::string body) {
  const auto at = body.find("checksum = ");
  body.erase(at);
  return body + "checksum = " + hex64(fnv1a(body)) + "\n";
}

}  // namespace

TEST_CASE("ini grammar") {
  const IniDocument d = parse_ini("top = 1\n# c\n[a]\nx = 2  # trailing\n\n[b]\nx = y z\n", "t", ErrorCategory::config);
  REQUIRE(d.entries.size() == 3);
  CHECK(d.entries[0].section.empty());
  CHECK(d.entries[1].section == "a");
  CHECK(d.entries[1].value == "2");
  CHECK(d.entries[2].value == "y z");
  CHECK(category_of([] { parse_ini("[a]\nx = 1\nx = 2\n", "t", ErrorCategory::config); }) == ErrorCategory::config);
  CHECK(category_of([] { parse_ini("[a\n", "t", ErrorCategory::parse); }) == ErrorCategory::parse);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("configuration defaults and overrides") {
  const ExperimentConfig d = default_config();
  CHECK_NOTHROW(validate(d));
  CHECK(d.site1.n_cases == 130);
  CHECK(d.site2.n_cases == 76);
  CHECK(d.evaluation.liu.factor == 0.655);
  CHECK(d.evaluation.folds == 10);
  CHECK(d.training.convergence_rmse_limit == 1.0);
  CHECK(d.figure2_sizes == std::vector<std::size_t>{100, 1000, 10000, 100000});

  const ExperimentConfig p = parse_config("seed = 9\n[training]\nepochs = 7\nloss = supervised_mse\n"
                                          "[evaluation]\nmethods = srkt, physnet\nwilcoxon_pairs = per_patient\n");
  CHECK(p.seed == 9);
  CHECK(p.training.epochs == 7);
  CHECK(p.training.loss == LossKind::supervised_mse);
  CHECK(p.evaluation.methods == std::vector<std::string>{"srkt", "physnet"});
  CHECK(p.evaluation.pairs == WilcoxonPairs::per_patient);
  CHECK(p.site1.n_cases == d.site1.n_cases);

  ExperimentConfig o = d;
  apply_override(o, "site1.power_bias=0.5");
  CHECK(o.site1.model.power_bias == 0.5);
  apply_override(o, "seed=4");
  CHECK(o.seed == 4);

  CHECK(category_of([] { parse_config("[training]\nepoch = 3\n"); }) == ErrorCategory::config);
  CHECK(category_of([] { parse_config("[nonsense]\nx = 1\n"); }) == ErrorCategory::config);
  CHECK(category_of([] { parse_config("[training]\nloss = huber\n"); }) == ErrorCategory::config);
  CHECK(category_of([] { parse_config("[evaluation]\nliu_factor = 1.2\n"); }) == ErrorCategory::config);
  CHECK(category_of([] { parse_config("[training]\nepochs = many\n"); }) == ErrorCategory::config);
  CHECK(category_of([] { parse_config("[evaluation]\nmethods = srkt, barrett\n"); }) == ErrorCategory::config);
  CHECK(category_of([&] { apply_override(o, "training.nope=1"); }) == ErrorCategory::config);
  CHECK(category_of([&] { apply_override(o, "training.epochs"); }) == ErrorCategory::config);
}

TEST_CASE("configuration dump round trips exactly") {
  ExperimentConfig c = default_config();
  c.seed = 123;
  c.model.consts.n_v = 1.3361;
  c.training.adam.lr = 0.1 + 0.2;
  c.site_ranges.al.lo = 0.0211;
  c.io.formula_constants = "data/formula_constants.ini";
  const std::string text = dump_config(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.training.adam.lr == c.training.adam.lr);
  CHECK(back.site_ranges.al.lo == c.site_ranges.al.lo);
  CHECK(config_hash(back) == config_hash(c));
  ExperimentConfig other = c;
  other.seed = 124;
  CHECK(config_hash(other) != config_hash(c));

  const ExperimentConfig shipped = load_config(std::string(IOL_SOURCE_DIR) + "/data/experiment.ini");
  CHECK_NOTHROW(validate(shipped));
}

TEST_CASE("site datasets follow the configuration") {
  ExperimentConfig c = default_config();
  c.site1.n_cases = 30;
  c.site2.n_cases = 20;
  const auto sets = site_datasets(c);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].name == "site1");
  CHECK(sets[1].name == "site2");
  CHECK(sets[2].name == "combined");
  CHECK(sets[2].cohort.cases.size() == sets[0].cohort.cases.size() + sets[1].cohort.cases.size());
  CHECK(sets[0].cohort.cases.front().id.rfind("site1-", 0) == 0);
  const auto again = site_datasets(c);
  CHECK(again[2].cohort == sets[2].cohort);
}

TEST_CASE("weights round trip bit-exactly") {
  SavedNetwork s = sample_network();
  const SavedNetwork back = parse_weights(weights_text(s));
  CHECK(back == s);
  CHECK(std::signbit(back.params.values[90]));
  CHECK_FALSE(back.adam.has_value());

  AdamState st;
  st.step = 17;
  st.m[3] = 1e-17;
  st.v[4] = 2.0 / 7.0;
  s.adam = st;
  const auto path = std::filesystem::temp_directory_path() / "iol_weights_roundtrip.txt";
  save_weights(path, s);
  CHECK(load_weights(path) == s);
  std::filesystem::remove(path);
}

TEST_CASE("damaged weights files are rejected") {
  const std::string text = weights_text(sample_network());
  CHECK(category_of([&] { parse_weights(text.substr(0, text.size() / 2)); }) == ErrorCategory::corrupt_file);
  CHECK(category_of([&] { parse_weights(text.substr(0, text.rfind("checksum"))); }) == ErrorCategory::corrupt_file);

  std::string flipped = text;
  const auto at = flipped.find("layer1_bias = ") + 14;
  flipped[at] = flipped[at] == '1' ? '2' : '1';
  CHECK(category_of([&] { parse_weights(flipped); }) == ErrorCategory::corrupt_file);

  std::string dims = text;
  dims.replace(dims.find("layer_dims = 6 6 6 1"), 20, "layer_dims = 6 8 6 1");
  CHECK(category_of([&] { parse_weights(resign(dims)); }) == ErrorCategory::corrupt_file);

  std::string version = text;
  version.replace(version.find("format_version = 1"), 18, "format_version = 2");
  CHECK(category_of([&] { parse_weights(resign(version)); }) == ErrorCategory::corrupt_file);

  CHECK(parse_weights(resign(text)) == sample_network());
  CHECK(category_of([] { load_weights("/nonexistent/weights.txt"); }) != ErrorCategory::contract);
}
