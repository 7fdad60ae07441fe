#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "iol/benchmark.hpp"
#include "iol/error.hpp"

using namespace iol;

namespace {

const ModelSetup kModel{};

NetParams untrained() { return init_network(1, make_input_norm(feature_ranges(SamplingRanges{}))); }

// Lens position exactly linear in axial length, so the position predictor recovers it.
SamplingRanges linear_position_ranges() {
  SamplingRanges r;
  r.al = {0.021, 0.027};
  r.coupling.enabled = true;
  r.coupling.half_width = 0.0;
  return r;
}

BenchmarkSettings quick_settings(std::vector<std::string> methods) {
  BenchmarkSettings s;
  s.methods = std::move(methods);
  s.finetune.max_epochs = 5;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("site datasets and concatenation") {
  const SiteDataset a = make_site_dataset("north", 40, SamplingRanges{}, SiteModel{0.3, 0.25}, 1, kModel);
  const SiteDataset b = make_site_dataset("south", 25, SamplingRanges{}, SiteModel{}, 2, kModel);
  CHECK(a.dataset.cohort.cases.size() + a.dropped.size() == 40);
  CHECK(a.dataset.cohort.cases.front().id == "north-000001");
  CHECK(a.dataset.cohort.provenance == Provenance::pseudo_real);
  for (const EyeCase& c : a.dataset.cohort.cases) {
    CHECK(c.inserted_power.has_value());
    CHECK(c.postop_refraction.has_value());
  }
  const BenchmarkDataset both = combine_datasets("both", {a.dataset, b.dataset});
  CHECK(both.name == "both");
  CHECK(both.cohort.cases.size() == a.dataset.cohort.cases.size() + b.dataset.cohort.cases.size());
  CHECK(both.cohort.cases.back().id == b.dataset.cohort.cases.back().id);
}

TEST_CASE("report has one row per method and dataset and is reproducible") {
  const std::vector<BenchmarkDataset> sets{
      make_site_dataset("site1", 40, SamplingRanges{}, SiteModel{0.3, 0.25}, 1, kModel).dataset,
      make_site_dataset("site2", 30, SamplingRanges{}, SiteModel{-0.2, 0.3}, 2, kModel).dataset};
  const BenchmarkSettings s =
      quick_settings({"srkt", "hofferq", "holladay1", "haigis", "raytracer", "solo_nn", "physnet"});
  const BenchmarkReport r = run_benchmark(sets, untrained(), s);
  REQUIRE(r.rows.size() == 7 * 2);
  CHECK(r.rows[0].dataset == "site1");
  CHECK(r.rows[7].dataset == "site2");
  CHECK(r.rows[6].method == "physnet");
  CHECK(std::isnan(r.rows[6].p_value));
  for (const BenchmarkRow& row : r.rows) {
    if (row.method != "physnet" && !row.failed) {
      CHECK(row.p_value >= 0.0);
      CHECK(row.p_value <= 1.0);
      CHECK(row.stars == significance_stars(row.p_value));
    }
  }

  const std::string csv = report_csv(r);
  CHECK(csv.rfind(std::string(kReportHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 15);
  CHECK(report_table(r).find("physnet") != std::string::npos);
  CHECK(report_csv(run_benchmark(sets, untrained(), s)) == csv);
}

TEST_CASE("raytracer at the true lens position is exact on an unperturbed site") {
  const BenchmarkDataset ds = make_site_dataset("id", 60, linear_position_ranges(), SiteModel{}, 4, kModel).dataset;
  BenchmarkSettings s = quick_settings({"srkt", "hofferq", "holladay1", "haigis", "raytracer"});
  const BenchmarkReport r = run_benchmark({ds}, untrained(), s);
  REQUIRE(r.rows.size() == 5);
  for (const BenchmarkRow& row : r.rows) {
    REQUIRE_FALSE(row.failed);
    if (row.method == "raytracer") {
      CHECK(row.summary.rmse_p < 1e-6);
    } else {
      CHECK(row.summary.rmse_p > 0.0);
    }
  }
}

TEST_CASE("a method failing on most cases is marked failed and the run continues") {
  const BenchmarkDataset ds = make_site_dataset("s", 40, SamplingRanges{}, SiteModel{}, 5, kModel).dataset;
  BenchmarkSettings s = quick_settings({"haigis", "srkt"});
  s.constants.haigis = {50.0, 0.0, 0.0};  // lens behind the retina
  const BenchmarkReport r = run_benchmark({ds}, untrained(), s);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].failed);
  CHECK(r.rows[0].stars == "failed");
  CHECK(std::isnan(r.rows[0].summary.rmse_p));
  CHECK_FALSE(r.rows[1].failed);
  CHECK(report_csv(r).find("s,haigis,nan") != std::string::npos);
}

TEST_CASE("unknown methods are rejected") {
  const BenchmarkDataset ds = make_site_dataset("s", 20, SamplingRanges{}, SiteModel{}, 6, kModel).dataset;
  CHECK_THROWS_AS(run_benchmark({ds}, untrained(), quick_settings({"barrett"})), Error);
}
