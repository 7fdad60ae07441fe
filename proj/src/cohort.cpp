#include "iol/cohort.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "iol/error.hpp"
#include "iol/kernels.hpp"
#include "iol/random.hpp"

namespace iol {

std::string_view provenance_name(Provenance p) noexcept {
  switch (p) {
    case Provenance::simulated: return "simulated";
    case Provenance::pseudo_real: return "pseudo_real";
    case Provenance::ingested: return "ingested";
  }
  return "?";
}

void validate(const EyeCase& c) {
  try {
    validate(c.eye);
  } catch (const Error& e) {
    fail(e.category(), "case " + c.id + ": " + e.what());
  }
  if (!std::isfinite(c.ref_target) || std::abs(c.ref_target) > kMaxAbsTarget) {
    fail(ErrorCategory::domain, "case " + c.id + ": target refraction outside ±10 D");
  }
  if (c.inserted_power &&
      !(*c.inserted_power >= kMinInsertedPower && *c.inserted_power <= kMaxInsertedPower)) {
    fail(ErrorCategory::domain, "case " + c.id + ": inserted power outside [-5, 40] D");
  }
  if (c.postop_refraction && !std::isfinite(*c.postop_refraction)) {
    fail(ErrorCategory::domain, "case " + c.id + ": post-operative refraction not finite");
  }
}

std::vector<EyeSample> unlabeled(const Cohort& cohort) {
  std::vector<EyeSample> out;
  out.reserve(cohort.cases.size());
  for (const EyeCase& c : cohort.cases) out.push_back({c.eye, c.ref_target});
  return out;
}

std::vector<LabeledSample> labeled(const Cohort& cohort) {
  std::vector<LabeledSample> out;
  out.reserve(cohort.cases.size());
  for (const EyeCase& c : cohort.cases) {
    require(c.inserted_power.has_value(), "case " + c.id + " has no inserted power");
    out.push_back({{c.eye, c.ref_target}, *c.inserted_power});
  }
  return out;
}

void validate(const SamplingRanges& r) {
  const auto check = [](const Interval& i, const char* name) {
    if (!(std::isfinite(i.lo) && std::isfinite(i.hi) && i.lo < i.hi)) {
      fail(ErrorCategory::config, std::string("sampling range '") + name + "' must satisfy lo < hi");
    }
  };
  check(r.al, "al");
  check(r.acd_iol, "acd_iol");
  check(r.cct, "cct");
  check(r.k_min, "k_min");
  check(r.ref_t, "ref_t");
  check(r.power, "power");
  if (!(r.k_max_hi > r.k_min.lo)) fail(ErrorCategory::config, "sampling range k_max_hi must exceed k_min.lo");
  if (r.coupling.enabled && !(r.coupling.half_width >= 0.0)) {
    fail(ErrorCategory::config, "position coupling half width must be non-negative");
  }
}

std::array<FeatureRange, kInputs> feature_ranges(const SamplingRanges& r) {
  return {{{r.al.lo, r.al.hi},
           {r.acd_iol.lo, r.acd_iol.hi},
           {r.cct.lo, r.cct.hi},
           {r.k_min.lo, r.k_max_hi},
           {r.k_min.lo, r.k_min.hi},
           {r.ref_t.lo, r.ref_t.hi}}};
}

namespace {

constexpr int kMaxAttemptsPerCase = 1000;

std::string case_id(std::string_view prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*s%06zu", static_cast<int>(prefix.size()), prefix.data(), i + 1);
  return buf;
}

// Draws until the eye is admissible; returns the number of draws used or 0 on give-up.
int draw_case(Rng& rng, const SamplingRanges& r, const ModelSetup& model, EyeCase& out) {
  for (int attempt = 1; attempt <= kMaxAttemptsPerCase; ++attempt) {
    EyeBiometry eye;
    eye.al = rng.uniform(r.al.lo, r.al.hi);
    eye.cct = rng.uniform(r.cct.lo, r.cct.hi);
    eye.k_min = rng.uniform(r.k_min.lo, r.k_min.hi);
    eye.k_max = rng.uniform(eye.k_min, r.k_max_hi);
    if (r.coupling.enabled) {
      const PositionCoupling& pc = r.coupling;
      eye.acd_iol = pc.base + pc.slope * (eye.al - pc.al_ref) + rng.uniform(-pc.half_width, pc.half_width);
    } else {
      eye.acd_iol = rng.uniform(r.acd_iol.lo, r.acd_iol.hi);
    }
    const double ref_t = rng.uniform(r.ref_t.lo, r.ref_t.hi);
    try {
      validate(eye);
      const double p = oracle_power(eye, ref_t, model.consts, model.lens, model.solve);
      if (p < r.power.lo || p > r.power.hi) continue;
    } catch (const Error&) {
      continue;
    }
    out.eye = eye;
    out.ref_target = ref_t;
    return attempt;
  }
  return 0;
}

}  // namespace

Cohort sample_cohort(std::size_t n, const SamplingRanges& ranges, std::uint64_t seed, const ModelSetup& model) {
  require(n >= 1, "sample_cohort: n must be at least 1");
  validate(ranges);
  Cohort cohort;
  cohort.provenance = Provenance::simulated;
  cohort.seed = seed;
  cohort.cases.resize(n);
  std::vector<int> attempts(n, 0);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    Rng rng(derive_seed(seed, idx));
    cohort.cases[idx].id = case_id("S", idx);
    attempts[idx] = draw_case(rng, ranges, model, cohort.cases[idx]);
  }
  std::size_t total = 0;
  for (int a : attempts) {
    if (a == 0) fail(ErrorCategory::config, "sampling ranges admit almost no valid eyes");
    total += static_cast<std::size_t>(a);
  }
  if (2 * (total - n) > total) {
    fail(ErrorCategory::config, "sampling rejected " + std::to_string(total - n) + " of " + std::to_string(total) +
                                    " draws (more than half); check the sampling ranges");
  }
  return cohort;
}

Cohort label_cohort(const Cohort& cohort, const ModelSetup& model) {
  const std::vector<double> powers = solve_powers_parallel(unlabeled(cohort), model);
  Cohort out = cohort;
  for (std::size_t i = 0; i < out.cases.size(); ++i) out.cases[i].inserted_power = powers[i];
  return out;
}

PseudoRealResult make_pseudo_real(const Cohort& labeled_cohort, const SiteModel& site, std::uint64_t seed) {
  if (!(site.noise_sd >= 0.0) || !(site.lens_step >= 0.0)) {
    fail(ErrorCategory::config, "site noise and lens step must be non-negative");
  }
  PseudoRealResult result;
  result.cohort.provenance = Provenance::pseudo_real;
  result.cohort.seed = seed;
  for (std::size_t i = 0; i < labeled_cohort.cases.size(); ++i) {
    const EyeCase& src = labeled_cohort.cases[i];
    require(src.inserted_power.has_value(), "make_pseudo_real: case " + src.id + " is not labeled");
    Rng rng(derive_seed(seed, i));
    const double noise = site.noise_sd > 0.0 ? site.noise_sd * rng.normal() : 0.0;
    const double needed = *src.inserted_power + site.power_bias + noise;
    const double inserted = site.lens_step > 0.0 ? std::round(needed / site.lens_step) * site.lens_step : needed;

    EyeCase c = src;
    c.eye.acd_iol += site.position_shift;
    c.inserted_power = inserted;
    c.postop_refraction = src.ref_target - site.liu_factor * (inserted - needed);
    try {
      validate(c);
      result.cohort.cases.push_back(std::move(c));
    } catch (const Error& e) {
      result.dropped.push_back(src.id + ": " + e.what());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view text, const std::string& where, std::string_view column) {
  const std::string_view t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    fail(ErrorCategory::parse, where + ": column '" + std::string(column) + "' is not a number: '" +
                                   std::string(t) + "'");
  }
  return v;
}

}  // namespace

std::string cohort_csv(const Cohort& cohort) {
  std::string out(kCohortHeader);
  out += '\n';
  for (const EyeCase& c : cohort.cases) {
    out += c.id;
    for (double v : {c.eye.al, c.eye.cct, c.eye.acd_iol, c.eye.k_max, c.eye.k_min}) {
      out += ',';
      append_number(out, v * 1e3);
    }
    out += ',';
    append_number(out, c.ref_target);
    out += ',';
    if (c.inserted_power) append_number(out, *c.inserted_power);
    out += ',';
    if (c.postop_refraction) append_number(out, *c.postop_refraction);
    out += '\n';
  }
  return out;
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCategory::parse, "cannot open '" + path.string() + "' for writing");
  f << cohort_csv(cohort);
  if (!f) fail(ErrorCategory::parse, "failed writing '" + path.string() + "'");
}

Cohort parse_cohort_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCategory::parse, source + ": empty file, header required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::map<std::string, std::size_t, std::less<>> col;
  const std::vector<std::string_view> header = split_fields(line);
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(trim(header[i])), i);

  static constexpr std::array<std::string_view, 7> required{"id",       "al_mm",    "cct_mm",      "acd_iol_mm",
                                                            "k_max_mm", "k_min_mm", "ref_target_d"};
  for (std::string_view name : required) {
    if (!col.contains(name)) fail(ErrorCategory::parse, source + ": missing column '" + std::string(name) + "'");
  }
  const auto optional_col = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = col.find(name);
    if (it == col.end()) return std::nullopt;
    return it->second;
  };
  const auto inserted_col = optional_col("inserted_power_d");
  const auto postop_col = optional_col("postop_refraction_d");

  Cohort cohort;
  cohort.provenance = Provenance::ingested;
  std::set<std::string> ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::string where = source + " row " + std::to_string(row);
    const std::vector<std::string_view> f = split_fields(line);
    if (f.size() != header.size()) {
      fail(ErrorCategory::parse, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(f.size()));
    }
    const auto num = [&](std::string_view name) { return parse_number(f[col.find(name)->second], where, name); };
    EyeCase c;
    c.id = std::string(trim(f[col.find("id")->second]));
    if (c.id.empty()) fail(ErrorCategory::parse, where + ": empty id");
    if (!ids.insert(c.id).second) fail(ErrorCategory::parse, where + ": duplicate id '" + c.id + "'");
    c.eye.al = num("al_mm") * 1e-3;
    c.eye.cct = num("cct_mm") * 1e-3;
    c.eye.acd_iol = num("acd_iol_mm") * 1e-3;
    c.eye.k_max = num("k_max_mm") * 1e-3;
    c.eye.k_min = num("k_min_mm") * 1e-3;
    c.ref_target = num("ref_target_d");
    if (inserted_col && !trim(f[*inserted_col]).empty()) {
      c.inserted_power = parse_number(f[*inserted_col], where, "inserted_power_d");
    }
    if (postop_col && !trim(f[*postop_col]).empty()) {
      c.postop_refraction = parse_number(f[*postop_col], where, "postop_refraction_d");
    }
    try {
      validate(c);
    } catch (const Error& e) {
      fail(ErrorCategory::parse, where + ": " + e.what());
    }
    cohort.cases.push_back(std::move(c));
  }
  return cohort;
}

Cohort load_cohort_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCategory::parse, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_cohort_csv(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Folds

FoldPlan make_folds(std::size_t n, std::size_t k, const SplitFractions& split, std::uint64_t seed) {
  require(k >= 2, "make_folds: need at least two folds");
  require(n >= k, "make_folds: fewer cases (" + std::to_string(n) + ") than folds (" + std::to_string(k) + ")");
  require(split.val >= 0.0 && split.val < 1.0, "make_folds: validation fraction must lie in [0, 1)");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0xF01D));
  rng.shuffle(perm.begin(), perm.end());

  FoldPlan plan;
  plan.k = k;
  plan.split = split;
  plan.seed = seed;
  plan.test_fold.assign(n, 0);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  const auto val_count = static_cast<std::size_t>(std::floor(split.val * static_cast<double>(n) + 1e-9));

  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f >= k - extra ? 1 : 0);
    require(n - size > val_count, "make_folds: no training cases left");
    Fold fold;
    for (std::size_t i = 0; i < size; ++i) {
      fold.test.push_back(perm[start + i]);
      plan.test_fold[perm[start + i]] = f;
    }
    for (std::size_t j = 0; j < n - size; ++j) {
      const std::size_t idx = perm[(start + size + j) % n];
      (j < val_count ? fold.val : fold.train).push_back(idx);
    }
    plan.folds.push_back(std::move(fold));
    start += size;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Position predictor

namespace {

std::array<double, 5> position_features(const EyeCase& c) {
  return {c.eye.al, c.eye.cct, c.eye.k_max, c.eye.k_min, c.ref_target};
}

}  // namespace

PositionPredictor fit_position_predictor(const std::vector<EyeCase>& train_cases) {
  const std::size_t n = train_cases.size();
  if (n < kMinPositionFitCases) {
    fail(ErrorCategory::insufficient_data, "position predictor needs at least " +
                                               std::to_string(kMinPositionFitCases) + " cases, got " +
                                               std::to_string(n));
  }
  // Standardised columns keep the least-squares problem well conditioned
  // despite the mixed units (metres and dioptres).
  std::array<double, 5> mean{}, sd{};
  for (const EyeCase& c : train_cases) {
    const auto x = position_features(c);
    for (std::size_t j = 0; j < 5; ++j) mean[j] += x[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (const EyeCase& c : train_cases) {
    const auto x = position_features(c);
    for (std::size_t j = 0; j < 5; ++j) sd[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(n));

  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), 6);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = position_features(train_cases[i]);
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < 5; ++j) {
      A(row, static_cast<Eigen::Index>(j)) = sd[j] > 0.0 ? (x[j] - mean[j]) / sd[j] : 0.0;
    }
    A(row, 5) = 1.0;
    y(row) = train_cases[i].eye.acd_iol;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) {
    fail(ErrorCategory::insufficient_data, "position predictor design matrix is rank deficient (rank " +
                                               std::to_string(qr.rank()) + " of 6)");
  }
  const Eigen::VectorXd beta = qr.solve(y);

  PositionPredictor pred;
  pred.intercept = beta(5);
  for (std::size_t j = 0; j < 5; ++j) {
    pred.coefficients[j] = beta(static_cast<Eigen::Index>(j)) / sd[j];
    pred.intercept -= pred.coefficients[j] * mean[j];
  }
  const Eigen::VectorXd resid = A * beta - y;
  pred.fit_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  return pred;
}

double predict_position(const PositionPredictor& pred, const EyeCase& c) {
  const auto x = position_features(c);
  double v = pred.intercept;
  for (std::size_t j = 0; j < 5; ++j) v += pred.coefficients[j] * x[j];
  return std::clamp(v, pred.clip.lo, pred.clip.hi);
}

EyeCase with_predicted_position(const PositionPredictor& pred, EyeCase c) {
  c.eye.acd_iol = predict_position(pred, c);
  return c;
}

std::vector<EyeCase> select(const Cohort& cohort, const std::vector<std::size_t>& indices) {
  std::vector<EyeCase> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(cohort.cases.at(i));
  return out;
}

}  // namespace iol
