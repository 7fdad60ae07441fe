#include "iol/network.hpp"

#include <cmath>
#include <string>

#include "iol/error.hpp"
#include "iol/random.hpp"

namespace iol {

InputNorm make_input_norm(const std::array<FeatureRange, kInputs>& ranges) {
  InputNorm norm;
  for (std::size_t i = 0; i < kInputs; ++i) {
    const FeatureRange& r = ranges[i];
    if (!(r.hi > r.lo)) fail(ErrorCategory::config, "feature range " + std::to_string(i) + " is empty");
    norm.shift[i] = 0.5 * (r.lo + r.hi);
    norm.scale[i] = 0.5 * (r.hi - r.lo);
  }
  return norm;
}

bool is_weight(std::size_t index) noexcept {
  for (const LayerOffsets& L : kLayers) {
    if (index >= L.weights && index < L.weights + L.rows * L.cols) return true;
  }
  return false;
}

void validate(const NetParams& p) {
  if (p.values.size() != kParamCount) {
    fail(ErrorCategory::contract, "network expects " + std::to_string(kParamCount) + " parameters, got " +
                                      std::to_string(p.values.size()));
  }
  for (double s : p.norm.scale) {
    if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorCategory::contract, "input normalisation scale must be positive");
  }
}

double mlp_forward(const NetParams& p, const Features& x) {
  return mlp_forward(std::span<const double>(p.values), p.norm, x);
}

NetParams init_network(std::uint64_t seed, const InputNorm& norm, const InitOptions& opts) {
  NetParams p;
  p.norm = norm;
  p.seed = seed;
  Rng rng(derive_seed(seed, 0x1417));
  for (std::size_t layer = 0; layer < kLayers.size(); ++layer) {
    const LayerOffsets& L = kLayers[layer];
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.cols));
    const bool output = layer + 1 == kLayers.size();
    for (std::size_t i = 0; i < L.rows * L.cols; ++i) {
      const double w = rng.uniform(-bound, bound);
      p.values[L.weights + i] = output ? w * opts.output_scale : w;
    }
    for (std::size_t j = 0; j < L.rows; ++j) {
      const double b = rng.uniform(-bound, bound);
      p.values[L.bias + j] = output ? opts.output_bias_mm : b;
    }
  }
  return p;
}

void adam_update(const AdamConfig& cfg, AdamState& state, std::span<double> values, std::span<const double> grads,
                 std::span<const std::uint8_t> decay_mask) {
  const std::size_t n = values.size();
  if (grads.size() != n || decay_mask.size() != n || state.m.size() != n || state.v.size() != n) {
    fail(ErrorCategory::contract, "adam: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    if (decay_mask[i]) values[i] *= decay;
    values[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

namespace {

std::array<std::uint8_t, kParamCount> weight_mask() {
  std::array<std::uint8_t, kParamCount> mask{};
  for (std::size_t i = 0; i < kParamCount; ++i) mask[i] = is_weight(i) ? 1 : 0;
  return mask;
}

}  // namespace

void adam_step(const AdamConfig& cfg, AdamState& state, NetParams& params, std::span<const double> grads) {
  static const std::array<std::uint8_t, kParamCount> mask = weight_mask();
  validate(params);
  adam_update(cfg, state, params.values, grads, mask);
}

double network_power(const NetParams& p, const EyeBiometry& eye, double ref_t, const OpticalConstants& c,
                     const LensModel& lens) {
  return thick_lens_power(mlp_forward(p, make_features(eye, ref_t)), lens, c);
}

}  // namespace iol
