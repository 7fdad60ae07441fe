#pragma once

// 6 → 6 → 6 → 1 multilayer perceptron predicting the IOL radius, its
// initialisation and the Adam optimiser with decoupled weight decay.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "iol/autodiff.hpp"
#include "iol/optics.hpp"

namespace iol {

inline constexpr std::array<std::size_t, 4> kLayerDims{6, 6, 6, 1};
inline constexpr std::size_t kInputs = 6;
inline constexpr std::size_t kHidden = 6;
inline constexpr std::size_t kParamCount = (6 * 6 + 6) + (6 * 6 + 6) + (6 + 1);
inline constexpr double kLeakyAlpha = 0.1;
/// Smallest radius the output head can emit (mm).
inline constexpr double kRadiusFloorMm = 5.5;

/// Network input: [AL, ACD_IOL, CCT, K_max, K_min, Ref_T], SI units.
using Features = std::array<double, kInputs>;

inline Features make_features(const EyeBiometry& eye, double ref_t) {
  return {eye.al, eye.acd_iol, eye.cct, eye.k_max, eye.k_min, ref_t};
}

/// Fixed per-feature affine normalisation x' = (x - shift) / scale.
struct InputNorm {
  std::array<double, kInputs> shift{};
  std::array<double, kInputs> scale{1, 1, 1, 1, 1, 1};

  friend bool operator==(const InputNorm&, const InputNorm&) = default;
};

struct FeatureRange {
  double lo;
  double hi;
};

/// Midpoint / half-width normalisation of the given ranges.
InputNorm make_input_norm(const std::array<FeatureRange, kInputs>& ranges);

struct NetParams {
  std::vector<double> values = std::vector<double>(kParamCount, 0.0);
  InputNorm norm;
  std::uint64_t seed = 0;

  friend bool operator==(const NetParams&, const NetParams&) = default;
};

// Flat parameter layout: W1 (6×6, row = output unit), b1, W2, b2, W3 (1×6), b3.
struct LayerOffsets {
  std::size_t weights;
  std::size_t bias;
  std::size_t rows;
  std::size_t cols;
};
inline constexpr std::array<LayerOffsets, 3> kLayers{{{0, 36, 6, 6}, {42, 78, 6, 6}, {84, 90, 1, 6}}};

/// True for weight entries, false for biases.
bool is_weight(std::size_t index) noexcept;

void validate(const NetParams& p);

/// Softened lower bound on the radius: identity above r_min + 1 mm,
/// r_min + exp(u - r_min - 1) below. C1 at the knee.
template <class T>
T radius_floor(const T& u_mm) {
  using std::exp;
  constexpr double knee = kRadiusFloorMm + 1.0;
  if (value_of(u_mm) >= knee) return u_mm;
  return kRadiusFloorMm + exp(u_mm - knee);
}

/// Raw network output before the floor (mm).
template <class T>
T mlp_raw_output(std::span<const T> p, const InputNorm& norm, const std::array<T, kInputs>& x) {
  std::array<T, kInputs> a;
  for (std::size_t i = 0; i < kInputs; ++i) a[i] = (x[i] - norm.shift[i]) * (1.0 / norm.scale[i]);
  for (std::size_t layer = 0; layer < 2; ++layer) {
    const LayerOffsets& L = kLayers[layer];
    std::array<T, kHidden> h;
    for (std::size_t j = 0; j < L.rows; ++j) {
      h[j] = leaky_relu(affine(p.subspan(L.weights + j * L.cols, L.cols), std::span<const T>(a), p[L.bias + j]),
                        kLeakyAlpha);
    }
    a = h;
  }
  const LayerOffsets& out = kLayers[2];
  return affine(p.subspan(out.weights, out.cols), std::span<const T>(a), p[out.bias]);
}

/// Predicted IOL radius in metres.
template <class T>
T mlp_forward(std::span<const T> p, const InputNorm& norm, const std::array<T, kInputs>& x) {
  return radius_floor(mlp_raw_output(p, norm, x)) * 1e-3;
}

double mlp_forward(const NetParams& p, const Features& x);

struct InitOptions {
  double output_bias_mm = 12.0;
  double output_scale = 0.01;
};

/// Hidden layers uniform in ±1/sqrt(fan_in); output weights shrunk by
/// output_scale and output bias set so the initial radius sits near a typical IOL.
NetParams init_network(std::uint64_t seed, const InputNorm& norm, const InitOptions& opts = {});

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.005;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> m = std::vector<double>(kParamCount, 0.0);
  std::vector<double> v = std::vector<double>(kParamCount, 0.0);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam on raw vectors. Entries with decay_mask[i] != 0 are
/// first scaled by (1 - lr * weight_decay).
void adam_update(const AdamConfig& cfg, AdamState& state, std::span<double> values, std::span<const double> grads,
                 std::span<const std::uint8_t> decay_mask);

/// Adam step on network parameters; decay applies to weights only.
void adam_step(const AdamConfig& cfg, AdamState& state, NetParams& params, std::span<const double> grads);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grads;
};

/// Evaluates `build(tape, params)` on a fresh tape and returns the loss and
/// its gradient with respect to every network parameter.
template <class Builder>
LossAndGrad tape_eval_grad(Builder&& build, const NetParams& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.values.size());
  for (double v : params.values) vars.push_back(tape.variable(v));
  const Var loss = build(tape, std::span<const Var>(vars));
  const std::vector<double> adj = tape.backward(loss);
  return {loss.value(), std::vector<double>(adj.begin(), adj.begin() + static_cast<std::ptrdiff_t>(vars.size()))};
}

// Per-sample losses. The biometry enters both the network input and the
// optics, so gradients with respect to it see both paths.

template <class T>
T network_physical_loss(std::span<const T> p, const InputNorm& norm, const Biometry<T>& eye, const T& ref_t,
                        const OpticalConstants& c, const LensModel& lens) {
  const std::array<T, kInputs> x{eye.al, eye.acd_iol, eye.cct, eye.k_max, eye.k_min, ref_t};
  const T r = mlp_forward(p, norm, x);
  return physical_loss(r, eye, ref_t, c, lens);
}

template <class T>
T network_power_loss(std::span<const T> p, const InputNorm& norm, const Biometry<T>& eye, const T& ref_t,
                     double label, const OpticalConstants& c, const LensModel& lens) {
  const std::array<T, kInputs> x{eye.al, eye.acd_iol, eye.cct, eye.k_max, eye.k_min, ref_t};
  const T r = mlp_forward(p, norm, x);
  return square(thick_lens_power(r, lens, c) - label);
}

/// Power predicted by the network for one eye (D).
double network_power(const NetParams& p, const EyeBiometry& eye, double ref_t, const OpticalConstants& c,
                     const LensModel& lens);

}  // namespace iol
