#pragma once

// Batch kernels. Each comes as a serial reference and an OpenMP version; the
// parallel versions reduce in sample order and are bitwise equal to the
// serial ones for any thread count.

#include <span>
#include <vector>

#include "iol/cohort.hpp"
#include "iol/network.hpp"

namespace iol {

/// Mean loss and mean gradient over a batch.
struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grads;

  friend bool operator==(const BatchGradient&, const BatchGradient&) = default;
};

/// Mean of M[0,0]^2 over data[indices] with gradients w.r.t. the network parameters.
BatchGradient physical_gradient_serial(const NetParams& params, std::span<const EyeSample> data,
                                       std::span<const std::size_t> indices, const ModelSetup& model);
BatchGradient physical_gradient_parallel(const NetParams& params, std::span<const EyeSample> data,
                                         std::span<const std::size_t> indices, const ModelSetup& model);

/// Mean of (P_IOL(R) - label)^2 over data[indices].
BatchGradient power_mse_gradient_serial(const NetParams& params, std::span<const LabeledSample> data,
                                        std::span<const std::size_t> indices, const ModelSetup& model);
BatchGradient power_mse_gradient_parallel(const NetParams& params, std::span<const LabeledSample> data,
                                          std::span<const std::size_t> indices, const ModelSetup& model);

/// Network IOL power for every sample.
std::vector<double> predict_powers_serial(const NetParams& params, std::span<const EyeSample> data,
                                          const ModelSetup& model);
std::vector<double> predict_powers_parallel(const NetParams& params, std::span<const EyeSample> data,
                                            const ModelSetup& model);

/// Physical oracle power for every sample. Errors name the first failing sample.
std::vector<double> solve_powers_serial(std::span<const EyeSample> data, const ModelSetup& model);
std::vector<double> solve_powers_parallel(std::span<const EyeSample> data, const ModelSetup& model);

/// Number of threads the parallel kernels use (1 without OpenMP).
int kernel_threads() noexcept;

}  // namespace iol
