#include "iol/kernels.hpp"

#include <algorithm>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "iol/dual.hpp"
#include "iol/error.hpp"

namespace iol {

namespace {

struct Workspace {
  Tape tape;
  std::vector<Var> vars;
  std::vector<double> adjoints;
};

Workspace& local_workspace() {
  thread_local Workspace ws;
  return ws;
}

// Loss of one sample; its parameter gradient is written to out[0, kParamCount).
// The tape records only the network, giving dR/dθ. The loss depends on θ
// through R alone, so dL/dθ = dL/dR · dR/dθ with dL/dR from forward mode.
template <class LossOfRadius>
double sample_gradient(const NetParams& p, const Features& x, LossOfRadius&& loss_of_radius, double* out) {
  Workspace& ws = local_workspace();
  ws.tape.clear();
  ws.vars.clear();
  for (double v : p.values) ws.vars.push_back(ws.tape.variable(v));
  std::array<Var, kInputs> xv;
  std::copy(x.begin(), x.end(), xv.begin());
  const Var r = mlp_forward(std::span<const Var>(ws.vars), p.norm, xv);
  const Dual loss = loss_of_radius(Dual(r.value(), 1.0));
  ws.tape.backward(r, ws.adjoints);
  for (std::size_t j = 0; j < kParamCount; ++j) out[j] = loss.d * ws.adjoints[j];
  return loss.v;
}

struct PhysicalLoss {
  const EyeSample& s;
  const ModelSetup& m;
  Dual operator()(const Dual& r) const {
    return physical_loss(r, biometry_cast<Dual>(s.eye), Dual(s.ref_t), m.consts, m.lens);
  }
};

struct PowerLoss {
  const LabeledSample& s;
  const ModelSetup& m;
  Dual operator()(const Dual& r) const { return square(thick_lens_power(r, m.lens, m.consts) - s.power); }
};

double physical_sample(const NetParams& p, const EyeSample& s, const ModelSetup& m, double* out) {
  return sample_gradient(p, make_features(s.eye, s.ref_t), PhysicalLoss{s, m}, out);
}

double power_sample(const NetParams& p, const LabeledSample& s, const ModelSetup& m, double* out) {
  return sample_gradient(p, make_features(s.x.eye, s.x.ref_t), PowerLoss{s, m}, out);
}

BatchGradient reduce(std::span<const double> losses, std::span<const double> grads) {
  BatchGradient out;
  out.grads.assign(kParamCount, 0.0);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out.loss += losses[i];
    const double* g = grads.data() + i * kParamCount;
    for (std::size_t j = 0; j < kParamCount; ++j) out.grads[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(losses.size());
  out.loss *= inv;
  for (double& g : out.grads) g *= inv;
  return out;
}

template <class Sample, class Loss>
BatchGradient batch_serial(const NetParams& params, std::span<const Sample> data, std::span<const std::size_t> indices,
                           Loss&& loss) {
  validate(params);
  require(!indices.empty(), "batch gradient: empty batch");
  std::vector<double> losses(indices.size());
  std::vector<double> grads(indices.size() * kParamCount);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Sample& s = data[indices[i]];
    losses[i] = loss(s, &grads[i * kParamCount]);
  }
  return reduce(losses, grads);
}

// Runs body(i) for i in [0, n) across threads and rethrows the error of the
// lowest failing index, so failures are reported as in a serial loop.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <class Sample, class Loss>
BatchGradient batch_parallel(const NetParams& params, std::span<const Sample> data,
                             std::span<const std::size_t> indices, Loss&& loss) {
  validate(params);
  require(!indices.empty(), "batch gradient: empty batch");
  std::vector<double> losses(indices.size());
  std::vector<double> grads(indices.size() * kParamCount);
  parallel_for(indices.size(), [&](std::size_t i) {
    const Sample& s = data[indices[i]];
    losses[i] = loss(s, &grads[i * kParamCount]);
  });
  return reduce(losses, grads);
}

std::string sample_error(std::size_t i, const Error& e) { return "sample " + std::to_string(i) + ": " + e.what(); }

}  // namespace

BatchGradient physical_gradient_serial(const NetParams& params, std::span<const EyeSample> data,
                                       std::span<const std::size_t> indices, const ModelSetup& model) {
  return batch_serial(params, data, indices,
                      [&](const EyeSample& s, double* g) { return physical_sample(params, s, model, g); });
}

BatchGradient physical_gradient_parallel(const NetParams& params, std::span<const EyeSample> data,
                                         std::span<const std::size_t> indices, const ModelSetup& model) {
  return batch_parallel(params, data, indices,
                        [&](const EyeSample& s, double* g) { return physical_sample(params, s, model, g); });
}

BatchGradient power_mse_gradient_serial(const NetParams& params, std::span<const LabeledSample> data,
                                        std::span<const std::size_t> indices, const ModelSetup& model) {
  return batch_serial(params, data, indices,
                      [&](const LabeledSample& s, double* g) { return power_sample(params, s, model, g); });
}

BatchGradient power_mse_gradient_parallel(const NetParams& params, std::span<const LabeledSample> data,
                                          std::span<const std::size_t> indices, const ModelSetup& model) {
  return batch_parallel(params, data, indices, [&](const LabeledSample& s, double* g) { return power_sample(params, s, model, g); });
}

std::vector<double> predict_powers_serial(const NetParams& params, std::span<const EyeSample> data,
                                          const ModelSetup& model) {
  validate(params);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = network_power(params, data[i].eye, data[i].ref_t, model.consts, model.lens);
  }
  return out;
}

std::vector<double> predict_powers_parallel(const NetParams& params, std::span<const EyeSample> data,
                                            const ModelSetup& model) {
  validate(params);
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    out[i] = network_power(params, data[i].eye, data[i].ref_t, model.consts, model.lens);
  });
  return out;
}

std::vector<double> solve_powers_serial(std::span<const EyeSample> data, const ModelSetup& model) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      out[i] = oracle_power(data[i].eye, data[i].ref_t, model.consts, model.lens, model.solve);
    } catch (const Error& e) {
      fail(e.category(), sample_error(i, e));
    }
  }
  return out;
}

std::vector<double> solve_powers_parallel(std::span<const EyeSample> data, const ModelSetup& model) {
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    try {
      out[i] = oracle_power(data[i].eye, data[i].ref_t, model.consts, model.lens, model.solve);
    } catch (const Error& e) {
      fail(e.category(), sample_error(i, e));
    }
  });
  return out;
}

int kernel_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace iol
