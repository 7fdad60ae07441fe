#pragma once

#include <cmath>
#include <span>

namespace iol {

/// First-order forward-mode dual number v + d·ε.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly
  Dual(double value, double derivative) : v(value), d(derivative) {}
};

inline double value_of(const Dual& x) noexcept { return x.v; }

inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(const Dual& a, const Dual& b) {
  const double q = a.v / b.v;
  // Keeps d exactly zero for constant operands, including b = ±inf.
  const double dq = (a.d == 0.0 && b.d == 0.0) ? 0.0 : (a.d - q * b.d) / b.v;
  return {q, dq};
}
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, a.d == 0.0 ? 0.0 : 0.5 * a.d / s};
}
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, a.d * e};
}
inline Dual square(const Dual& a) { return a * a; }
inline Dual leaky_relu(const Dual& a, double alpha) { return a.v >= 0.0 ? a : Dual{alpha * a.v, alpha * a.d}; }

/// b + sum_i w_i x_i, summed in index order like the double and tape versions.
inline Dual affine(std::span<const Dual> w, std::span<const Dual> x, const Dual& b) {
  Dual acc = b;
  for (std::size_t i = 0; i < w.size(); ++i) acc = acc + w[i] * x[i];
  return acc;
}

}  // namespace iol
