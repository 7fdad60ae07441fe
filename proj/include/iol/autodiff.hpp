#pragma once

// Reverse-mode automatic differentiation over scalar graphs.
//
// A Tape is an append-only Wengert list. Every node stores its value and the
// local partial derivatives with respect to its parents, so the backward pass
// is a single reverse sweep accumulating adjoints. Parents always precede
// their children.
//
// A Var either refers to a tape node or is a detached constant. Arithmetic on
// two constants never touches a tape; mixed arithmetic records a node with
// only the variable operand as parent. This lets generic code written for
// `double` (the optics chain, the MLP) run unchanged on Vars.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace iol {

enum class Op : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  sqrt,
  square,
  exp,
  leaky_relu,
  affine,
};

std::string_view op_name(Op op) noexcept;

class Tape;

class Var {
 public:
  Var(double constant = 0.0) : value_(constant) {}  // NOLINT: implicit by design of generic code

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  std::int32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  friend class Tape;
  Var(double value, std::int32_t index, Tape* tape) : value_(value), index_(index), tape_(tape) {}

  double value_;
  std::int32_t index_ = -1;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  struct Edge {
    std::int32_t parent;
    double partial;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New independent variable (leaf node).
  Var variable(double value);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() noexcept;
  void reserve(std::size_t nodes, std::size_t edges);

  Op op(std::size_t node) const { return nodes_.at(node).op; }
  double value(std::size_t node) const { return nodes_.at(node).value; }
  std::span<const Edge> parents(std::size_t node) const;

  /// Adjoints d(output)/d(node) for every node on the tape.
  std::vector<double> backward(const Var& output) const;
  /// Same, reusing `adjoints` as storage.
  void backward(const Var& output, std::vector<double>& adjoints) const;

  // Node construction. `edges` must reference existing nodes.
  Var push(Op op, double value, std::span<const Edge> edges);
  Var push_unary(Op op, double value, const Var& a, double da);
  Var push_binary(Op op, double value, const Var& a, double da, const Var& b, double db);

  /// Index the next pushed node will receive; used in error messages.
  std::size_t next_index() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::uint32_t first_edge;
    std::uint32_t edge_count;
    double value;
  };

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

inline double value_of(const Var& v) noexcept { return v.value(); }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var sqrt(const Var& a);
Var square(const Var& a);
Var exp(const Var& a);
Var leaky_relu(const Var& a, double alpha);

/// Dot product plus bias as one n-ary node: sum_i w[i]*x[i] + b.
Var affine(std::span<const Var> w, std::span<const Var> x, const Var& b);

// Scalar counterparts so generic code can be instantiated on double.
inline double value_of(double v) noexcept { return v; }
inline double square(double a) noexcept { return a * a; }
inline double leaky_relu(double a, double alpha) noexcept { return a >= 0.0 ? a : alpha * a; }
double affine(std::span<const double> w, std::span<const double> x, double b) noexcept;

}  // namespace iol
