#include "iol/autodiff.hpp"

#include <cmath>
#include <string>

#include "iol/error.hpp"

namespace iol {

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::neg: return "neg";
    case Op::sqrt: return "sqrt";
    case Op::square: return "square";
    case Op::exp: return "exp";
    case Op::leaky_relu: return "leaky_relu";
    case Op::affine: return "affine";
  }
  return "?";
}

Var Tape::variable(double value) { return push(Op::leaf, value, {}); }

void Tape::clear() noexcept {
  nodes_.clear();
  edges_.clear();
}

void Tape::reserve(std::size_t nodes, std::size_t edges) {
  nodes_.reserve(nodes);
  edges_.reserve(edges);
}

std::span<const Tape::Edge> Tape::parents(std::size_t node) const {
  const Node& n = nodes_.at(node);
  return {edges_.data() + n.first_edge, n.edge_count};
}

Var Tape::push(Op op, double value, std::span<const Edge> edges) {
  const auto index = static_cast<std::int32_t>(nodes_.size());
  for (const Edge& e : edges) {
    if (e.parent < 0 || e.parent >= index) [[unlikely]] {
      fail(ErrorCategory::contract, "tape edge must reference an earlier node");
    }
  }
  nodes_.push_back({op, static_cast<std::uint32_t>(edges_.size()),
                    static_cast<std::uint32_t>(edges.size()), value});
  edges_.insert(edges_.end(), edges.begin(), edges.end());
  return Var(value, index, this);
}

Var Tape::push_unary(Op op, double value, const Var& a, double da) {
  const Edge e{a.index(), da};
  return push(op, value, {&e, 1});
}

Var Tape::push_binary(Op op, double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant()) return push_unary(op, value, b, db);
  if (b.is_constant()) return push_unary(op, value, a, da);
  if (a.index() == b.index()) return push_unary(op, value, a, da + db);
  const Edge e[2] = {{a.index(), da}, {b.index(), db}};
  return push(op, value, e);
}

std::vector<double> Tape::backward(const Var& output) const {
  std::vector<double> adjoints;
  backward(output, adjoints);
  return adjoints;
}

void Tape::backward(const Var& output, std::vector<double>& adjoints) const {
  adjoints.assign(nodes_.size(), 0.0);
  if (output.is_constant()) return;
  require(output.tape() == this, "backward: output belongs to a different tape");
  adjoints[static_cast<std::size_t>(output.index())] = 1.0;
  for (std::size_t i = static_cast<std::size_t>(output.index()) + 1; i-- > 0;) {
    const double bar = adjoints[i];
    if (bar == 0.0) continue;
    const Node& n = nodes_[i];
    const Edge* e = edges_.data() + n.first_edge;
    for (std::uint32_t k = 0; k < n.edge_count; ++k) {
      adjoints[static_cast<std::size_t>(e[k].parent)] += bar * e[k].partial;
    }
  }
}

namespace {

Tape* tape_of(const Var& a, const Var& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  if (a.tape() && b.tape() && a.tape() != b.tape()) {
    fail(ErrorCategory::contract, "operands live on different tapes");
  }
  return t;
}

[[noreturn]] void eval_error(const Tape& tape, Op op, const char* what) {
  fail(ErrorCategory::evaluation, "node " + std::to_string(tape.next_index()) + " (" +
                                      std::string(op_name(op)) + "): " + what);
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return a.value() + b.value();
  if (a.is_constant() && a.value() == 0.0) return b;
  if (b.is_constant() && b.value() == 0.0) return a;
  return t->push_binary(Op::add, a.value() + b.value(), a, 1.0, b, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return a.value() - b.value();
  if (b.is_constant() && b.value() == 0.0) return a;
  return t->push_binary(Op::sub, a.value() - b.value(), a, 1.0, b, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return a.value() * b.value();
  if (a.is_constant()) {
    if (a.value() == 0.0) return 0.0;
    if (a.value() == 1.0) return b;
  }
  if (b.is_constant()) {
    if (b.value() == 0.0) return 0.0;
    if (b.value() == 1.0) return a;
  }
  return t->push_binary(Op::mul, a.value() * b.value(), a, b.value(), b, a.value());
}

Var operator/(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (b.value() == 0.0) {
    if (!t) return a.value() / b.value();
    eval_error(*t, Op::div, "division by zero");
  }
  if (!t) return a.value() / b.value();
  if (b.is_constant() && b.value() == 1.0) return a;
  const double inv = 1.0 / b.value();
  const double q = a.value() * inv;
  return t->push_binary(Op::div, q, a, inv, b, -q * inv);
}

Var operator-(const Var& a) {
  if (a.is_constant()) return -a.value();
  return a.tape()->push_unary(Op::neg, -a.value(), a, -1.0);
}

Var sqrt(const Var& a) {
  if (a.is_constant()) return std::sqrt(a.value());
  if (!(a.value() > 0.0)) eval_error(*a.tape(), Op::sqrt, "square root of a non-positive value");
  const double s = std::sqrt(a.value());
  return a.tape()->push_unary(Op::sqrt, s, a, 0.5 / s);
}

Var square(const Var& a) {
  if (a.is_constant()) return a.value() * a.value();
  return a.tape()->push_unary(Op::square, a.value() * a.value(), a, 2.0 * a.value());
}

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  if (a.is_constant()) return e;
  return a.tape()->push_unary(Op::exp, e, a, e);
}

Var leaky_relu(const Var& a, double alpha) {
  const bool positive = a.value() >= 0.0;
  const double y = positive ? a.value() : alpha * a.value();
  if (a.is_constant()) return y;
  return a.tape()->push_unary(Op::leaky_relu, y, a, positive ? 1.0 : alpha);
}

Var affine(std::span<const Var> w, std::span<const Var> x, const Var& b) {
  require(w.size() == x.size(), "affine: weight and input sizes differ");
  Tape* t = b.tape();
  double value = b.value();
  for (std::size_t i = 0; i < w.size(); ++i) {
    value += w[i].value() * x[i].value();
    if (!t) t = w[i].tape() ? w[i].tape() : x[i].tape();
  }
  if (!t) return value;

  // Stack buffer is enough for the network's layer widths.
  constexpr std::size_t kInline = 32;
  Tape::Edge inline_edges[2 * kInline + 1];
  std::vector<Tape::Edge> heap_edges;
  Tape::Edge* edges = inline_edges;
  if (w.size() > kInline) {
    heap_edges.resize(2 * w.size() + 1);
    edges = heap_edges.data();
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w[i].is_constant()) edges[n++] = {w[i].index(), x[i].value()};
    if (!x[i].is_constant()) edges[n++] = {x[i].index(), w[i].value()};
  }
  if (!b.is_constant()) edges[n++] = {b.index(), 1.0};
  return t->push(Op::affine, value, {edges, n});
}

double affine(std::span<const double> w, std::span<const double> x, double b) noexcept {
  double value = b;
  for (std::size_t i = 0; i < w.size(); ++i) value += w[i] * x[i];
  return value;
}

}  // namespace iol
