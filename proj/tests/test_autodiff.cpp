#include <cmath>

#include "doctest.h"
#include "iol/autodiff.hpp"
#include "iol/error.hpp"

using namespace iol;

TEST_CASE("square at 3") {
  Tape t;
  const Var x = t.variable(3.0);
  const Var y = x * x;
  const auto g = t.backward(y);
  CHECK(y.value() == 9.0);
  CHECK(g[static_cast<std::size_t>(x.index())] == 6.0);
  const Var z = square(x);
  CHECK(t.backward(z)[static_cast<std::size_t>(x.index())] == 6.0);
}

TEST_CASE("leaky relu at -2 and 2") {
  Tape t;
  const Var x = t.variable(-2.0);
  const Var y = leaky_relu(x, 0.1);
  CHECK(y.value() == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(t.backward(y)[static_cast<std::size_t>(x.index())] == doctest::Approx(0.1).epsilon(1e-15));
  const Var p = t.variable(2.0);
  const Var q = leaky_relu(p, 0.1);
  CHECK(q.value() == 2.0);
  CHECK(t.backward(q)[static_cast<std::size_t>(p.index())] == 1.0);
  CHECK(leaky_relu(-2.0, 0.1) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(leaky_relu(0.0, 0.1) == 0.0);
}

TEST_CASE("composite expression against hand derivatives") {
  Tape t;
  const Var a = t.variable(1.5);
  const Var b = t.variable(-0.7);
  // f = exp(a*b) / sqrt(a) - b
  const Var f = exp(a * b) / sqrt(a) - b;
  const auto g = t.backward(f);
  const double av = 1.5, bv = -0.7;
  const double e = std::exp(av * bv);
  CHECK(f.value() == doctest::Approx(e / std::sqrt(av) - bv).epsilon(1e-14));
  const double dfa = bv * e / std::sqrt(av) - 0.5 * e * std::pow(av, -1.5);
  const double dfb = av * e / std::sqrt(av) - 1.0;
  CHECK(g[static_cast<std::size_t>(a.index())] == doctest::Approx(dfa).epsilon(1e-14));
  CHECK(g[static_cast<std::size_t>(b.index())] == doctest::Approx(dfb).epsilon(1e-14));
}

TEST_CASE("affine node") {
  Tape t;
  std::vector<Var> w{t.variable(1.0), t.variable(2.0)};
  std::vector<Var> x{t.variable(3.0), t.variable(4.0)};
  const Var bias = t.variable(0.5);
  const Var y = affine(w, x, bias);
  CHECK(y.value() == 11.5);
  const auto g = t.backward(y);
  CHECK(g[static_cast<std::size_t>(w[0].index())] == 3.0);
  CHECK(g[static_cast<std::size_t>(w[1].index())] == 4.0);
  CHECK(g[static_cast<std::size_t>(x[0].index())] == 1.0);
  CHECK(g[static_cast<std::size_t>(x[1].index())] == 2.0);
  CHECK(g[static_cast<std::size_t>(bias.index())] == 1.0);
}

TEST_CASE("shared subexpressions accumulate adjoints") {
  Tape t;
  const Var x = t.variable(2.0);
  const Var y = x * x + x * 3.0;  // 2x + 3
  CHECK(t.backward(y)[static_cast<std::size_t>(x.index())] == 7.0);
}

TEST_CASE("tape is topologically ordered") {
  Tape t;
  const Var x = t.variable(0.3);
  const Var y = exp(x) * sqrt(x) + square(x - 1.0);
  (void)y;
  for (std::size_t n = 0; n < t.size(); ++n) {
    for (const auto& e : t.parents(n)) CHECK(static_cast<std::size_t>(e.parent) < n);
  }
  const Tape::Edge bad{static_cast<std::int32_t>(t.size() + 3), 1.0};
  CHECK_THROWS_AS(t.push(Op::neg, 0.0, std::span<const Tape::Edge>(&bad, 1)), Error);
}

TEST_CASE("invalid primitives name the node") {
  Tape t;
  const Var x = t.variable(-1.0);
  try {
    (void)sqrt(x);
    FAIL("sqrt of a negative accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::evaluation);
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
  const Var z = t.variable(0.0);
  try {
    (void)(x / z);
    FAIL("division by zero accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::evaluation);
  }
}

TEST_CASE("constants never touch a tape") {
  const Var a(2.0), b(3.0);
  const Var c = a * b + exp(a);
  CHECK(c.is_constant());
  CHECK(c.value() == doctest::Approx(6.0 + std::exp(2.0)));
}

TEST_CASE("operands from different tapes are rejected") {
  Tape t1, t2;
  const Var a = t1.variable(1.0);
  const Var b = t2.variable(1.0);
  CHECK_THROWS_AS((void)(a + b), Error);
}
