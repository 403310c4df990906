#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vps/matrix_ode.hpp"

using namespace vps;

namespace {

SecondOrderRhs harmonic(double k) {
  return [k](double, const ComplexMatrix& m, const ComplexMatrix&) {
    return ComplexMatrix(-k * k * m);
  };
}

}  // namespace

TEST_CASE("harmonic oscillator over one period") {
  const double k = 2.0;
  const int n = 3;
  const ComplexMatrix m0 = ComplexMatrix::Identity(n, n);
  const ComplexMatrix mp0 = ComplexMatrix::Zero(n, n);
  const double r1 = 1.0 + 2.0 * pi / k;
  const auto sol = integrate_second_order(harmonic(k), 1.0, m0, mp0, r1);
  const double delta = r1 - 1.0;
  CHECK((sol.value - std::cos(k * delta) * m0).norm() < 1e-8);
  CHECK((sol.derivative + k * std::sin(k * delta) * m0).norm() < 1e-8);
  CHECK(sol.steps >= 50);  // max-step cap enforces at least range/50
}

TEST_CASE("zero rhs keeps the state constant") {
  SecondOrderRhs rhs = [](double, const ComplexMatrix& m, const ComplexMatrix&) {
    return ComplexMatrix::Zero(m.rows(), m.cols()).eval();
  };
  ComplexMatrix m0(2, 2), mp0(2, 2);
  m0 << Complex(1, 2), Complex(0, -1), Complex(3, 0), Complex(-2, 1);
  mp0.setZero();
  const auto sol = integrate_second_order(rhs, 0.5, m0, mp0, 4.5);
  CHECK((sol.value - m0).norm() == 0.0);
}

TEST_CASE("halving rtol improves accuracy") {
  const double k = 3.0;
  const ComplexMatrix m0 = ComplexMatrix::Identity(1, 1);
  const ComplexMatrix mp0 = ComplexMatrix::Zero(1, 1);
  const double r1 = 11.0;
  OdeOptions tight;
  tight.rtol = 1e-13;
  tight.atol = 1e-15;
  const Complex ref =
      integrate_second_order(harmonic(k), 1.0, m0, mp0, r1, tight).value(0, 0);

  auto err_at = [&](double rtol) {
    OdeOptions o;
    o.rtol = rtol;
    o.atol = 1e-14;
    return std::abs(
        integrate_second_order(harmonic(k), 1.0, m0, mp0, r1, o).value(0, 0) -
        ref);
  };
  const double coarse = err_at(2e-7);
  const double fine = err_at(1e-7);
  CHECK(fine < coarse / 2.0 * 1.2);  // at least ~2x, with slack for noise
  CHECK(coarse > 0.0);
}

TEST_CASE("inward then outward integration is the identity") {
  // Coupled linear system with r-dependent coefficients.
  SecondOrderRhs rhs = [](double r, const ComplexMatrix& m,
                          const ComplexMatrix& mp) {
    ComplexMatrix a(2, 2);
    a << Complex(0.3, 0.1) * std::sin(r), Complex(0.2, 0.0),
        Complex(0.0, -0.4), Complex(-0.5, 0.0) * std::cos(r);
    return ComplexMatrix(a * m - 0.1 * mp);
  };
  ComplexMatrix m0(2, 2), mp0(2, 2);
  m0 << 1.0, Complex(0.2, 0.3), 0.0, 1.0;
  mp0 << 0.1, 0.0, Complex(0.0, 0.2), -0.3;
  const auto fwd = integrate_second_order(rhs, 1.0, m0, mp0, 6.0);
  const auto back =
      integrate_second_order(rhs, 6.0, fwd.value, fwd.derivative, 1.0);
  CHECK((back.value - m0).norm() < 1e-7);
  CHECK((back.derivative - mp0).norm() < 1e-7);
}

TEST_CASE("dense output samples") {
  const double k = 1.5;
  const ComplexMatrix m0 = ComplexMatrix::Identity(1, 1);
  const ComplexMatrix mp0 = ComplexMatrix::Zero(1, 1);
  const std::vector<double> pts = {2.0, 3.5, 5.0};
  const auto sol =
      integrate_second_order(harmonic(k), 1.0, m0, mp0, 6.0, {}, pts);
  REQUIRE(sol.trace.size() == 3);
  for (const auto& s : sol.trace) {
    CHECK(std::abs(s.value(0, 0) - std::cos(k * (s.r - 1.0))) < 1e-7);
    CHECK(std::abs(s.derivative(0, 0) + k * std::sin(k * (s.r - 1.0))) < 1e-6);
  }
  // Inward sampling works too.
  const auto in_sol = integrate_second_order(harmonic(k), 6.0, m0, mp0, 1.0, {},
                                             {5.0, 2.0});
  REQUIRE(in_sol.trace.size() == 2);
  CHECK(in_sol.trace.front().r == 5.0);
}

TEST_CASE("failure paths are diagnosed") {
  // Blow-up at finite r: m'' = m / (r - 2)^3 integrated across r = 2.
  SecondOrderRhs rhs = [](double r, const ComplexMatrix& m,
                          const ComplexMatrix&) {
    const double d = r - 2.0;
    return ComplexMatrix(m / (d * d * d));
  };
  const ComplexMatrix m0 = ComplexMatrix::Identity(1, 1);
  CHECK_THROWS_AS(
      integrate_second_order(rhs, 1.0, m0, ComplexMatrix::Zero(1, 1), 3.0),
      IntegrationError);
  CHECK_THROWS_AS(
      integrate_second_order(rhs, 1.0, m0, ComplexMatrix::Zero(1, 1), 1.0),
      std::invalid_argument);
}
