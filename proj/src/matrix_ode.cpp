#include "vps/matrix_ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vps {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const ComplexMatrix& err, const ComplexMatrix& y0,
                  const ComplexMatrix& y1, double atol, double rtol) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < err.cols(); ++j)
    for (Eigen::Index i = 0; i < err.rows(); ++i) {
      const double sc =
          atol + rtol * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
      const double e = std::abs(err(i, j)) / sc;
      acc += e * e;
    }
  return std::sqrt(acc / double(err.size()));
}

ComplexMatrix hermite(const ComplexMatrix& y0, const ComplexMatrix& f0,
                      const ComplexMatrix& y1, const ComplexMatrix& f1,
                      double h, double theta) {
  const double t2 = theta * theta, t3 = t2 * theta;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * f0 +
         (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1;
}

}  // namespace

RadialMatrixSolution integrate_second_order(
    const SecondOrderRhs& rhs, double r_start, const ComplexMatrix& m0,
    const ComplexMatrix& mp0, double r_end, const OdeOptions& options,
    std::vector<double> sample_points) {
  if (r_start == r_end)
    throw std::invalid_argument("integrate_second_order: empty range");
  if (m0.rows() != mp0.rows() || m0.cols() != mp0.cols())
    throw std::invalid_argument("integrate_second_order: shape mismatch");

  const Eigen::Index n = m0.rows(), nc = m0.cols();
  const double dir = (r_end > r_start) ? 1.0 : -1.0;
  const double range = std::abs(r_end - r_start);
  const double max_step = options.max_step_fraction * range;

  std::sort(sample_points.begin(), sample_points.end());
  if (dir < 0) std::reverse(sample_points.begin(), sample_points.end());
  size_t next_sample = 0;

  auto f = [&](double r, const ComplexMatrix& y) -> ComplexMatrix {
    ComplexMatrix out(2 * n, nc);
    out.topRows(n) = y.bottomRows(n);
    out.bottomRows(n) = rhs(r, y.topRows(n), y.bottomRows(n));
    return out;
  };

  ComplexMatrix y(2 * n, nc);
  y.topRows(n) = m0;
  y.bottomRows(n) = mp0;

  RadialMatrixSolution sol;
  sol.direction = (dir > 0) ? Direction::Outward : Direction::Inward;
  sol.r_start = r_start;
  sol.r_end = r_end;
  sol.min_step = std::numeric_limits<double>::infinity();

  double r = r_start;
  double h = dir * std::min(max_step, std::min(range / 1000.0,
                                               0.2 * std::min(std::abs(r_start),
                                                              std::abs(r_end)) +
                                                   1e-3 * range));
  ComplexMatrix k1 = f(r, y);

  while (dir * (r_end - r) > 0.0) {
    if (sol.steps + sol.rejected > options.max_steps)
      throw IntegrationError("integrate_second_order: step budget exhausted", r);
    if (dir * (r + h) > dir * r_end) h = r_end - r;
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(r)))
      throw IntegrationError("integrate_second_order: step size underflow", r);

    const ComplexMatrix k2 = f(r + c2 * h, y + h * (a21 * k1));
    const ComplexMatrix k3 = f(r + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const ComplexMatrix k4 = f(r + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const ComplexMatrix k5 =
        f(r + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const ComplexMatrix k6 =
        f(r + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const ComplexMatrix ynew =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const ComplexMatrix k7 = f(r + h, ynew);  // FSAL
    const ComplexMatrix err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = error_norm(err, y, ynew, options.atol, options.rtol);
    if (!std::isfinite(en) || !ynew.allFinite()) {
      // Retry with a smaller step before declaring failure.
      h *= 0.25;
      ++sol.rejected;
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(r)))
        throw IntegrationError("integrate_second_order: non-finite state", r);
      continue;
    }

    if (en <= 1.0) {
      // Dense output for samples inside the accepted step.
      while (next_sample < sample_points.size() &&
             dir * (sample_points[next_sample] - r) >= 0.0 &&
             dir * (r + h - sample_points[next_sample]) >= 0.0) {
        const double theta = (sample_points[next_sample] - r) / h;
        ComplexMatrix ys = hermite(y, k1, ynew, k7, h, theta);
        sol.trace.push_back(
            {sample_points[next_sample], ys.topRows(n), ys.bottomRows(n)});
        ++next_sample;
      }
      r += h;
      y = ynew;
      k1 = k7;
      ++sol.steps;
      sol.min_step = std::min(sol.min_step, std::abs(h));
    } else {
      ++sol.rejected;
    }

    const double factor =
        std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, 5.0);
    h *= factor;
    if (std::abs(h) > max_step) h = dir * max_step;
  }

  if (!y.allFinite())
    throw IntegrationError("integrate_second_order: non-finite result", r);
  sol.value = y.topRows(n);
  sol.derivative = y.bottomRows(n);
  return sol;
}

}  // namespace vps
