#pragma once

// Independent TM-polarization oracle for a radially stratified dielectric:
// the scalar radial equation u'' - (eps'/eps) u' + (eps k^2 - j(j+1)/r^2) u = 0
// integrated outward and matched to h2 + S h1 in the vacuum region.

#include <cmath>

#include "vps/matrix_ode.hpp"
#include "vps/radial_waves.hpp"
#include "vps/source_models.hpp"

namespace vps::testing {

inline Complex stratified_tm_s(int j, double k, const MultipoleField& eps) {
  const double rbig = eps.support_radius() + 0.2;
  const double rs = 1e-5;
  SecondOrderRhs rhs = [&eps, j, k](double r, const ComplexMatrix& u,
                                    const ComplexMatrix& up) {
    const MomentValue mv = eps.moment(0, 0, r);
    const Complex e = mv.f / std::sqrt(4.0 * pi);
    const Complex ep = mv.df / std::sqrt(4.0 * pi);
    return ComplexMatrix((ep / e) * up +
                         (double(j) * (j + 1.0) / (r * r) - e * k * k) * u);
  };
  ComplexMatrix u0(1, 1), up0(1, 1);
  u0(0, 0) = std::pow(rs, j + 1);
  up0(0, 0) = (j + 1.0) * std::pow(rs, j);
  OdeOptions ode;
  ode.rtol = 1e-11;
  ode.atol = 1e-16;
  const auto sol = integrate_second_order(rhs, rs, u0, up0, rbig, ode);
  const auto [h1, h1d] = riccati_hankel_pair(j, k * rbig);
  const auto [jk, jkd] = riccati_bessel_pair(j, k * rbig);
  const Complex h2 = 2.0 * jk - h1, h2d = 2.0 * jkd - h1d;
  const Complex ld = sol.derivative(0, 0) / sol.value(0, 0);
  return -(ld * h2 - k * h2d) / (ld * h1 - k * h1d);
}

}  // namespace vps::testing
