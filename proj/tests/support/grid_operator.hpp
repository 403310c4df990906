#pragma once

// Independent application of the generalized wave operator
//   L[E] = curl curl E - eps grad(div(eps E)) - k^2 eps E
// on a dense Cartesian stencil, projected back onto vector channels by
// angular quadrature. Used as an oracle for the channel-space assembly.

#include <functional>

#include "quadrature.hpp"
#include "vps/channel_basis.hpp"
#include "vps/source_models.hpp"
#include "vps/spherical_harmonics.hpp"

namespace vps::testing {

struct TrialField {
  // psi_c(r) with first and second derivatives, one entry per channel.
  std::function<Complex(int, double, int)> psi;  // (channel, r, deriv) -> value
  const ChannelBasis* basis;
};

inline Complex eval_eps(const MultipoleField& eps, const Eigen::Vector3d& p) {
  const double r = p.norm();
  const double theta = std::acos(std::clamp(p.z() / r, -1.0, 1.0));
  const double phi = std::atan2(p.y(), p.x());
  Complex val = 0.0;
  for (const auto& [l, m] : eps.moment_indices())
    val += eps.moment(l, m, r).f * spherical_harmonic(l, m, theta, phi);
  return val;
}

inline Vector3c eval_field(const TrialField& trial, const Eigen::Vector3d& p) {
  const double r = p.norm();
  const double theta = std::acos(std::clamp(p.z() / r, -1.0, 1.0));
  const double phi = std::atan2(p.y(), p.x());
  Vector3c out = Vector3c::Zero();
  for (int c = 0; c < trial.basis->dim(); ++c) {
    const Channel ch = trial.basis->channel(c);
    out += trial.psi(c, r, 0) / r *
           vector_spherical_harmonic(ch.j, ch.l, ch.m, theta, phi);
  }
  return out;
}

// Hessian entry d_i d_j g by central differences with one Richardson step.
template <typename F>
Complex hessian_entry(const F& g, const Eigen::Vector3d& p, int i, int j,
                      double h) {
  auto d2 = [&](double hh) -> Complex {
    Eigen::Vector3d ei = Eigen::Vector3d::Zero(), ej = Eigen::Vector3d::Zero();
    ei(i) = hh;
    ej(j) = hh;
    if (i == j)
      return (g(p + ei) - 2.0 * g(p) + g(p - ei)) / (hh * hh);
    return (g(p + ei + ej) - g(p + ei - ej) - g(p - ei + ej) + g(p - ei - ej)) /
           (4.0 * hh * hh);
  };
  return (4.0 * d2(h) - d2(2.0 * h)) / 3.0;
}

// L[E] at a point, all derivatives by finite differences.
inline Vector3c apply_generalized_operator(const MultipoleField& eps,
                                           const TrialField& trial, Complex k,
                                           const Eigen::Vector3d& p, double h) {
  Vector3c out = Vector3c::Zero();
  const Complex eps_p = eval_eps(eps, p);
  const Vector3c e_p = eval_field(trial, p);
  for (int i = 0; i < 3; ++i) {
    Complex val = 0.0;
    for (int j = 0; j < 3; ++j) {
      auto ej = [&](const Eigen::Vector3d& q) { return eval_field(trial, q)(j); };
      auto eej = [&](const Eigen::Vector3d& q) {
        return eval_eps(eps, q) * eval_field(trial, q)(j);
      };
      // curl curl = grad div - laplacian
      val += hessian_entry(ej, p, i, j, h);
      if (j == i) {
        auto ei = [&](const Eigen::Vector3d& q) { return eval_field(trial, q)(i); };
        for (int a = 0; a < 3; ++a) val -= hessian_entry(ei, p, a, a, h);
      }
      val -= eps_p * hessian_entry(eej, p, i, j, h);
    }
    val -= k * k * eps_p * e_p(i);
    out(i) = val;
  }
  return out;
}

// Channel projection of L[E] at radius r by angular quadrature.
inline ComplexVector project_operator(const MultipoleField& eps,
                                      const TrialField& trial, Complex k,
                                      double r, double h,
                                      const AngularGrid& grid) {
  const ChannelBasis& basis = *trial.basis;
  ComplexVector out = ComplexVector::Zero(basis.dim());
  for (size_t it = 0; it < grid.theta.size(); ++it) {
    for (size_t ip = 0; ip < grid.phi.size(); ++ip) {
      const double theta = grid.theta[it], phi = grid.phi[ip];
      const Eigen::Vector3d p(r * std::sin(theta) * std::cos(phi),
                              r * std::sin(theta) * std::sin(phi),
                              r * std::cos(theta));
      const Vector3c lval = apply_generalized_operator(eps, trial, k, p, h);
      const double w = grid.weight_theta[it] * grid.weight_phi;
      for (int c = 0; c < basis.dim(); ++c) {
        const Channel ch = basis.channel(c);
        const Vector3c y =
            vector_spherical_harmonic(ch.j, ch.l, ch.m, theta, phi);
        out(c) += w * y.dot(lval);  // conj(y) . L
      }
    }
  }
  return out;
}

}  // namespace vps::testing
