#include "vps/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vps/radial_waves.hpp"
#include "vps/spherical_harmonics.hpp"

namespace vps {

namespace {

struct Spherical {
  double r, theta, phi;
};

Spherical to_spherical(const Vector3d& v) {
  const double r = v.norm();
  if (r == 0.0) throw std::invalid_argument("to_spherical: zero vector");
  return {r, std::acos(std::clamp(v.z() / r, -1.0, 1.0)),
          std::atan2(v.y(), v.x())};
}

Complex spherical_j(int l, Complex z) { return riccati_bessel(l, z) / z; }
Complex spherical_h1(int l, Complex z) { return riccati_hankel(l, z) / z; }

Complex radial_z(int l, double k, double r, RadialKind kind) {
  const Complex z = Complex(k * r, 0.0);
  return kind == RadialKind::Regular ? spherical_j(l, z) : spherical_h1(l, z);
}

Complex ipow(int l) {
  switch (((l % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

namespace {

// S from interior log-derivative matching at r = a: the exterior combination
// h2 + S h1 matches q_eff (d/dr log of the interior regular solution). The
// ratio form stays finite where the interior function overflows or vanishes.
Complex s_from_matching(int l, Complex k, double a, Complex q_interior,
                        Complex weight) {
  const auto [h1, h1d] = riccati_hankel_pair(l, k * a);
  const auto [jk, jkd] = riccati_bessel_pair(l, k * a);
  const Complex h2 = 2.0 * jk - h1;
  const Complex h2d = 2.0 * jkd - h1d;
  Complex num, den;
  if (std::abs(q_interior) * a < 1e-8) {
    // q -> 0 limit of the interior log-derivative: q L_j -> (l+1)/a.
    num = weight * (l + 1.0) / a * h2 - k * h2d;
    den = weight * (l + 1.0) / a * h1 - k * h1d;
  } else {
    const Complex lj = riccati_bessel_log_derivative(l, q_interior * a);
    if (std::abs(lj) > 1e12) {
      // Interior node at the boundary: only the leading terms survive.
      num = h2;
      den = h1;
    } else {
      num = weight * q_interior * lj * h2 - k * h2d;
      den = weight * q_interior * lj * h1 - k * h1d;
    }
  }
  if (std::abs(den) < 1e-14 * std::abs(num))
    throw PoleError("analytic S-matrix: pole");
  return -num / den;
}

}  // namespace

Complex s_exact_square_well(int l, Complex k, double v0, double a) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("s_exact_square_well: k must be nonzero");
  if (a <= 0.0) throw std::invalid_argument("s_exact_square_well: a must be positive");
  const Complex q = std::sqrt(k * k - v0);
  return s_from_matching(l, k, a, q, 1.0);
}

Complex s_exact_dielectric_sphere(int j, int delta, Complex k, double n,
                                  double a) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("s_exact_dielectric_sphere: k must be nonzero");
  if (n <= 0.0 || a <= 0.0)
    throw std::invalid_argument("s_exact_dielectric_sphere: n and a must be positive");
  if (delta != 1 && delta != -1)
    throw std::invalid_argument("s_exact_dielectric_sphere: delta must be +1 or -1");
  // num = n^delta h2(ka) jbar'(nka) - h2'(ka) jbar(nka); dividing through by
  // jbar(nka) and matching the (weight q lj, k) form leaves n^(delta-1).
  const double weight = (delta == 1) ? 1.0 : 1.0 / (n * n);
  return s_from_matching(j, k, a, n * k, weight);
}

Complex scalar_plane_wave_coeff(int l, int m, double theta_k, double phi_k) {
  return 4.0 * pi * ipow(l) * std::conj(spherical_harmonic(l, m, theta_k, phi_k));
}

Complex scalar_greens_function(const Vector3d& r1, const Vector3d& r2, double k,
                               int lmax) {
  const Spherical s1 = to_spherical(r1);
  const Spherical s2 = to_spherical(r2);
  const double rl = std::min(s1.r, s2.r);
  const double rg = std::max(s1.r, s2.r);
  if (std::abs(rg - rl) < 1e-12 * rg)
    throw std::invalid_argument("scalar_greens_function: coincident radii");
  Complex sum = 0.0;
  for (int l = 0; l <= lmax; ++l) {
    const Complex radial =
        spherical_j(l, Complex(k * rl, 0.0)) * spherical_h1(l, Complex(k * rg, 0.0));
    Complex ang = 0.0;
    for (int m = -l; m <= l; ++m) {
      ang += std::conj(spherical_harmonic(l, m, s2.theta, s2.phi)) *
             spherical_harmonic(l, m, s1.theta, s1.phi);
    }
    sum += radial * ang;
  }
  return iu * k * sum;
}

Matrix3c dyadic_greens_function_ljm(const Vector3d& r1, const Vector3d& r2,
                                    double k, int jmax) {
  const Spherical s1 = to_spherical(r1);
  const Spherical s2 = to_spherical(r2);
  if (!(s1.r < s2.r))
    throw std::invalid_argument("dyadic_greens_function: require |r1| < |r2|");
  Matrix3c sum = Matrix3c::Zero();
  for (int j = 0; j <= jmax; ++j)
    for (int l = std::max(0, j - 1); l <= j + 1; ++l) {
      if (j == 0 && l != 1) continue;
      const Complex radial = spherical_j(l, Complex(k * s1.r, 0.0)) *
                             spherical_h1(l, Complex(k * s2.r, 0.0));
      for (int m = -j; m <= j; ++m) {
        const Vector3c y1 =
            vector_spherical_harmonic(j, l, m, s1.theta, s1.phi).conjugate();
        const Vector3c y2 = vector_spherical_harmonic(j, l, m, s2.theta, s2.phi);
        sum += radial * (y1 * y2.transpose());
      }
    }
  return iu * k * sum;
}

Vector3c transverse_solution_m(int j, int m, double k, const Vector3d& r,
                               RadialKind kind) {
  if (j < 1) throw std::invalid_argument("transverse_solution_m: j >= 1");
  const Spherical s = to_spherical(r);
  return radial_z(j, k, s.r, kind) *
         vector_spherical_harmonic(j, j, m, s.theta, s.phi);
}

Vector3c transverse_solution_n(int j, int m, double k, const Vector3d& r,
                               RadialKind kind) {
  if (j < 1) throw std::invalid_argument("transverse_solution_n: j >= 1");
  const Spherical s = to_spherical(r);
  const double am = std::sqrt(j / (2.0 * j + 1.0));
  const double ap = std::sqrt((j + 1.0) / (2.0 * j + 1.0));
  return -ap * radial_z(j - 1, k, s.r, kind) *
             vector_spherical_harmonic(j, j - 1, m, s.theta, s.phi) +
         am * radial_z(j + 1, k, s.r, kind) *
             vector_spherical_harmonic(j, j + 1, m, s.theta, s.phi);
}

Vector3c longitudinal_solution(int j, int m, double k, const Vector3d& r,
                               RadialKind kind) {
  const Spherical s = to_spherical(r);
  const double am = std::sqrt(j / (2.0 * j + 1.0));
  const double ap = std::sqrt((j + 1.0) / (2.0 * j + 1.0));
  Vector3c out = ap * radial_z(j + 1, k, s.r, kind) *
                 vector_spherical_harmonic(j, j + 1, m, s.theta, s.phi);
  if (j >= 1)
    out += am * radial_z(j - 1, k, s.r, kind) *
           vector_spherical_harmonic(j, j - 1, m, s.theta, s.phi);
  return out;
}

Matrix3c dyadic_greens_function_mnl(const Vector3d& r1, const Vector3d& r2,
                                    double k, int jmax) {
  const Spherical s1 = to_spherical(r1);
  const Spherical s2 = to_spherical(r2);
  if (!(s1.r < s2.r))
    throw std::invalid_argument("dyadic_greens_function: require |r1| < |r2|");
  Matrix3c sum = Matrix3c::Zero();
  for (int j = 0; j <= jmax; ++j)
    for (int m = -j; m <= j; ++m) {
      {
        const Vector3c reg =
            longitudinal_solution(j, m, k, r1, RadialKind::Regular).conjugate();
        const Vector3c out = longitudinal_solution(j, m, k, r2, RadialKind::Outgoing);
        sum += reg * out.transpose();
      }
      if (j >= 1) {
        const Vector3c regm =
            transverse_solution_m(j, m, k, r1, RadialKind::Regular).conjugate();
        const Vector3c outm = transverse_solution_m(j, m, k, r2, RadialKind::Outgoing);
        sum += regm * outm.transpose();
        const Vector3c regn =
            transverse_solution_n(j, m, k, r1, RadialKind::Regular).conjugate();
        const Vector3c outn = transverse_solution_n(j, m, k, r2, RadialKind::Outgoing);
        sum += regn * outn.transpose();
      }
    }
  return iu * k * sum;
}

}  // namespace vps
