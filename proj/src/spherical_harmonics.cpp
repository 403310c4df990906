#include "vps/spherical_harmonics.hpp"

#include <cmath>
#include <stdexcept>

#include "vps/wigner.hpp"

namespace vps {

namespace {

// Fully normalized associated Legendre P~_l^m(cos theta) for m >= 0, with the
// Condon-Shortley phase folded into the sectoral seed.
double normalized_legendre(int l, int m, double x) {
  const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = std::sqrt(1.0 / (4.0 * pi));
  for (int k = 1; k <= m; ++k) {
    pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * somx2;
  }
  if (l == m) return pmm;
  double pmmp1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    const double a = std::sqrt((4.0 * ll * ll - 1.0) / (double(ll) * ll - double(m) * m));
    const double b = std::sqrt((double(ll - 1) * (ll - 1) - double(m) * m) /
                               (4.0 * double(ll - 1) * (ll - 1) - 1.0));
    pll = a * (x * pmmp1 - b * pmm);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

Vector3c spherical_basis_vector(int sigma) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (sigma) {
    case 1:
      return Vector3c(-s, Complex(0.0, -s), 0.0);
    case 0:
      return Vector3c(0.0, 0.0, 1.0);
    case -1:
      return Vector3c(s, Complex(0.0, -s), 0.0);
    default:
      throw std::invalid_argument("spherical_basis_vector: sigma must be -1, 0, 1");
  }
}

bool valid_vsh_triple(int j, int l, int m) {
  if (j < 0 || l < 0) return false;
  if (std::abs(m) > j) return false;
  return std::abs(l - 1) <= j && j <= l + 1;
}

}  // namespace

Complex spherical_harmonic(int l, int m, double theta, double phi) {
  if (l < 0 || std::abs(m) > l)
    throw std::invalid_argument("spherical_harmonic: require l >= 0, |m| <= l");
  const int ma = std::abs(m);
  const double p = normalized_legendre(l, ma, std::cos(theta));
  Complex y = p * std::exp(Complex(0.0, ma * phi));
  if (m < 0) {
    y = std::conj(y);
    if (ma % 2 != 0) y = -y;
  }
  return y;
}

Vector3c vector_spherical_harmonic(int j, int l, int m, double theta, double phi) {
  if (!valid_vsh_triple(j, l, m))
    throw std::invalid_argument("vector_spherical_harmonic: invalid (j, l, m)");
  Vector3c out = Vector3c::Zero();
  for (int sigma = -1; sigma <= 1; ++sigma) {
    const int mp = m - sigma;
    if (std::abs(mp) > l) continue;
    const double c = clebsch_gordan(l, mp, 1, sigma, j, m);
    if (c == 0.0) continue;
    out += c * spherical_harmonic(l, mp, theta, phi) * spherical_basis_vector(sigma);
  }
  return out;
}

Vector3c transverse_combination(TransverseKind kind, int j, int m, double theta,
                                double phi) {
  if (j < 1 && kind != TransverseKind::L)
    throw std::invalid_argument("transverse_combination: M and N require j >= 1");
  const double am = std::sqrt(j / (2.0 * j + 1.0));
  const double ap = std::sqrt((j + 1.0) / (2.0 * j + 1.0));
  switch (kind) {
    case TransverseKind::M:
      return vector_spherical_harmonic(j, j, m, theta, phi);
    case TransverseKind::N:
      return ap * vector_spherical_harmonic(j, j - 1, m, theta, phi) +
             am * vector_spherical_harmonic(j, j + 1, m, theta, phi);
    case TransverseKind::L: {
      Vector3c out = -ap * vector_spherical_harmonic(j, j + 1, m, theta, phi);
      if (j >= 1) out += am * vector_spherical_harmonic(j, j - 1, m, theta, phi);
      return out;
    }
  }
  throw std::logic_error("transverse_combination: unreachable");
}

}  // namespace vps
