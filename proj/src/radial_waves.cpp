#include "vps/radial_waves.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace vps {

namespace {

void require_nonzero(Complex z, const char* who) {
  if (z == Complex(0.0, 0.0))
    throw std::domain_error(std::string(who) + ": singular at z = 0");
}

double double_factorial_odd(int l) {
  // (2l+1)!!
  double v = 1.0;
  for (int n = 3; n <= 2 * l + 1; n += 2) v *= n;
  return v;
}

}  // namespace

Complex riccati_hankel(int l, Complex z) { return riccati_hankel_pair(l, z).first; }

std::pair<Complex, Complex> riccati_hankel_pair(int l, Complex z) {
  require_nonzero(z, "riccati_hankel");
  if (l < 0) throw std::invalid_argument("riccati_hankel: negative order");
  const Complex eiz = std::exp(iu * z);
  Complex wm1 = eiz;        // l = -1
  Complex w0 = -iu * eiz;   // l = 0
  if (l == 0) return {w0, wm1};
  Complex wprev = wm1, w = w0;
  for (int n = 0; n < l; ++n) {
    Complex wnext = (2.0 * n + 1.0) / z * w - wprev;
    wprev = w;
    w = wnext;
  }
  return {w, wprev - (double(l) / z) * w};
}

Complex riccati_bessel(int l, Complex z) { return riccati_bessel_pair(l, z).first; }

std::pair<Complex, Complex> riccati_bessel_pair(int l, Complex z) {
  if (l < 0) throw std::invalid_argument("riccati_bessel: negative order");
  const double az = std::abs(z);
  if (az < 1e-6) {
    // Leading series terms; relative error below az^4.
    const double df = double_factorial_odd(l);
    Complex zp = std::pow(z, l + 1);
    Complex val = zp / df * (1.0 - z * z / (2.0 * (2.0 * l + 3.0)));
    Complex der = (l + 1.0) * std::pow(z, l) / df *
                  (1.0 - z * z * (l + 3.0) / (2.0 * (l + 1.0) * (2.0 * l + 3.0)));
    return {val, der};
  }

  const int nstart = l + 15 + static_cast<int>(az);
  std::vector<Complex> f(nstart + 2);
  f[nstart + 1] = Complex(0.0, 0.0);
  f[nstart] = Complex(1e-280, 0.0);
  for (int n = nstart; n >= 1; --n) {
    f[n - 1] = (2.0 * n + 1.0) / z * f[n] - f[n + 1];
    if (std::abs(f[n - 1]) > 1e280) {
      for (int m = n - 1; m <= nstart + 1; ++m) f[m] *= 1e-280;
    }
  }
  // Normalize by whichever of jbar_0 = sin z, jbar_1 = sin z / z - cos z is
  // better conditioned.
  const Complex j0 = std::sin(z);
  const Complex j1 = std::sin(z) / z - std::cos(z);
  Complex scale;
  if (std::abs(f[0]) >= std::abs(f[1])) {
    scale = j0 / f[0];
  } else {
    scale = j1 / f[1];
  }
  const Complex val = f[l] * scale;
  const Complex jm1 = (l >= 1) ? f[l - 1] * scale : std::cos(z);
  return {val, jm1 - (double(l) / z) * val};
}

Complex riccati_bessel_log_derivative(int l, Complex z) {
  require_nonzero(z, "riccati_bessel_log_derivative");
  if (l < 0)
    throw std::invalid_argument("riccati_bessel_log_derivative: negative order");
  if (l == 0) {
    // cot(z), evaluated through e^{+-2iz} so large |Im z| cannot overflow.
    if (z.imag() > 20.0) {
      const Complex w = std::exp(2.0 * iu * z);
      return iu * (w + 1.0) / (w - 1.0);
    }
    if (z.imag() < -20.0) {
      const Complex w = std::exp(-2.0 * iu * z);
      return iu * (1.0 + w) / (1.0 - w);
    }
    return std::cos(z) / std::sin(z);
  }
  const int nstart = l + 20 + static_cast<int>(std::abs(z));
  Complex ratio = z / (2.0 * nstart + 3.0);  // jbar_{n+1}/jbar_n seed
  for (int n = nstart; n >= l; --n) {
    const Complex denom = (2.0 * n + 1.0) / z - ratio;
    if (denom == Complex(0.0, 0.0))
      throw PoleError("riccati_bessel_log_derivative: ratio pole");
    ratio = 1.0 / denom;  // jbar_n / jbar_{n-1}
  }
  return 1.0 / ratio - double(l) / z;
}

Complex hankel_log_derivative(int l, Complex x) {
  require_nonzero(x, "hankel_log_derivative");
  if (l < 0) throw std::invalid_argument("hankel_log_derivative: negative order");
  // rho_n = w_n / w_{n-1}; rho_0 = -i, rho_{n+1} = (2n+1)/x - 1/rho_n.
  Complex rho = -iu;
  for (int n = 0; n < l; ++n) {
    if (rho == Complex(0.0, 0.0))
      throw PoleError("hankel_log_derivative: ratio pole in continued fraction");
    rho = (2.0 * n + 1.0) / x - 1.0 / rho;
  }
  if (rho == Complex(0.0, 0.0))
    throw PoleError("hankel_log_derivative: zero of x h_l(x)");
  return 1.0 / rho - double(l) / x;
}

Complex hankel_log_derivative2(int l, Complex x) {
  const Complex u1 = hankel_log_derivative(l, x);
  return double(l) * (l + 1.0) / (x * x) - 1.0 - u1 * u1;
}

RealVector small_r_ratio_limit(const ChannelBasis& basis) {
  RealVector d(basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    d(i) = (basis.orbital_l()[i] % 2 == 0) ? 1.0 : -1.0;
  return d;
}

ComplexVector FreeWaveMatrix::diagonal(double r) const {
  ComplexVector d(basis_.dim());
  for (int i = 0; i < basis_.dim(); ++i)
    d(i) = riccati_hankel(basis_.orbital_l()[i], k_ * r);
  return d;
}

ComplexVector FreeWaveMatrix::log_derivative_r(double r) const {
  ComplexVector d(basis_.dim());
  for (int i = 0; i < basis_.dim(); ++i)
    d(i) = k_ * hankel_log_derivative(basis_.orbital_l()[i], k_ * r);
  return d;
}

ComplexVector FreeWaveMatrix::log_derivative2_r(double r) const {
  ComplexVector d(basis_.dim());
  for (int i = 0; i < basis_.dim(); ++i)
    d(i) = k_ * k_ * hankel_log_derivative2(basis_.orbital_l()[i], k_ * r);
  return d;
}

}  // namespace vps
