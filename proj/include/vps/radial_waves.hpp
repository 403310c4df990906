#pragma once

#include "vps/channel_basis.hpp"
#include "vps/types.hpp"

namespace vps {

/// Riccati-Hankel function z h^(1)_l(z) for complex z != 0, by upward
/// recurrence from the l = 0, 1 closed forms. h^(1) is the dominant solution
/// in l, so the recurrence is stable for any complex argument.
Complex riccati_hankel(int l, Complex z);

/// Value and argument-derivative of z h^(1)_l(z).
std::pair<Complex, Complex> riccati_hankel_pair(int l, Complex z);

/// Riccati-Bessel function z j_l(z) by downward (Miller) recurrence with
/// normalization; j is recessive upward.
Complex riccati_bessel(int l, Complex z);

/// Value and argument-derivative of z j_l(z).
std::pair<Complex, Complex> riccati_bessel_pair(int l, Complex z);

/// d/dz log(z j_l(z)) by backward ratio recursion; free of overflow even for
/// large imaginary argument, where the function values themselves overflow.
Complex riccati_bessel_log_derivative(int l, Complex z);

/// d/dx log(x h^(1)_l(x)) evaluated as a finite continued fraction of depth l.
/// Rational in x, so there is no overflow for small |x| or imaginary argument.
Complex hankel_log_derivative(int l, Complex x);

/// d^2/dx^2 log(x h^(1)_l(x)), from the log-derivative and the free equation.
Complex hankel_log_derivative2(int l, Complex x);

/// Diagonal of lim_{r->0} W(kr)^{-1} W(-kr): (-1)^l per channel.
RealVector small_r_ratio_limit(const ChannelBasis& basis);

/// Diagonal free outgoing-wave matrix W(kr) for a channel basis, with its
/// radial log-derivatives. Entries depend only on the channel's orbital l.
class FreeWaveMatrix {
 public:
  FreeWaveMatrix(ChannelBasis basis, Complex k)
      : basis_(std::move(basis)), k_(k) {}

  const ChannelBasis& basis() const { return basis_; }
  Complex k() const { return k_; }

  /// Diagonal entries x h^(1)_l(x) at x = k r.
  ComplexVector diagonal(double r) const;
  /// Diagonal of d/dr log W(kr).
  ComplexVector log_derivative_r(double r) const;
  /// Diagonal of d^2/dr^2 log W(kr).
  ComplexVector log_derivative2_r(double r) const;

 private:
  ChannelBasis basis_;
  Complex k_;
};

}  // namespace vps
