#pragma once

#include "vps/types.hpp"

namespace vps {

/// Scalar spherical harmonic Y_l^m(theta, phi), Condon-Shortley phase.
Complex spherical_harmonic(int l, int m, double theta, double phi);

/// Vector spherical harmonic Y^l_{jm}(theta, phi) as a Cartesian 3-vector,
/// built by coupling Y_l with the spin-1 spherical basis vectors.
/// Valid triples satisfy the (l, 1, j) triangle rule and |m| <= j.
Vector3c vector_spherical_harmonic(int j, int l, int m, double theta, double phi);

enum class TransverseKind { M, N, L };

/// Angular M/N/L combinations of Y^{l=j-1,j,j+1}_{jm}. M and N require j >= 1;
/// L is defined for all j >= 0 (the l = j-1 piece carries zero weight at j = 0).
Vector3c transverse_combination(TransverseKind kind, int j, int m, double theta,
                                double phi);

}  // namespace vps
