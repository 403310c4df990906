#pragma once

#include "vps/types.hpp"

namespace vps {

using Vector3d = Eigen::Vector3d;
using Matrix3c = Eigen::Matrix3cd;

/// Closed-form S for the spherical step potential (height v0 inside r < a):
/// interior wave number q = sqrt(k^2 - v0), principal branch.
Complex s_exact_square_well(int l, Complex k, double v0, double a);

/// Closed-form S for the dielectric sphere (index n inside r < a), channel j
/// and polarization delta = +1 (M) or -1 (N).
Complex s_exact_dielectric_sphere(int j, int delta, Complex k, double n, double a);

/// Coefficient 4 pi i^l Y_l^m(theta_k, phi_k)^* of the plane-wave expansion.
Complex scalar_plane_wave_coeff(int l, int m, double theta_k, double phi_k);

/// Truncated partial-wave sum for the scalar free Green's function.
/// Radii must differ (strict ordering r_< < r_>).
Complex scalar_greens_function(const Vector3d& r1, const Vector3d& r2, double k,
                               int lmax);

/// Free dyadic Green's function, (l, j, m) spherical-wave form. Requires
/// |r1| < |r2| so the regular/outgoing assignment is unambiguous.
Matrix3c dyadic_greens_function_ljm(const Vector3d& r1, const Vector3d& r2,
                                    double k, int jmax);

/// Free dyadic Green's function assembled from the M/N/L solutions; same
/// ordering requirement and truncation convention as the (l, j, m) form.
Matrix3c dyadic_greens_function_mnl(const Vector3d& r1, const Vector3d& r2,
                                    double k, int jmax);

/// Radial M/N/L free solutions (regular: spherical Bessel, outgoing: Hankel).
enum class RadialKind { Regular, Outgoing };
Vector3c transverse_solution_m(int j, int m, double k, const Vector3d& r,
                               RadialKind kind);
Vector3c transverse_solution_n(int j, int m, double k, const Vector3d& r,
                               RadialKind kind);
Vector3c longitudinal_solution(int j, int m, double k, const Vector3d& r,
                               RadialKind kind);

}  // namespace vps
