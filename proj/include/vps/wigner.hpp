#pragma once

namespace vps {

/// Wigner 3j symbol for integer angular momenta (Condon-Shortley phases).
/// Zero whenever m1+m2+m3 != 0 or a triangle rule fails.
double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3);

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6} for integer arguments.
double wigner6j(int j1, int j2, int j3, int j4, int j5, int j6);

/// Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M>.
double clebsch_gordan(int j1, int m1, int j2, int m2, int J, int M);

}  // namespace vps
