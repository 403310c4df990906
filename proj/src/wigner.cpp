#include "vps/wigner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace vps {

namespace {

// Factorials in extended precision. Supports angular momenta up to j = 40;
// the largest argument appearing in the 6j sum is then 4*40 + 1.
constexpr int kMaxFact = 200;

const long double* factorial_table() {
  static const auto table = [] {
    static std::array<long double, kMaxFact + 1> f;
    f[0] = 1.0L;
    for (int n = 1; n <= kMaxFact; ++n) f[n] = f[n - 1] * n;
    return f.data();
  }();
  return table;
}

long double fact(int n) { return factorial_table()[n]; }

bool triangle_ok(int a, int b, int c) {
  return std::abs(a - b) <= c && c <= a + b;
}

// Delta(abc) = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!
long double triangle_coeff(int a, int b, int c) {
  return fact(a + b - c) * fact(a - b + c) * fact(-a + b + c) /
         fact(a + b + c + 1);
}

void check_range(int j, const char* who) {
  if (j < 0) throw std::invalid_argument(std::string(who) + ": negative angular momentum");
  if (j > 40) throw std::invalid_argument(std::string(who) + ": angular momentum above supported range (40)");
}

}  // namespace

double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  check_range(j1, "wigner3j");
  check_range(j2, "wigner3j");
  check_range(j3, "wigner3j");

  if (m1 + m2 + m3 != 0) return 0.0;
  if (!triangle_ok(j1, j2, j3)) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;

  const int tmin = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int tmax = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  if (tmin > tmax) return 0.0;

  long double sum = 0.0L;
  long double sign = (tmin % 2 == 0) ? 1.0L : -1.0L;
  for (int t = tmin; t <= tmax; ++t) {
    const long double denom = fact(t) * fact(j1 + j2 - j3 - t) *
                              fact(j1 - m1 - t) * fact(j2 + m2 - t) *
                              fact(j3 - j2 + m1 + t) * fact(j3 - j1 - m2 + t);
    sum += sign / denom;
    sign = -sign;
  }

  const long double norm =
      triangle_coeff(j1, j2, j3) * fact(j1 + m1) * fact(j1 - m1) *
      fact(j2 + m2) * fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3);
  long double result = sum * std::sqrt(norm);
  if ((j1 - j2 - m3) % 2 != 0) result = -result;
  return static_cast<double>(result);
}

double wigner6j(int j1, int j2, int j3, int j4, int j5, int j6) {
  for (int j : {j1, j2, j3, j4, j5, j6}) check_range(j, "wigner6j");

  if (!triangle_ok(j1, j2, j3) || !triangle_ok(j1, j5, j6) ||
      !triangle_ok(j4, j2, j6) || !triangle_ok(j4, j5, j3))
    return 0.0;

  const int s123 = j1 + j2 + j3;
  const int s156 = j1 + j5 + j6;
  const int s426 = j4 + j2 + j6;
  const int s453 = j4 + j5 + j3;
  const int p1245 = j1 + j2 + j4 + j5;
  const int p2356 = j2 + j3 + j5 + j6;
  const int p3164 = j3 + j1 + j6 + j4;

  const int tmin = std::max({s123, s156, s426, s453});
  const int tmax = std::min({p1245, p2356, p3164});
  if (tmin > tmax) return 0.0;

  long double sum = 0.0L;
  long double sign = (tmin % 2 == 0) ? 1.0L : -1.0L;
  for (int t = tmin; t <= tmax; ++t) {
    const long double denom = fact(t - s123) * fact(t - s156) *
                              fact(t - s426) * fact(t - s453) *
                              fact(p1245 - t) * fact(p2356 - t) *
                              fact(p3164 - t);
    sum += sign * fact(t + 1) / denom;
    sign = -sign;
  }

  const long double norm = triangle_coeff(j1, j2, j3) *
                           triangle_coeff(j1, j5, j6) *
                           triangle_coeff(j4, j2, j6) *
                           triangle_coeff(j4, j5, j3);
  return static_cast<double>(sum * std::sqrt(norm));
}

double clebsch_gordan(int j1, int m1, int j2, int m2, int J, int M) {
  if (m1 + m2 != M) return 0.0;
  double w = wigner3j(j1, j2, J, m1, m2, -M);
  if (w == 0.0) return 0.0;
  double c = std::sqrt(2.0 * J + 1.0) * w;
  return ((j1 - j2 + M) % 2 != 0) ? -c : c;
}

}  // namespace vps
