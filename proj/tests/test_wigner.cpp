#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vps/wigner.hpp"

using namespace vps;

TEST_CASE("wigner3j reference values") {
  CHECK(wigner3j(0, 0, 0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wigner3j(1, 1, 0, 1, -1, 0) ==
        doctest::Approx(0.5773502691896258).epsilon(1e-13));
  CHECK(wigner3j(1, 1, 2, 0, 0, 0) ==
        doctest::Approx(0.3651483716701107).epsilon(1e-13));
  // (j j 0; m -m 0) = (-1)^(j-m)/sqrt(2j+1)
  CHECK(wigner3j(2, 2, 0, 1, -1, 0) ==
        doctest::Approx(-1.0 / std::sqrt(5.0)).epsilon(1e-13));
}

TEST_CASE("wigner3j selection rules") {
  CHECK(wigner3j(1, 1, 1, 1, 1, -2) == 0.0);  // |m3| > j3 is fine, just zero
  CHECK(wigner3j(1, 1, 0, 1, 0, -1) == 0.0);  // m-sum ok but |m3|>j3
  CHECK(wigner3j(1, 1, 0, 1, -1, 1) == 0.0);  // m-sum violated
  CHECK(wigner3j(1, 1, 3, 0, 0, 0) == 0.0);   // triangle violated
  CHECK(wigner3j(1, 1, 1, 0, 0, 0) == 0.0);   // odd parity at m = 0
  CHECK_THROWS_AS(wigner3j(-1, 1, 1, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("wigner3j orthogonality sums up to j = 4") {
  for (int j1 = 0; j1 <= 4; ++j1)
    for (int j2 = 0; j2 <= 4; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(j1 + j2, 4); ++j3)
        for (int j3p = std::abs(j1 - j2); j3p <= std::min(j1 + j2, 4); ++j3p)
          for (int m3 = -j3; m3 <= j3; ++m3) {
            if (std::abs(m3) > j3p) continue;
            double sum = 0.0;
            for (int m1 = -j1; m1 <= j1; ++m1) {
              const int m2 = -m3 - m1;
              if (std::abs(m2) > j2) continue;
              sum += (2.0 * j3 + 1.0) * wigner3j(j1, j2, j3, m1, m2, m3) *
                     wigner3j(j1, j2, j3p, m1, m2, m3);
            }
            const double expected = (j3 == j3p) ? 1.0 : 0.0;
            CHECK(sum == doctest::Approx(expected).epsilon(1e-12));
          }
}

TEST_CASE("wigner6j reference values") {
  CHECK(wigner6j(0, 0, 0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wigner6j(1, 1, 1, 1, 1, 1) ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-13));
  // {j1 j2 0; j4 j5 j6} = delta delta (-1)^(j1+j4+j6)/sqrt((2j1+1)(2j4+1))
  CHECK(wigner6j(1, 1, 0, 1, 1, 1) ==
        doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
  CHECK(wigner6j(2, 2, 0, 3, 3, 2) ==
        doctest::Approx(std::pow(-1.0, 2 + 3 + 2) / std::sqrt(5.0 * 7.0))
            .epsilon(1e-13));
  CHECK(wigner6j(1, 2, 3, 0, 3, 2) ==
        doctest::Approx(1.0 / std::sqrt(5.0 * 7.0)).epsilon(1e-13));
}

TEST_CASE("wigner6j triangle rules") {
  CHECK(wigner6j(1, 1, 3, 1, 1, 1) == 0.0);
  CHECK(wigner6j(1, 1, 1, 1, 1, 3) == 0.0);
  CHECK_THROWS_AS(wigner6j(1, 1, 1, 1, 1, -1), std::invalid_argument);
}

TEST_CASE("clebsch_gordan reference values") {
  CHECK(clebsch_gordan(0, 0, 0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(clebsch_gordan(1, 0, 1, 0, 2, 0) ==
        doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-13));
  CHECK(clebsch_gordan(1, 1, 1, -1, 0, 0) ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
  CHECK(clebsch_gordan(1, 1, 1, 0, 2, 1) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
  CHECK(clebsch_gordan(1, 1, 1, 0, 1, 1) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
  CHECK(clebsch_gordan(1, 1, 1, -1, 1, 0) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
  CHECK(clebsch_gordan(1, 0, 1, 0, 1, 0) == doctest::Approx(0.0));
  CHECK(clebsch_gordan(1, 1, 2, -1, 3, 1) == doctest::Approx(0.0));
}

TEST_CASE("clebsch_gordan unitarity row sums") {
  // sum_{j,m} C(j1 m1 j2 m2 | j m)^2 = 1
  for (int m1 = -2; m1 <= 2; ++m1)
    for (int m2 = -1; m2 <= 1; ++m2) {
      double sum = 0.0;
      for (int j = 1; j <= 3; ++j) {
        const double c = clebsch_gordan(2, m1, 1, m2, j, m1 + m2);
        sum += c * c;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    }
}
