#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vps {

using Real = double;
using Complex = std::complex<double>;

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector3c = Eigen::Vector3cd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr Complex iu{0.0, 1.0};

/// Largest singular value (matrix 2-norm).
inline double spectral_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

/// 2-norm condition number; infinity when numerically singular.
inline double condition_number(const ComplexMatrix& m) {
  auto sv = m.jacobiSvd().singularValues();
  double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_r)
      : std::runtime_error(what), last_r_(last_r) {}
  double last_r() const { return last_r_; }

 private:
  double last_r_;
};

class SingularFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vps
