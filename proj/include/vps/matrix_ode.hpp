#pragma once

#include <functional>
#include <vector>

#include "vps/types.hpp"

namespace vps {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Cap on |step| as a fraction of the integration range.
  double max_step_fraction = 1.0 / 50.0;
  long max_steps = 2000000;
};

enum class Direction { Outward, Inward };

struct OdeSample {
  double r;
  ComplexMatrix value;
  ComplexMatrix derivative;
};

/// Result of one matrix ODE integration: (M, M') at r_end plus optional
/// dense-output samples along the way. All accepted steps satisfied the
/// embedded error estimate; non-finite values abort with IntegrationError.
struct RadialMatrixSolution {
  Direction direction = Direction::Outward;
  double r_start = 0.0;
  double r_end = 0.0;
  ComplexMatrix value;
  ComplexMatrix derivative;
  std::vector<OdeSample> trace;
  long steps = 0;
  long rejected = 0;
  double min_step = 0.0;
};

/// Right-hand side of a second-order system: returns M'' given (r, M, M').
using SecondOrderRhs = std::function<ComplexMatrix(
    double, const ComplexMatrix&, const ComplexMatrix&)>;

/// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) for the first-order
/// system obtained by stacking (M, M'). Integrates from r_start to r_end in
/// either direction, landing on r_end exactly. sample_points (strictly
/// between the endpoints) are evaluated by cubic Hermite interpolation on
/// accepted steps and recorded in the trace.
RadialMatrixSolution integrate_second_order(
    const SecondOrderRhs& rhs, double r_start, const ComplexMatrix& m0,
    const ComplexMatrix& mp0, double r_end, const OdeOptions& options = {},
    std::vector<double> sample_points = {});

}  // namespace vps
