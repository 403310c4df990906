#pragma once

#include <vector>

#include "vps/channel_basis.hpp"
#include "vps/types.hpp"

namespace vps {

struct ScatteringDiagnostics {
  /// ||S^dagger S - 1||_2 of the reported S.
  double unitarity_residual = 0.0;
  /// Worst condition number among inverted matrices.
  double max_condition = 0.0;
  /// ||[S, P]||_2 for the Maxwell engine; zero elsewhere.
  double projector_commutator = 0.0;
  /// Change of S under a fitting-point move, when measured.
  double fitting_point_sensitivity = -1.0;
  long outgoing_steps = 0;
  long regular_steps = 0;
};

/// Eigen-decomposition with a stable ordering (ascending eigenphase).
struct ModeDecomposition {
  ComplexVector values;
  ComplexMatrix vectors;  // columns normalized
};

struct ScatteringResult {
  Complex k;
  ChannelBasis basis;
  ComplexMatrix S;
  /// Transverse-projected S in the per-(j, m) M/N column basis; empty for
  /// scalar and vector engines.
  ComplexMatrix S_projected;
  /// Eigenphases (1/2) arg(lambda). For the Maxwell engine these come from
  /// the projected S, otherwise from the full S.
  std::vector<double> eigenphases;
  ModeDecomposition modes;
  ScatteringDiagnostics diagnostics;
};

inline ComplexMatrix t_matrix(const ComplexMatrix& s) {
  return 0.5 * (s - ComplexMatrix::Identity(s.rows(), s.cols()));
}

/// Eigen-decomposition sorted by ascending eigenphase, columns normalized.
ModeDecomposition decompose_modes(const ComplexMatrix& s);

/// Reorder the columns of `current` to maximize eigenvector overlap with
/// `previous` (greedy assignment); used to follow modes along a k sweep.
/// Returns the smallest matched overlap.
double match_modes(const ModeDecomposition& previous, ModeDecomposition& current);

}  // namespace vps
