#pragma once

#include <functional>

#include "vps/channel_basis.hpp"
#include "vps/matrix_ode.hpp"
#include "vps/radial_waves.hpp"
#include "vps/scattering_result.hpp"
#include "vps/source_models.hpp"

namespace vps {

struct SolveOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Integration radii; nonpositive values are filled in from k and the
  /// source support (see default_radii).
  double r_small = 0.0;
  double r0 = 0.0;
  double r_big = 0.0;
  double condition_limit = 1e12;
};

struct Radii {
  double r_small;
  double r0;
  double r_big;
};

/// Radii policy: r_small = min(1/|k|, R)/1000 (regular data is seeded with
/// free solutions there), r0 = R/2, and r_big just beyond the source support
/// R. Keeping r_big - r0 modest bounds error amplification of the inward
/// solve on the imaginary k axis.
Radii default_radii(Complex k, const MultipoleField& field,
                    const SolveOptions& options);

/// Channel-coupling convolution sum_{l'm'} f^(d)_{l'm'}(r) Z_{l'm'}.
ComplexMatrix moment_convolution(const CouplingTensor& tensor,
                                 const MultipoleField& field, double r,
                                 int derivative_order = 0);

/// Matrix potential V(r) over the tensor's bases (potential fields only).
ComplexMatrix assemble_potential_matrix(const MultipoleField& field,
                                        const CouplingTensor& tensor, double r);

using MatrixProvider = std::function<ComplexMatrix(double)>;

/// Right-hand side for the outgoing-wave factor G: inward integration with
/// G(r_big) = 1, G'(r_big) = 0.
SecondOrderRhs outgoing_rhs(Complex k, MatrixProvider potential,
                            const ChannelBasis& basis);

/// Right-hand side for the regular-wave factor H: outward integration with
/// H(0) = 0, H'(0) = 1.
SecondOrderRhs regular_rhs(Complex k, MatrixProvider potential,
                           const ChannelBasis& basis);

/// Free-wave regular initial data at r_small. Tends to (r 1, 1) as
/// r_small -> 0 and keeps the +k and -k regular solutions exactly related by
/// the parity matrix diag((-1)^l).
void regular_initial_data(const ChannelBasis& basis, Complex q, double r_small,
                          ComplexMatrix& h0, ComplexMatrix& h0p);

/// Wronskian of the regular state (H, H') against the outgoing state (G, G')
/// at radius r, conjugated by W(kr). Only log-derivatives and entrywise
/// W ratios enter, so the evaluation stays bounded for imaginary k.
/// Independent of r along exact solutions.
ComplexMatrix wronskian(const ComplexMatrix& h, const ComplexMatrix& hp,
                        const ComplexMatrix& g, const ComplexMatrix& gp,
                        Complex k, double r, const ChannelBasis& basis);

/// Fitted S-matrix: H integrated out to r0, G integrated in to r0, for both
/// +k and -k, combined through the Wronskians and the small-r ratio limit.
/// Stable for real and imaginary wave number.
ScatteringResult s_matrix(const MultipoleField& field, const ChannelBasis& basis,
                          Complex k, const SolveOptions& options = {});
ScatteringResult s_matrix(const MultipoleField& field, const CouplingTensor& tensor,
                          Complex k, const SolveOptions& options = {});

/// Direct S-matrix by deep inward integration and a Richardson-extrapolated
/// small-r limit. Retained as a cross-check; reliable for real k only.
ScatteringResult s_matrix_direct(const MultipoleField& field,
                                 const ChannelBasis& basis, Complex k,
                                 const SolveOptions& options = {});

struct DensityOfStates {
  std::vector<double> k;
  /// Sum of unwrapped eigenphases at each k.
  std::vector<double> total_phase;
  /// (1/pi) d/dk of the total phase, central differences (one-sided ends).
  std::vector<double> delta_rho;
  /// True when eigenvector matching became ambiguous at some grid point.
  bool tracking_ambiguous = false;
  double min_overlap = 1.0;
};

/// Change in the continuum density of states over a uniform real k grid.
DensityOfStates density_of_states_delta(
    const std::function<MultipoleField(Complex)>& field_for_k,
    const ChannelBasis& basis, const std::vector<double>& k_grid,
    const SolveOptions& options = {});

}  // namespace vps
