#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vps/helmholtz_vpm.hpp"

namespace vps {

/// First-order differential block between channel bases: f -> A f' + (B/r) f.
struct FirstOrderBlock {
  RealMatrix A;
  RealMatrix B;
};

/// Generalized wave operator at one (k, r), reduced to
/// -d2 F'' + d1 F' + d0 F = 0 with D1 = d2^{-1} d1 and D0 = d2^{-1} d0.
struct OperatorTriple {
  ComplexMatrix d2, d1, d0;
  ComplexMatrix D1, D0;
  double condition_d2 = 0.0;
};

struct OperatorTripleDerivs {
  OperatorTriple triple;
  ComplexMatrix d2p, d1p;
  ComplexMatrix D1p;
};

/// Constant angular blocks and coupling tensors for the curl-curl plus
/// grad-div wave operator over a vector channel basis. The grad/div pathway
/// runs through an extended vector band (jmax + source_lmax) and an internal
/// scalar basis, so the double permittivity convolution is exact for sources
/// within the declared multipole truncation. Immutable; share across solves.
class MaxwellOperator {
 public:
  /// scalar_lmax < 0 selects the default jmax + source_lmax + 1; values below
  /// jmax + source_lmax are rejected.
  MaxwellOperator(const ChannelBasis& basis,
                  const std::vector<std::pair<int, int>>& source_pattern,
                  int scalar_lmax = -1);

  const ChannelBasis& basis() const { return basis_; }
  const ChannelBasis& extended_basis() const { return ext_; }
  const ChannelBasis& scalar_basis() const { return scalar_; }

  /// gradient (scalar -> extended vector), divergence (extended vector ->
  /// scalar), curl factor (extended vector -> extended vector; the physical
  /// curl is i times this block).
  const FirstOrderBlock& grad_block() const { return grad_; }
  const FirstOrderBlock& div_block() const { return div_; }
  const FirstOrderBlock& curl_block() const { return curl_; }

  /// Permittivity multiplication over the named bases.
  ComplexMatrix eps_mul(const MultipoleField& eps, double r,
                        int derivative_order = 0) const;
  ComplexMatrix eps_mul_scalar(const MultipoleField& eps, double r,
                               int derivative_order = 0) const;

  OperatorTriple assemble(const MultipoleField& eps, Complex k, double r,
                          double condition_limit = 1e12) const;
  /// condition_limit <= 0 skips the condition estimate (hot paths).
  OperatorTripleDerivs assemble_with_derivatives(
      const MultipoleField& eps, Complex k, double r,
      double condition_limit = 1e12) const;

  /// Coefficients only, no reductions; used by the integration right-hand
  /// sides, which perform a single solve against d2 per evaluation.
  struct Core {
    ComplexMatrix d2, d1, d0;
  };
  Core assemble_core(const MultipoleField& eps, Complex k, double r) const;

 private:
  ChannelBasis basis_, ext_, scalar_;
  FirstOrderBlock grad_, div_, curl_;
  // grad o div and curl o curl as second-order triples with constant
  // matrices weighted by (1, 1/r, 1/r^2).
  RealMatrix p2_, p1_, p0_;
  ComplexMatrix cc2_, cc1_, cc0_;  // declared-basis slices, signs included
  std::vector<int> ext_of_;        // declared channel -> extended index
  CouplingTensor eps_sq_;          // declared x declared
  CouplingTensor eps_scalar_;      // scalar x scalar
  // Precomputed moment-pair products Z_out[a] P_n Z_in[b] and single-moment
  // Z matrices, so each assembly is a scalar-weighted sum plus one LU.
  std::vector<std::pair<int, int>> pattern_;
  std::vector<ComplexMatrix> zsq_;
  std::vector<std::vector<ComplexMatrix>> pair2_, pair1_, pair0_;
};

SecondOrderRhs maxwell_outgoing_rhs(Complex k,
                                    std::shared_ptr<const MaxwellOperator> op,
                                    MultipoleField eps);
SecondOrderRhs maxwell_regular_rhs(Complex k,
                                   std::shared_ptr<const MaxwellOperator> op,
                                   MultipoleField eps);

/// Regular initial data (H, H') at r_small for the Maxwell regular factor.
/// When the permittivity at the origin differs from vacuum, the naive
/// (r 1, 1) data seeds fast-growing admixtures that swamp the Wronskian, so
/// the rows are built from the regular family of the frozen local medium
/// (transverse waves at sqrt(eps) k, longitudinal at k / sqrt(eps)), with the
/// +k and -k data exactly related by the parity matrix.
void maxwell_regular_initial_data(const MaxwellOperator& op,
                                  const MultipoleField& eps, Complex k,
                                  int sign, double r_small, ComplexMatrix& h0,
                                  ComplexMatrix& h0p);

/// Wronskian corrected by the first-derivative term: W~ = W - Phi^t D1 F,
/// in the same W-conjugated, overflow-safe form as the plain Wronskian.
ComplexMatrix modified_wronskian(const ComplexMatrix& h, const ComplexMatrix& hp,
                                 const ComplexMatrix& g, const ComplexMatrix& gp,
                                 const ComplexMatrix& d1_reduced, Complex k,
                                 double r, const ChannelBasis& basis);

/// Orthonormal columns spanning the asymptotic transverse (M, N) modes,
/// ordered per (j >= 1, m) as [M, N].
RealMatrix transverse_columns(const ChannelBasis& basis);

/// Orthogonal projector onto the transverse subspace: rank 2 per (j >= 1, m),
/// rank 0 for j = 0.
RealMatrix transverse_projector(const ChannelBasis& basis);

struct TransverseMode {
  int j;
  int m;
  char polarization;  // 'M' or 'N'
  std::string label() const;
};
std::vector<TransverseMode> transverse_mode_labels(const ChannelBasis& basis);

/// Electromagnetic S-matrix via the modified Wronskians at +-k. The result
/// carries the full-basis S, the transverse-projected block S_projected, and
/// the projector commutator diagnostic.
ScatteringResult maxwell_s_matrix(const MultipoleField& eps,
                                  const ChannelBasis& basis, Complex k,
                                  const SolveOptions& options = {});
ScatteringResult maxwell_s_matrix(const MultipoleField& eps,
                                  std::shared_ptr<const MaxwellOperator> op,
                                  Complex k, const SolveOptions& options = {});

struct WavefunctionReconstruction {
  std::vector<double> r;
  std::vector<ComplexMatrix> psi;
  double r0 = 0.0;
  /// Residual of the two-branch match at r0 after fixing the constant.
  double value_mismatch = 0.0;
  /// Relative derivative jump across r0.
  double derivative_mismatch = 0.0;
};

/// Normalized physical wavefunction from the outgoing solutions (r > r0) and
/// the regular solution (r < r0), joined at the fitting point.
WavefunctionReconstruction reconstruct_wavefunction(
    const MultipoleField& eps, const ChannelBasis& basis, Complex k,
    const std::vector<double>& r_grid, const SolveOptions& options = {});

}  // namespace vps
