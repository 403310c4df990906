#include "vps/helmholtz_vpm.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/LU>

namespace vps {

namespace {

ComplexVector log_derivative_diag(const ChannelBasis& basis, Complex k, double r) {
  ComplexVector u(basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    u(i) = k * hankel_log_derivative(basis.orbital_l()[i], k * r);
  return u;
}

ComplexVector log_derivative2_diag(const ChannelBasis& basis, Complex k, double r) {
  ComplexVector u(basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    u(i) = k * k * hankel_log_derivative2(basis.orbital_l()[i], k * r);
  return u;
}

RealVector l_squared_diag(const ChannelBasis& basis) {
  RealVector lsq(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const double l = basis.orbital_l()[i];
    lsq(i) = l * (l + 1.0);
  }
  return lsq;
}

ComplexVector hankel_diag(const ChannelBasis& basis, Complex k, double r) {
  ComplexVector w(basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    w(i) = riccati_hankel(basis.orbital_l()[i], k * r);
  return w;
}

}  // namespace

Radii default_radii(Complex k, const MultipoleField& field,
                    const SolveOptions& options) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("default_radii: k must be nonzero");
  const double support = field.support_radius();
  const double kmag = std::abs(k);
  Radii r;
  r.r_small = options.r_small > 0.0 ? options.r_small
                                    : std::min(1.0 / kmag, support) / 1000.0;
  r.r0 = options.r0 > 0.0 ? options.r0 : 0.5 * support;
  r.r_big = options.r_big > 0.0
                ? options.r_big
                : std::max(1.1 * support + 0.2, 1.25 * r.r0);
  if (!(r.r_small < r.r0 && r.r0 < r.r_big))
    throw std::invalid_argument("default_radii: require r_small < r0 < r_big");
  return r;
}

ComplexMatrix moment_convolution(const CouplingTensor& tensor,
                                 const MultipoleField& field, double r,
                                 int derivative_order) {
  ComplexMatrix out =
      ComplexMatrix::Zero(tensor.rows().dim(), tensor.cols().dim());
  for (const auto& [index, z] : tensor.entries()) {
    const MomentValue mv = field.moment(index.first, index.second, r);
    const Complex f = derivative_order == 0   ? mv.f
                      : derivative_order == 1 ? mv.df
                                              : mv.d2f;
    if (f != Complex(0.0, 0.0)) out += f * z;
  }
  return out;
}

ComplexMatrix assemble_potential_matrix(const MultipoleField& field,
                                        const CouplingTensor& tensor, double r) {
  if (field.kind() != FieldKind::Potential)
    throw std::invalid_argument("assemble_potential_matrix: field is not a potential");
  if (!(tensor.rows() == tensor.cols()))
    throw std::invalid_argument("assemble_potential_matrix: tensor bases differ");
  return moment_convolution(tensor, field, r, 0);
}

SecondOrderRhs outgoing_rhs(Complex k, MatrixProvider potential,
                            const ChannelBasis& basis) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("outgoing_rhs: k must be nonzero");
  const RealVector lsq = l_squared_diag(basis);
  return [k, potential = std::move(potential), basis, lsq](
             double r, const ComplexMatrix& g,
             const ComplexMatrix& gp) -> ComplexMatrix {
    if (r <= 0.0) throw std::domain_error("outgoing_rhs: r must be positive");
    const ComplexVector u1 = log_derivative_diag(basis, k, r);
    ComplexMatrix rhs = -2.0 * (gp * u1.asDiagonal());
    rhs.noalias() += (lsq.asDiagonal() * g - g * lsq.asDiagonal()) / (r * r);
    rhs.noalias() += potential(r) * g;
    return rhs;
  };
}

SecondOrderRhs regular_rhs(Complex k, MatrixProvider potential,
                           const ChannelBasis& basis) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("regular_rhs: k must be nonzero");
  const RealVector lsq = l_squared_diag(basis);
  return [k, potential = std::move(potential), basis, lsq](
             double r, const ComplexMatrix& h,
             const ComplexMatrix& hp) -> ComplexMatrix {
    if (r <= 0.0) throw std::domain_error("regular_rhs: r must be positive");
    const ComplexVector u1 = log_derivative_diag(basis, k, r);
    const ComplexVector u2 = log_derivative2_diag(basis, k, r);
    ComplexMatrix rhs = 2.0 * (u2.asDiagonal() * h) + 2.0 * (u1.asDiagonal() * hp);
    rhs.noalias() -= (lsq.asDiagonal() * h - h * lsq.asDiagonal()) / (r * r);
    rhs.noalias() += h * potential(r);
    return rhs;
  };
}

void regular_initial_data(const ChannelBasis& basis, Complex q, double r_small,
                          ComplexMatrix& h0, ComplexMatrix& h0p) {
  const int n = basis.dim();
  h0 = ComplexMatrix::Zero(n, n);
  h0p = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int l = basis.orbital_l()[i];
    const auto [w, wd] = riccati_hankel_pair(l, q * r_small);
    const auto [jb, jbd] = riccati_bessel_pair(l, q * r_small);
    const Complex norm = iu * (2.0 * l + 1.0) / q;
    h0(i, i) = norm * w * jb;
    h0p(i, i) = norm * q * (wd * jb + w * jbd);
  }
}

ComplexMatrix wronskian(const ComplexMatrix& h, const ComplexMatrix& hp,
                        const ComplexMatrix& g, const ComplexMatrix& gp,
                        Complex k, double r, const ChannelBasis& basis) {
  const ComplexVector u1 = log_derivative_diag(basis, k, r);
  ComplexMatrix bracket = h * (g * u1.asDiagonal() + gp);
  bracket.noalias() -= (hp - u1.asDiagonal() * h) * g;
  const ComplexVector w = hankel_diag(basis, k, r);
  ComplexMatrix out(bracket.rows(), bracket.cols());
  for (Eigen::Index i = 0; i < bracket.rows(); ++i)
    for (Eigen::Index j = 0; j < bracket.cols(); ++j)
      out(i, j) = bracket(i, j) * w(j) / w(i);
  return out;
}

namespace {

struct SignedSolve {
  ComplexMatrix bracket;  // W-conjugation deferred
  long outgoing_steps = 0;
  long regular_steps = 0;
};

SignedSolve solve_one_sign(const MultipoleField& field,
                           const CouplingTensor& tensor, Complex q,
                           const Radii& radii, const SolveOptions& options) {
  const ChannelBasis& basis = tensor.rows();
  const int n = basis.dim();
  MatrixProvider potential = [&tensor, &field](double r) {
    return moment_convolution(tensor, field, r, 0);
  };

  OdeOptions ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;

  ComplexMatrix h0, h0p;
  regular_initial_data(basis, q, radii.r_small, h0, h0p);
  const auto hsol = integrate_second_order(regular_rhs(q, potential, basis),
                                           radii.r_small, h0, h0p, radii.r0, ode);

  const auto gsol = integrate_second_order(
      outgoing_rhs(q, potential, basis), radii.r_big,
      ComplexMatrix::Identity(n, n), ComplexMatrix::Zero(n, n), radii.r0, ode);

  const ComplexVector u1 = log_derivative_diag(basis, q, radii.r0);
  SignedSolve out;
  out.bracket = hsol.value * (gsol.value * u1.asDiagonal() + gsol.derivative);
  out.bracket.noalias() -=
      (hsol.derivative - u1.asDiagonal() * hsol.value) * gsol.value;
  out.outgoing_steps = gsol.steps;
  out.regular_steps = hsol.steps;
  return out;
}

ScatteringResult finish_scalar_result(const ChannelBasis& basis, Complex k,
                                      ComplexMatrix s, double max_condition,
                                      long g_steps, long h_steps) {
  ScatteringResult result;
  result.k = k;
  result.basis = basis;
  result.S = std::move(s);
  result.modes = decompose_modes(result.S);
  result.eigenphases.resize(result.modes.values.size());
  for (Eigen::Index i = 0; i < result.modes.values.size(); ++i)
    result.eigenphases[i] = 0.5 * std::arg(result.modes.values(i));
  const ComplexMatrix resid =
      result.S.adjoint() * result.S -
      ComplexMatrix::Identity(basis.dim(), basis.dim());
  result.diagnostics.unitarity_residual = spectral_norm(resid);
  result.diagnostics.max_condition = max_condition;
  result.diagnostics.outgoing_steps = g_steps;
  result.diagnostics.regular_steps = h_steps;
  return result;
}

}  // namespace

ScatteringResult s_matrix(const MultipoleField& field, const ChannelBasis& basis,
                          Complex k, const SolveOptions& options) {
  const CouplingTensor tensor =
      CouplingTensor::build(basis, basis, field.moment_indices());
  return s_matrix(field, tensor, k, options);
}

ScatteringResult s_matrix(const MultipoleField& field,
                          const CouplingTensor& tensor, Complex k,
                          const SolveOptions& options) {
  if (!(tensor.rows() == tensor.cols()))
    throw std::invalid_argument("s_matrix: tensor bases differ");
  const ChannelBasis& basis = tensor.rows();
  const Radii radii = default_radii(k, field, options);

  const SignedSolve plus = solve_one_sign(field, tensor, k, radii, options);
  const SignedSolve minus = solve_one_sign(field, tensor, -k, radii, options);

  const RealVector parity = small_r_ratio_limit(basis);
  const ComplexVector wplus = hankel_diag(basis, k, radii.r0);
  const ComplexVector wminus = hankel_diag(basis, -k, radii.r0);

  // S = W_+^{-1} B_+^{-1} D B_- W_- M with D = W_+ M W_-^{-1}; only W ratios
  // appear, which stay bounded at the fitting point.
  ComplexVector d(basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    d(i) = wplus(i) * parity(i) / wminus(i);

  Eigen::PartialPivLU<ComplexMatrix> lu(plus.bracket);
  const double rcond = lu.rcond();
  const double cond = (rcond > 0.0) ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond < options.condition_limit))
    throw SingularFitError("s_matrix: ill-conditioned Wronskian; move r0");

  ComplexMatrix core = lu.solve(d.asDiagonal() * minus.bracket);
  ComplexMatrix s(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    for (int j = 0; j < basis.dim(); ++j)
      s(i, j) = core(i, j) * wminus(j) * parity(j) / wplus(i);
  if (!s.allFinite()) throw SingularFitError("s_matrix: non-finite S");

  return finish_scalar_result(basis, k, std::move(s), cond,
                              plus.outgoing_steps + minus.outgoing_steps,
                              plus.regular_steps + minus.regular_steps);
}

ScatteringResult s_matrix_direct(const MultipoleField& field,
                                 const ChannelBasis& basis, Complex k,
                                 const SolveOptions& options) {
  const CouplingTensor tensor =
      CouplingTensor::build(basis, basis, field.moment_indices());
  const Radii radii = default_radii(k, field, options);
  const int n = basis.dim();
  MatrixProvider potential = [&tensor, &field](double r) {
    return moment_convolution(tensor, field, r, 0);
  };

  OdeOptions ode;
  ode.rtol = std::min(options.rtol, 1e-11);
  ode.atol = std::min(options.atol, 1e-14);

  // Ladder of evaluation radii for the small-r limit; the deviation is a
  // power series starting at r, so a four-node Lagrange extrapolation to
  // r = 0 removes the r..r^3 terms.
  const double d1 = std::min(1.0 / std::abs(k), field.support_radius()) / 200.0;
  const std::vector<double> ladder = {4.0 * d1, 3.0 * d1, 2.0 * d1};

  auto solve = [&](Complex q) {
    return integrate_second_order(outgoing_rhs(q, potential, basis),
                                  radii.r_big, ComplexMatrix::Identity(n, n),
                                  ComplexMatrix::Zero(n, n), d1, ode, ladder);
  };
  const auto gp = solve(k);
  const auto gm = solve(-k);

  const RealVector parity = small_r_ratio_limit(basis);
  double max_cond = 0.0;
  auto x_at = [&](const ComplexMatrix& gplus, const ComplexMatrix& gminus,
                  double r) -> ComplexMatrix {
    Eigen::PartialPivLU<ComplexMatrix> lu(gplus);
    const double rcond = lu.rcond();
    max_cond = std::max(max_cond,
                        rcond > 0.0 ? 1.0 / rcond
                                    : std::numeric_limits<double>::infinity());
    ComplexMatrix ratio = lu.solve(gminus);
    const ComplexVector wp = hankel_diag(basis, k, r);
    const ComplexVector wm = hankel_diag(basis, -k, r);
    ComplexMatrix x(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        x(i, j) = ratio(i, j) * wm(j) * parity(j) / wp(i);
    return x;
  };

  const ComplexMatrix x1 = x_at(gp.value, gm.value, d1);
  const ComplexMatrix x2 = x_at(gp.trace[2].value, gm.trace[2].value, 2.0 * d1);
  const ComplexMatrix x3 = x_at(gp.trace[1].value, gm.trace[1].value, 3.0 * d1);
  const ComplexMatrix x4 = x_at(gp.trace[0].value, gm.trace[0].value, 4.0 * d1);
  ComplexMatrix s = 4.0 * x1 - 6.0 * x2 + 4.0 * x3 - x4;
  if (!s.allFinite())
    throw SingularFitError("s_matrix_direct: non-finite S (method is unstable off the real axis)");

  return finish_scalar_result(basis, k, std::move(s), max_cond,
                              gp.steps + gm.steps, 0);
}

DensityOfStates density_of_states_delta(
    const std::function<MultipoleField(Complex)>& field_for_k,
    const ChannelBasis& basis, const std::vector<double>& k_grid,
    const SolveOptions& options) {
  if (k_grid.size() < 3)
    throw std::invalid_argument("density_of_states_delta: need at least 3 grid points");
  const double dk = k_grid[1] - k_grid[0];
  for (size_t i = 1; i < k_grid.size(); ++i)
    if (std::abs((k_grid[i] - k_grid[i - 1]) - dk) > 1e-9 * std::abs(dk))
      throw std::invalid_argument("density_of_states_delta: grid must be uniform");

  DensityOfStates out;
  out.k = k_grid;

  ModeDecomposition prev;
  std::vector<double> prev_phases;
  for (size_t ik = 0; ik < k_grid.size(); ++ik) {
    const MultipoleField field = field_for_k(Complex(k_grid[ik], 0.0));
    ScatteringResult res = s_matrix(field, basis, Complex(k_grid[ik], 0.0), options);
    ModeDecomposition modes = res.modes;
    if (ik > 0) {
      const double overlap = match_modes(prev, modes);
      out.min_overlap = std::min(out.min_overlap, overlap);
      if (overlap < 0.7) out.tracking_ambiguous = true;
    }
    std::vector<double> phases(modes.values.size());
    for (Eigen::Index i = 0; i < modes.values.size(); ++i) {
      double p = 0.5 * std::arg(modes.values(i));
      if (ik > 0) p += pi * std::round((prev_phases[i] - p) / pi);
      phases[i] = p;
    }
    out.total_phase.push_back(
        std::accumulate(phases.begin(), phases.end(), 0.0));
    prev = std::move(modes);
    prev_phases = std::move(phases);
  }

  const size_t npts = k_grid.size();
  out.delta_rho.resize(npts);
  for (size_t i = 0; i < npts; ++i) {
    double deriv;
    if (i == 0) {
      deriv = (out.total_phase[1] - out.total_phase[0]) / dk;
    } else if (i + 1 == npts) {
      deriv = (out.total_phase[npts - 1] - out.total_phase[npts - 2]) / dk;
    } else {
      deriv = (out.total_phase[i + 1] - out.total_phase[i - 1]) / (2.0 * dk);
    }
    out.delta_rho[i] = deriv / pi;
  }
  return out;
}

}  // namespace vps
