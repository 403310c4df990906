#include "vps/maxwell_vpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
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

int validated_scalar_lmax(const ChannelBasis& basis, int scalar_lmax) {
  const int needed = basis.truncation() + basis.source_lmax();
  if (scalar_lmax < 0) return needed + 1;
  if (scalar_lmax < needed)
    throw std::invalid_argument(
        "MaxwellOperator: internal scalar truncation below jmax + source_lmax");
  return scalar_lmax;
}

}  // namespace

MaxwellOperator::MaxwellOperator(
    const ChannelBasis& basis,
    const std::vector<std::pair<int, int>>& source_pattern, int scalar_lmax)
    : basis_(basis),
      ext_(ChannelBasis::make_vector(basis.truncation() + basis.source_lmax(),
                                     basis.source_lmax())),
      scalar_(ChannelBasis::make_scalar(validated_scalar_lmax(basis, scalar_lmax),
                                        basis.source_lmax())),
      eps_sq_(CouplingTensor::build(basis_, basis_, source_pattern)),
      eps_scalar_(CouplingTensor::build(scalar_, scalar_, source_pattern)),
      pattern_(source_pattern) {
  if (basis.kind() != BasisKind::Vector)
    throw std::invalid_argument("MaxwellOperator: vector basis required");
  for (const auto& [lp, mp] : source_pattern)
    if (lp > basis.source_lmax())
      throw std::invalid_argument("MaxwellOperator: source pattern exceeds source_lmax");

  const int ne = ext_.dim();
  const int ns = scalar_.dim();
  grad_.A = RealMatrix::Zero(ne, ns);
  grad_.B = RealMatrix::Zero(ne, ns);
  div_.A = RealMatrix::Zero(ns, ne);
  div_.B = RealMatrix::Zero(ns, ne);
  curl_.A = RealMatrix::Zero(ne, ne);
  curl_.B = RealMatrix::Zero(ne, ne);

  auto aminus = [](int j) { return std::sqrt(j / (2.0 * j + 1.0)); };
  auto aplus = [](int j) { return std::sqrt((j + 1.0) / (2.0 * j + 1.0)); };

  // Divergence and curl column by column over the extended vector channels.
  for (int c = 0; c < ne; ++c) {
    const Channel ch = ext_.channel(c);
    const int j = ch.j;
    const double am = aminus(j), ap = aplus(j);
    const int s = scalar_.index(j, j, ch.m);
    if (ch.l == j - 1) {
      if (s >= 0) {
        div_.A(s, c) = am;
        div_.B(s, c) = -am * (j - 1);
      }
      const int rj = ext_.index(j, j, ch.m);
      if (rj >= 0) {
        curl_.A(rj, c) = ap;
        curl_.B(rj, c) = -ap * (j - 1);
      }
    } else if (ch.l == j) {
      const int rm = ext_.index(j, j - 1, ch.m);
      if (rm >= 0) {
        curl_.A(rm, c) = ap;
        curl_.B(rm, c) = ap * (j + 1);
      }
      const int rp = ext_.index(j, j + 1, ch.m);
      if (rp >= 0) {
        curl_.A(rp, c) = am;
        curl_.B(rp, c) = -am * j;
      }
    } else {  // l == j + 1
      if (s >= 0) {
        div_.A(s, c) = -ap;
        div_.B(s, c) = -ap * (j + 2);
      }
      const int rj = ext_.index(j, j, ch.m);
      if (rj >= 0) {
        curl_.A(rj, c) = am;
        curl_.B(rj, c) = am * (j + 2);
      }
    }
  }

  // Gradient column by column over the internal scalar channels.
  for (int s = 0; s < ns; ++s) {
    const Channel ch = scalar_.channel(s);
    const int j = ch.l;
    const double am = aminus(j), ap = aplus(j);
    const int rm = ext_.index(j, j - 1, ch.m);
    if (rm >= 0) {
      grad_.A(rm, s) = am;
      grad_.B(rm, s) = am * (j + 1);
    }
    const int rp = ext_.index(j, j + 1, ch.m);
    if (rp >= 0) {
      grad_.A(rp, s) = -ap;
      grad_.B(rp, s) = ap * j;
    }
  }

  p2_ = grad_.A * div_.A;
  p1_ = grad_.A * div_.B + grad_.B * div_.A;
  p0_ = grad_.B * div_.B - grad_.A * div_.B;

  // curl = i (A d/dr + B / r); curl o curl therefore carries a minus sign.
  const RealMatrix cc2e = -(curl_.A * curl_.A);
  const RealMatrix cc1e = -(curl_.A * curl_.B + curl_.B * curl_.A);
  const RealMatrix cc0e = -(curl_.B * curl_.B - curl_.A * curl_.B);

  const int nd = basis_.dim();
  ext_of_.resize(nd);
  for (int i = 0; i < nd; ++i) {
    const Channel ch = basis_.channel(i);
    ext_of_[i] = ext_.index(ch.j, ch.l, ch.m);
  }
  cc2_ = ComplexMatrix::Zero(nd, nd);
  cc1_ = ComplexMatrix::Zero(nd, nd);
  cc0_ = ComplexMatrix::Zero(nd, nd);
  for (int i = 0; i < nd; ++i)
    for (int j2 = 0; j2 < nd; ++j2) {
      cc2_(i, j2) = cc2e(ext_of_[i], ext_of_[j2]);
      cc1_(i, j2) = cc1e(ext_of_[i], ext_of_[j2]);
      cc0_(i, j2) = cc0e(ext_of_[i], ext_of_[j2]);
    }

  // Precompute the r-independent pieces of the double convolution: for each
  // moment pair (a, b), Z_out[a] (P_n Z_in[b]) over the declared basis.
  const CouplingTensor eps_in = CouplingTensor::build(ext_, basis_, pattern_);
  const CouplingTensor eps_out = CouplingTensor::build(basis_, ext_, pattern_);
  const size_t nm = pattern_.size();
  zsq_.resize(nm);
  pair2_.assign(nm, std::vector<ComplexMatrix>(nm));
  pair1_.assign(nm, std::vector<ComplexMatrix>(nm));
  pair0_.assign(nm, std::vector<ComplexMatrix>(nm));
  for (size_t a = 0; a < nm; ++a) {
    const RealMatrix& zout = *eps_out.entry(pattern_[a].first, pattern_[a].second);
    zsq_[a] = eps_sq_.entry(pattern_[a].first, pattern_[a].second)
                  ->cast<Complex>();
    for (size_t b = 0; b < nm; ++b) {
      const RealMatrix& zin = *eps_in.entry(pattern_[b].first, pattern_[b].second);
      pair2_[a][b] = (zout * (p2_ * zin)).cast<Complex>();
      pair1_[a][b] = (zout * (p1_ * zin)).cast<Complex>();
      pair0_[a][b] = (zout * (p0_ * zin)).cast<Complex>();
    }
  }
}

ComplexMatrix MaxwellOperator::eps_mul(const MultipoleField& eps, double r,
                                       int derivative_order) const {
  return moment_convolution(eps_sq_, eps, r, derivative_order);
}

ComplexMatrix MaxwellOperator::eps_mul_scalar(const MultipoleField& eps, double r,
                                              int derivative_order) const {
  return moment_convolution(eps_scalar_, eps, r, derivative_order);
}

OperatorTriple MaxwellOperator::assemble(const MultipoleField& eps, Complex k,
                                         double r, double condition_limit) const {
  return assemble_with_derivatives(eps, k, r, condition_limit).triple;
}

MaxwellOperator::Core MaxwellOperator::assemble_core(const MultipoleField& eps,
                                                     Complex k, double r) const {
  const double inv_r = 1.0 / r;
  const double inv_r2 = inv_r * inv_r;
  const int nd = basis_.dim();
  const size_t nm = pattern_.size();

  std::vector<MomentValue> f(nm);
  for (size_t a = 0; a < nm; ++a)
    f[a] = eps.moment(pattern_[a].first, pattern_[a].second, r);

  ComplexMatrix gd2 = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix gd1 = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix gd0 = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix vk = ComplexMatrix::Zero(nd, nd);
  for (size_t a = 0; a < nm; ++a) {
    const Complex fa = f[a].f;
    if (fa != Complex(0.0, 0.0)) vk.noalias() += fa * zsq_[a];
    if (fa == Complex(0.0, 0.0)) continue;
    for (size_t b = 0; b < nm; ++b) {
      const Complex fb = f[b].f, fbp = f[b].df, fbpp = f[b].d2f;
      const ComplexMatrix& m2 = pair2_[a][b];
      const ComplexMatrix& m1 = pair1_[a][b];
      gd2.noalias() += (fa * fb) * m2;
      gd1.noalias() += (2.0 * fa * fbp) * m2 + (fa * fb * inv_r) * m1;
      gd0.noalias() += (fa * fbpp) * m2 + (fa * fbp * inv_r) * m1 +
                       (fa * fb * inv_r2) * pair0_[a][b];
    }
  }

  Core core;
  const ComplexMatrix c2 = cc2_ - gd2;
  const ComplexMatrix c1 = inv_r * cc1_ - gd1;
  core.d2 = -c2;
  core.d1 = c1 - 2.0 * inv_r * c2;
  core.d0 = inv_r2 * cc0_ - gd0 - (k * k) * vk - inv_r * c1 + 2.0 * inv_r2 * c2;
  return core;
}

OperatorTripleDerivs MaxwellOperator::assemble_with_derivatives(
    const MultipoleField& eps, Complex k, double r,
    double condition_limit) const {
  if (eps.kind() != FieldKind::Permittivity)
    throw std::invalid_argument("MaxwellOperator: permittivity field required");

  const double inv_r = 1.0 / r;
  const double inv_r2 = inv_r * inv_r;
  const int nd = basis_.dim();
  const size_t nm = pattern_.size();

  std::vector<MomentValue> f(nm);
  for (size_t a = 0; a < nm; ++a)
    f[a] = eps.moment(pattern_[a].first, pattern_[a].second, r);

  // eps grad(div(eps .)) as scalar-weighted sums of the precomputed pair
  // products; the weights carry all r- and derivative-dependence.
  ComplexMatrix gd2 = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix gd1 = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix gd0 = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix gd2p = ComplexMatrix::Zero(nd, nd);
  ComplexMatrix gd1p = ComplexMatrix::Zero(nd, nd);
  for (size_t a = 0; a < nm; ++a) {
    const Complex fa = f[a].f, fap = f[a].df;
    if (fa == Complex(0.0, 0.0) && fap == Complex(0.0, 0.0)) continue;
    for (size_t b = 0; b < nm; ++b) {
      const Complex fb = f[b].f, fbp = f[b].df, fbpp = f[b].d2f;
      const ComplexMatrix& m2 = pair2_[a][b];
      const ComplexMatrix& m1 = pair1_[a][b];
      const ComplexMatrix& m0 = pair0_[a][b];
      gd2.noalias() += (fa * fb) * m2;
      gd1.noalias() += (2.0 * fa * fbp) * m2 + (fa * fb * inv_r) * m1;
      gd0.noalias() += (fa * fbpp) * m2 + (fa * fbp * inv_r) * m1 +
                       (fa * fb * inv_r2) * m0;
      gd2p.noalias() += (fap * fb + fa * fbp) * m2;
      gd1p.noalias() += (2.0 * (fap * fbp + fa * fbpp)) * m2 +
                        ((fap * fb + fa * fbp) * inv_r) * m1 -
                        (fa * fb * inv_r2) * m1;
    }
  }
  ComplexMatrix vk = ComplexMatrix::Zero(nd, nd);
  for (size_t a = 0; a < nm; ++a)
    if (f[a].f != Complex(0.0, 0.0)) vk.noalias() += f[a].f * zsq_[a];

  const ComplexMatrix c2 = cc2_ - gd2;
  const ComplexMatrix c1 = inv_r * cc1_ - gd1;
  const ComplexMatrix c0 = inv_r2 * cc0_ - gd0 - (k * k) * vk;

  OperatorTripleDerivs out;
  OperatorTriple& t = out.triple;
  // Substitute the 1/r field ansatz: coefficients for the reduced radial
  // functions psi = r f.
  t.d2 = -c2;
  t.d1 = c1 - 2.0 * inv_r * c2;
  t.d0 = c0 - inv_r * c1 + 2.0 * inv_r2 * c2;

  const ComplexMatrix c2p = -gd2p;
  const ComplexMatrix c1p = -inv_r2 * cc1_ - gd1p;
  out.d2p = -c2p;
  out.d1p = c1p - 2.0 * inv_r * c2p + 2.0 * inv_r2 * c2;

  Eigen::PartialPivLU<ComplexMatrix> lu(t.d2);
  if (condition_limit > 0.0) {
    const double rcond = lu.rcond();
    t.condition_d2 =
        rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(t.condition_d2 < condition_limit))
      throw SingularFitError("MaxwellOperator: singular d2 (truncation inconsistency)");
  }
  t.D1 = lu.solve(t.d1);
  t.D0 = lu.solve(t.d0);
  out.D1p = lu.solve(out.d1p - out.d2p * t.D1);
  return out;
}

SecondOrderRhs maxwell_outgoing_rhs(Complex k,
                                    std::shared_ptr<const MaxwellOperator> op,
                                    MultipoleField eps) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("maxwell_outgoing_rhs: k must be nonzero");
  const ChannelBasis& basis = op->basis();
  const RealVector lsq = l_squared_diag(basis);
  return [k, op = std::move(op), eps = std::move(eps), lsq](
             double r, const ComplexMatrix& g,
             const ComplexMatrix& gp) -> ComplexMatrix {
    if (r <= 0.0) throw std::domain_error("maxwell_outgoing_rhs: r must be positive");
    const MaxwellOperator::Core core = op->assemble_core(eps, k, r);
    const ComplexVector u1 = log_derivative_diag(op->basis(), k, r);
    // D1 (G u' + G') + D0 G in a single solve against d2.
    const ComplexMatrix y = g * u1.asDiagonal() + gp;
    ComplexMatrix rhs =
        Eigen::PartialPivLU<ComplexMatrix>(core.d2).solve(core.d1 * y +
                                                          core.d0 * g);
    rhs.noalias() += (k * k) * g;
    rhs.noalias() -= 2.0 * (gp * u1.asDiagonal());
    rhs.noalias() -= g * ((1.0 / (r * r)) * lsq).asDiagonal();
    return rhs;
  };
}

SecondOrderRhs maxwell_regular_rhs(Complex k,
                                   std::shared_ptr<const MaxwellOperator> op,
                                   MultipoleField eps) {
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("maxwell_regular_rhs: k must be nonzero");
  const ChannelBasis& basis = op->basis();
  const RealVector lsq = l_squared_diag(basis);
  return [k, op = std::move(op), eps = std::move(eps), lsq](
             double r, const ComplexMatrix& h,
             const ComplexMatrix& hp) -> ComplexMatrix {
    if (r <= 0.0) throw std::domain_error("maxwell_regular_rhs: r must be positive");
    const OperatorTripleDerivs t = op->assemble_with_derivatives(eps, k, r, 0.0);
    const ComplexVector u1 = log_derivative_diag(op->basis(), k, r);
    const ComplexVector u2 = log_derivative2_diag(op->basis(), k, r);
    ComplexMatrix rhs = u1.asDiagonal() * (h * t.triple.D1 + 2.0 * hp);
    rhs.noalias() += 2.0 * (u2.asDiagonal() * h);
    rhs.noalias() -= hp * t.triple.D1;
    rhs.noalias() -= h * t.D1p;
    rhs.noalias() += h * t.triple.D0;
    rhs.noalias() += (k * k) * h;
    rhs.noalias() -= ((1.0 / (r * r)) * lsq).asDiagonal() * h;
    return rhs;
  };
}

ComplexMatrix modified_wronskian(const ComplexMatrix& h, const ComplexMatrix& hp,
                                 const ComplexMatrix& g, const ComplexMatrix& gp,
                                 const ComplexMatrix& d1_reduced, Complex k,
                                 double r, const ChannelBasis& basis) {
  const ComplexVector u1 = log_derivative_diag(basis, k, r);
  ComplexMatrix bracket = h * (g * u1.asDiagonal() + gp);
  bracket.noalias() -= (hp - u1.asDiagonal() * h) * g;
  bracket.noalias() -= h * d1_reduced * g;
  const ComplexVector w = hankel_diag(basis, k, r);
  ComplexMatrix out(bracket.rows(), bracket.cols());
  for (Eigen::Index i = 0; i < bracket.rows(); ++i)
    for (Eigen::Index j = 0; j < bracket.cols(); ++j)
      out(i, j) = bracket(i, j) * w(j) / w(i);
  return out;
}

RealMatrix transverse_columns(const ChannelBasis& basis) {
  if (basis.kind() != BasisKind::Vector)
    throw std::invalid_argument("transverse_columns: vector basis required");
  const int jmax = basis.truncation();
  const int ncols = 2 * ((jmax + 1) * (jmax + 1) - 1);
  RealMatrix q = RealMatrix::Zero(basis.dim(), ncols);
  int col = 0;
  for (int j = 1; j <= jmax; ++j)
    for (int m = -j; m <= j; ++m) {
      const double am = std::sqrt(j / (2.0 * j + 1.0));
      const double ap = std::sqrt((j + 1.0) / (2.0 * j + 1.0));
      q(basis.index(j, j, m), col) = 1.0;
      ++col;
      q(basis.index(j, j - 1, m), col) = -ap;
      q(basis.index(j, j + 1, m), col) = am;
      ++col;
    }
  return q;
}

RealMatrix transverse_projector(const ChannelBasis& basis) {
  const RealMatrix q = transverse_columns(basis);
  return q * q.transpose();
}

std::string TransverseMode::label() const {
  return "j=" + std::to_string(j) + ",m=" + std::to_string(m) + "," +
         std::string(1, polarization);
}

std::vector<TransverseMode> transverse_mode_labels(const ChannelBasis& basis) {
  std::vector<TransverseMode> labels;
  for (int j = 1; j <= basis.truncation(); ++j)
    for (int m = -j; m <= j; ++m) {
      labels.push_back({j, m, 'M'});
      labels.push_back({j, m, 'N'});
    }
  return labels;
}

namespace {

// Exact solutions of the constant-permittivity generalized wave equation for
// one (j, m) block: transverse M/N patterns at q_t, longitudinal at q_l.
// Columns are normalized; rows follow the block ordering [j-1, j, j+1].
struct FrozenBlock {
  ComplexMatrix r, rp;  // regular columns and derivatives
  ComplexMatrix i, ip;  // outgoing (irregular) columns
};

FrozenBlock frozen_block(int j, Complex qt, Complex ql, double r) {
  const int bsize = (j == 0) ? 1 : 3;
  FrozenBlock b;
  b.r = ComplexMatrix::Zero(bsize, bsize);
  b.rp = ComplexMatrix::Zero(bsize, bsize);
  b.i = ComplexMatrix::Zero(bsize, bsize);
  b.ip = ComplexMatrix::Zero(bsize, bsize);
  if (j == 0) {
    const auto [jl, jld] = riccati_bessel_pair(1, ql * r);
    const auto [hl, hld] = riccati_hankel_pair(1, ql * r);
    b.r(0, 0) = jl;
    b.rp(0, 0) = ql * jld;
    b.i(0, 0) = hl;
    b.ip(0, 0) = ql * hld;
  } else {
    const double am = std::sqrt(j / (2.0 * j + 1.0));
    const double ap = std::sqrt((j + 1.0) / (2.0 * j + 1.0));
    const auto [jt, jtd] = riccati_bessel_pair(j, qt * r);
    const auto [jtm, jtmd] = riccati_bessel_pair(j - 1, qt * r);
    const auto [jtp, jtpd] = riccati_bessel_pair(j + 1, qt * r);
    const auto [jlm, jlmd] = riccati_bessel_pair(j - 1, ql * r);
    const auto [jlp, jlpd] = riccati_bessel_pair(j + 1, ql * r);
    const auto [ht, htd] = riccati_hankel_pair(j, qt * r);
    const auto [htm, htmd] = riccati_hankel_pair(j - 1, qt * r);
    const auto [htp, htpd] = riccati_hankel_pair(j + 1, qt * r);
    const auto [hlm, hlmd] = riccati_hankel_pair(j - 1, ql * r);
    const auto [hlp, hlpd] = riccati_hankel_pair(j + 1, ql * r);
    // Column 0: M (pure l = j); column 1: N; column 2: L.
    b.r(1, 0) = jt;
    b.rp(1, 0) = qt * jtd;
    b.r(0, 1) = -ap * jtm;
    b.r(2, 1) = am * jtp;
    b.rp(0, 1) = -ap * qt * jtmd;
    b.rp(2, 1) = am * qt * jtpd;
    b.r(0, 2) = am * jlm;
    b.r(2, 2) = ap * jlp;
    b.rp(0, 2) = am * ql * jlmd;
    b.rp(2, 2) = ap * ql * jlpd;
    b.i(1, 0) = ht;
    b.ip(1, 0) = qt * htd;
    b.i(0, 1) = -ap * htm;
    b.i(2, 1) = am * htp;
    b.ip(0, 1) = -ap * qt * htmd;
    b.ip(2, 1) = am * qt * htpd;
    b.i(0, 2) = am * hlm;
    b.i(2, 2) = ap * hlp;
    b.ip(0, 2) = am * ql * hlmd;
    b.ip(2, 2) = ap * ql * hlpd;
  }
  // Normalize each solution column.
  for (int c = 0; c < bsize; ++c) {
    const double sr = std::max(b.r.col(c).norm(), r * b.rp.col(c).norm());
    b.r.col(c) /= sr;
    b.rp.col(c) /= sr;
    const double si = std::max(b.i.col(c).norm(), r * b.ip.col(c).norm());
    b.i.col(c) /= si;
    b.ip.col(c) /= si;
  }
  return b;
}

struct MaxwellSignedSolve {
  ComplexMatrix bracket;  // includes the D1 correction, W-conjugation deferred
  long outgoing_steps = 0;
  long regular_steps = 0;
};

MaxwellSignedSolve maxwell_solve_one_sign(
    const MultipoleField& eps, std::shared_ptr<const MaxwellOperator> op,
    Complex k, int sign, const Radii& radii, const SolveOptions& options) {
  const ChannelBasis& basis = op->basis();
  const int n = basis.dim();
  const Complex q = double(sign) * k;

  OdeOptions ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;

  ComplexMatrix h0, h0p;
  maxwell_regular_initial_data(*op, eps, k, sign, radii.r_small, h0, h0p);
  const auto hsol =
      integrate_second_order(maxwell_regular_rhs(q, op, eps), radii.r_small, h0,
                             h0p, radii.r0, ode);
  const auto gsol = integrate_second_order(
      maxwell_outgoing_rhs(q, op, eps), radii.r_big,
      ComplexMatrix::Identity(n, n), ComplexMatrix::Zero(n, n), radii.r0, ode);

  const OperatorTriple t = op->assemble(eps, q, radii.r0);
  const ComplexVector u1 = log_derivative_diag(basis, q, radii.r0);
  MaxwellSignedSolve out;
  out.bracket = hsol.value * (gsol.value * u1.asDiagonal() + gsol.derivative);
  out.bracket.noalias() -=
      (hsol.derivative - u1.asDiagonal() * hsol.value) * gsol.value;
  out.bracket.noalias() -= hsol.value * t.D1 * gsol.value;
  out.outgoing_steps = gsol.steps;
  out.regular_steps = hsol.steps;
  return out;
}

ComplexMatrix s_from_brackets(ComplexMatrix bracket_plus,
                              ComplexMatrix bracket_minus,
                              const ChannelBasis& basis, Complex k, double r0,
                              double condition_limit, double* condition_out) {
  const RealVector parity = small_r_ratio_limit(basis);
  const ComplexVector wplus = hankel_diag(basis, k, r0);
  const ComplexVector wminus = hankel_diag(basis, -k, r0);
  ComplexVector d(basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    d(i) = wplus(i) * parity(i) / wminus(i);

  // Common row equilibration: a diagonal left factor cancels between the
  // brackets (it commutes with the diagonal middle factor) but conditions
  // the solve.
  for (int i = 0; i < basis.dim(); ++i) {
    const double s = bracket_plus.row(i).norm();
    if (s > 0.0) {
      bracket_plus.row(i) /= s;
      bracket_minus.row(i) /= s;
    }
  }

  Eigen::PartialPivLU<ComplexMatrix> lu(bracket_plus);
  const double rcond = lu.rcond();
  const double cond =
      rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (condition_out) *condition_out = cond;
  if (!(cond < condition_limit))
    throw SingularFitError("maxwell_s_matrix: ill-conditioned fit; move r0");

  const ComplexMatrix core = lu.solve(d.asDiagonal() * bracket_minus);
  ComplexMatrix s(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    for (int j = 0; j < basis.dim(); ++j)
      s(i, j) = core(i, j) * wminus(j) * parity(j) / wplus(i);
  if (!s.allFinite()) throw SingularFitError("maxwell_s_matrix: non-finite S");
  return s;
}

}  // namespace

void maxwell_regular_initial_data(const MaxwellOperator& op,
                                  const MultipoleField& eps, Complex k,
                                  int sign, double r_small, ComplexMatrix& h0,
                                  ComplexMatrix& h0p) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("maxwell_regular_initial_data: sign must be +-1");
  const ChannelBasis& basis = op.basis();
  const int n = basis.dim();
  const Complex eps0 =
      eps.moment(0, 0, r_small).f / std::sqrt(4.0 * pi);
  const Complex nref = std::sqrt(eps0);
  const Complex qt = k * nref;
  const Complex ql = k / nref;
  const OperatorTriple t = op.assemble(eps, k, r_small);

  // Left-regular rows (Phi^t, Phi^t') of the frozen problem, fixed by
  // requiring zero pairing with the regular columns and unit pairing with
  // the outgoing ones. Computed at +k; the -k data is the parity transform.
  ComplexMatrix u = ComplexMatrix::Zero(n, n);
  ComplexMatrix up = ComplexMatrix::Zero(n, n);
  for (int j = 0; j <= basis.truncation(); ++j)
    for (int m = -j; m <= j; ++m) {
      std::vector<int> idx;
      if (j == 0) {
        idx = {basis.index(0, 1, m)};
      } else {
        idx = {basis.index(j, j - 1, m), basis.index(j, j, m),
               basis.index(j, j + 1, m)};
      }
      const int bs = static_cast<int>(idx.size());
      const FrozenBlock b = frozen_block(j, qt, ql, r_small);
      ComplexMatrix d1b(bs, bs);
      for (int a = 0; a < bs; ++a)
        for (int c = 0; c < bs; ++c) d1b(a, c) = t.D1(idx[a], idx[c]);

      // (R' - D1 R) R^{-1} through the transposed solve.
      const ComplexMatrix lhs = b.rp - d1b * b.r;
      const ComplexMatrix slope =
          b.r.transpose().partialPivLu().solve(lhs.transpose()).transpose();
      const ComplexMatrix a = b.ip - d1b * b.i - slope * b.i;
      const ComplexMatrix ublock = a.partialPivLu().inverse();
      const ComplexMatrix upblock = ublock * slope;
      for (int r2 = 0; r2 < bs; ++r2)
        for (int c = 0; c < bs; ++c) {
          u(idx[r2], idx[c]) = ublock(r2, c);
          up(idx[r2], idx[c]) = upblock(r2, c);
        }
    }

  // Sign-independent row normalization keyed to the +k data (an allowed
  // left constant factor, shared by both signs).
  for (int i = 0; i < n; ++i) {
    const auto [w, wd] = riccati_hankel_pair(basis.orbital_l()[i], k * r_small);
    const double s = std::max(std::abs(w) * u.row(i).norm(),
                              r_small * std::abs(w) * up.row(i).norm());
    if (s > 0.0) {
      u.row(i) /= s;
      up.row(i) /= s;
    }
  }

  if (sign < 0) {
    const RealVector parity = small_r_ratio_limit(basis);
    u = parity.asDiagonal() * u;
    up = parity.asDiagonal() * up;
  }

  const Complex q = double(sign) * k;
  h0.resize(n, n);
  h0p.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const auto [w, wd] = riccati_hankel_pair(basis.orbital_l()[i], q * r_small);
    h0.row(i) = w * u.row(i);
    h0p.row(i) = q * wd * u.row(i) + w * up.row(i);
  }
}

ScatteringResult maxwell_s_matrix(const MultipoleField& eps,
                                  const ChannelBasis& basis, Complex k,
                                  const SolveOptions& options) {
  auto op = std::make_shared<const MaxwellOperator>(basis, eps.moment_indices());
  return maxwell_s_matrix(eps, op, k, options);
}

ScatteringResult maxwell_s_matrix(const MultipoleField& eps,
                                  std::shared_ptr<const MaxwellOperator> op,
                                  Complex k, const SolveOptions& options) {
  const ChannelBasis& basis = op->basis();
  const Radii radii = default_radii(k, eps, options);

  MaxwellSignedSolve plus = maxwell_solve_one_sign(eps, op, k, 1, radii, options);
  MaxwellSignedSolve minus =
      maxwell_solve_one_sign(eps, op, k, -1, radii, options);

  double cond = 0.0;
  ComplexMatrix s =
      s_from_brackets(std::move(plus.bracket), std::move(minus.bracket), basis,
                      k, radii.r0, options.condition_limit, &cond);

  ScatteringResult result;
  result.k = k;
  result.basis = basis;
  result.S = std::move(s);

  const RealMatrix q = transverse_columns(basis);
  const RealMatrix p = q * q.transpose();
  result.S_projected = q.transpose() * result.S * q;
  result.modes = decompose_modes(result.S_projected);
  result.eigenphases.resize(result.modes.values.size());
  for (Eigen::Index i = 0; i < result.modes.values.size(); ++i)
    result.eigenphases[i] = 0.5 * std::arg(result.modes.values(i));

  const ComplexMatrix sp = result.S * p - p * result.S;
  result.diagnostics.projector_commutator = spectral_norm(sp);
  const int nt = static_cast<int>(result.S_projected.rows());
  result.diagnostics.unitarity_residual = spectral_norm(
      result.S_projected.adjoint() * result.S_projected -
      ComplexMatrix::Identity(nt, nt));
  result.diagnostics.max_condition = cond;
  result.diagnostics.outgoing_steps = plus.outgoing_steps + minus.outgoing_steps;
  result.diagnostics.regular_steps = plus.regular_steps + minus.regular_steps;
  return result;
}

WavefunctionReconstruction reconstruct_wavefunction(
    const MultipoleField& eps, const ChannelBasis& basis, Complex k,
    const std::vector<double>& r_grid, const SolveOptions& options) {
  auto op = std::make_shared<const MaxwellOperator>(basis, eps.moment_indices());
  const Radii radii = default_radii(k, eps, options);
  const int n = basis.dim();

  OdeOptions ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;

  std::vector<double> inner_pts, outer_pts;
  for (double r : r_grid) {
    if (r <= radii.r_small || r >= radii.r_big)
      throw std::invalid_argument("reconstruct_wavefunction: grid outside (r_small, r_big)");
    (r < radii.r0 ? inner_pts : outer_pts).push_back(r);
  }

  // Regular and outgoing factors for both wave-number signs.
  ComplexMatrix h0, h0p;
  maxwell_regular_initial_data(*op, eps, k, 1, radii.r_small, h0, h0p);
  const auto hplus = integrate_second_order(maxwell_regular_rhs(k, op, eps),
                                            radii.r_small, h0, h0p, radii.r0, ode);
  ComplexMatrix h0m, h0pm;
  maxwell_regular_initial_data(*op, eps, k, -1, radii.r_small, h0m, h0pm);
  const auto hminus = integrate_second_order(maxwell_regular_rhs(-k, op, eps),
                                             radii.r_small, h0m, h0pm, radii.r0,
                                             ode);
  auto solve_g = [&](Complex q) {
    return integrate_second_order(maxwell_outgoing_rhs(q, op, eps), radii.r_big,
                                  ComplexMatrix::Identity(n, n),
                                  ComplexMatrix::Zero(n, n), radii.r0, ode,
                                  outer_pts);
  };
  const auto gplus = solve_g(k);
  const auto gminus = solve_g(-k);

  const ComplexMatrix wt_plus = modified_wronskian(
      hplus.value, hplus.derivative, gplus.value, gplus.derivative,
      op->assemble(eps, k, radii.r0).D1, k, radii.r0, basis);
  const ComplexMatrix wt_minus = modified_wronskian(
      hminus.value, hminus.derivative, gminus.value, gminus.derivative,
      op->assemble(eps, -k, radii.r0).D1, -k, radii.r0, basis);

  ComplexMatrix bracket_plus = hplus.value *
      (gplus.value * log_derivative_diag(basis, k, radii.r0).asDiagonal() +
       gplus.derivative);
  bracket_plus.noalias() -=
      (hplus.derivative -
       log_derivative_diag(basis, k, radii.r0).asDiagonal() * hplus.value) *
      gplus.value;
  bracket_plus.noalias() -=
      hplus.value * op->assemble(eps, k, radii.r0).D1 * gplus.value;
  ComplexMatrix bracket_minus = hminus.value *
      (gminus.value * log_derivative_diag(basis, -k, radii.r0).asDiagonal() +
       gminus.derivative);
  bracket_minus.noalias() -=
      (hminus.derivative -
       log_derivative_diag(basis, -k, radii.r0).asDiagonal() * hminus.value) *
      gminus.value;
  bracket_minus.noalias() -=
      hminus.value * op->assemble(eps, -k, radii.r0).D1 * gminus.value;
  const ComplexMatrix s =
      s_from_brackets(bracket_plus, bracket_minus, basis, k, radii.r0,
                      options.condition_limit, nullptr);

  // Outgoing-side combination. The -k coefficient carries the projected
  // modified Wronskian; the +k coefficient is tied to it through S, which
  // keeps the combination an exact regular solution.
  const RealMatrix p = transverse_projector(basis);
  const RealVector parity = small_r_ratio_limit(basis);
  const ComplexMatrix coef_minus = p * wt_minus * p;
  const ComplexMatrix coef_plus = s * (parity.asDiagonal() * coef_minus);
  const double norm = 1.0 / std::sqrt(2.0 * pi);

  auto outer_value = [&](const ComplexMatrix& gm, const ComplexMatrix& gp2,
                         double r) -> ComplexMatrix {
    const ComplexVector wm = hankel_diag(basis, -k, r);
    const ComplexVector wp = hankel_diag(basis, k, r);
    return norm * (gm * wm.asDiagonal() * coef_minus -
                   gp2 * wp.asDiagonal() * coef_plus);
  };
  auto outer_derivative = [&](const ComplexMatrix& gm, const ComplexMatrix& gmd,
                              const ComplexMatrix& gp2, const ComplexMatrix& gp2d,
                              double r) -> ComplexMatrix {
    ComplexVector wm(n), wp(n), wmd(n), wpd(n);
    for (int i = 0; i < n; ++i) {
      const int l = basis.orbital_l()[i];
      const auto [wmv, wmvd] = riccati_hankel_pair(l, -k * r);
      const auto [wpv, wpvd] = riccati_hankel_pair(l, k * r);
      wm(i) = wmv;
      wmd(i) = -k * wmvd;
      wp(i) = wpv;
      wpd(i) = k * wpvd;
    }
    return norm * ((gmd * wm.asDiagonal() + gm * wmd.asDiagonal()) * coef_minus -
                   (gp2d * wp.asDiagonal() + gp2 * wpd.asDiagonal()) * coef_plus);
  };

  // Inner branch: outward integration of the factored wave equation from
  // frozen-medium regular data, giving the regular column family directly.
  const Complex eps0 = eps.moment(0, 0, radii.r_small).f / std::sqrt(4.0 * pi);
  const Complex nref = std::sqrt(eps0);
  ComplexMatrix g0 = ComplexMatrix::Zero(n, n);
  ComplexMatrix g0p = ComplexMatrix::Zero(n, n);
  for (int j = 0; j <= basis.truncation(); ++j)
    for (int m = -j; m <= j; ++m) {
      std::vector<int> idx;
      if (j == 0) {
        idx = {basis.index(0, 1, m)};
      } else {
        idx = {basis.index(j, j - 1, m), basis.index(j, j, m),
               basis.index(j, j + 1, m)};
      }
      const FrozenBlock b = frozen_block(j, k * nref, k / nref, radii.r_small);
      for (size_t a = 0; a < idx.size(); ++a)
        for (size_t c = 0; c < idx.size(); ++c) {
          g0(idx[a], idx[c]) = b.r(a, c);
          g0p(idx[a], idx[c]) = b.rp(a, c);
        }
    }
  // Convert F-data to the W-factored form G = F W^{-1}.
  const ComplexVector ws = hankel_diag(basis, k, radii.r_small);
  const ComplexVector us = log_derivative_diag(basis, k, radii.r_small);
  g0 = g0 * ws.cwiseInverse().asDiagonal();
  g0p = g0p * ws.cwiseInverse().asDiagonal() - g0 * us.asDiagonal();
  const auto greg = integrate_second_order(maxwell_outgoing_rhs(k, op, eps),
                                           radii.r_small, g0, g0p, radii.r0,
                                           ode, inner_pts);

  WavefunctionReconstruction out;
  out.r0 = radii.r0;

  const ComplexVector w0 = hankel_diag(basis, k, radii.r0);
  const ComplexMatrix inner0 = greg.value * w0.asDiagonal();
  const ComplexMatrix outer0 = outer_value(gminus.value, gplus.value, radii.r0);
  Eigen::PartialPivLU<ComplexMatrix> lu(inner0);
  const ComplexMatrix match_c = lu.solve(outer0);
  if (!match_c.allFinite())
    throw SingularFitError("reconstruct_wavefunction: singular matching system");
  out.value_mismatch = spectral_norm(inner0 * match_c - outer0) /
                       std::max(1e-300, spectral_norm(outer0));

  // Derivative continuity across r0 follows because both branches are
  // regular solutions of the same equation; report the residual.
  {
    ComplexVector w0d(n);
    for (int i = 0; i < n; ++i)
      w0d(i) = k * riccati_hankel_pair(basis.orbital_l()[i], k * radii.r0).second;
    const ComplexMatrix inner_deriv =
        (greg.derivative * w0.asDiagonal() + greg.value * w0d.asDiagonal()) *
        match_c;
    const ComplexMatrix outer_deriv =
        outer_derivative(gminus.value, gminus.derivative, gplus.value,
                         gplus.derivative, radii.r0);
    out.derivative_mismatch = spectral_norm(inner_deriv - outer_deriv) /
                              std::max(1e-300, spectral_norm(outer_deriv));
  }

  std::vector<std::pair<double, ComplexMatrix>> samples;
  for (const auto& smp : greg.trace) {
    const ComplexVector w = hankel_diag(basis, k, smp.r);
    samples.emplace_back(smp.r, smp.value * w.asDiagonal() * match_c);
  }
  for (size_t i = 0; i < gplus.trace.size(); ++i) {
    const double r = gplus.trace[i].r;
    samples.emplace_back(
        r, outer_value(gminus.trace[i].value, gplus.trace[i].value, r));
  }
  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [r, psi] : samples) {
    out.r.push_back(r);
    out.psi.push_back(std::move(psi));
  }
  return out;
}

}  // namespace vps
