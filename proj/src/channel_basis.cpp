#include "vps/channel_basis.hpp"

#include <cmath>
#include <stdexcept>

#include "vps/wigner.hpp"

namespace vps {

ChannelBasis ChannelBasis::make_scalar(int lmax, int source_lmax) {
  if (lmax < 0 || source_lmax < 0)
    throw std::invalid_argument("ChannelBasis: negative truncation");
  ChannelBasis b;
  b.kind_ = BasisKind::Scalar;
  b.truncation_ = lmax;
  b.source_lmax_ = source_lmax;
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) b.channels_.push_back({l, l, m});
  for (int i = 0; i < b.dim(); ++i) {
    b.orbital_l_.push_back(b.channels_[i].l);
    b.lookup_[{b.channels_[i].j, b.channels_[i].l, b.channels_[i].m}] = i;
  }
  return b;
}

ChannelBasis ChannelBasis::make_vector(int jmax, int source_lmax) {
  if (jmax < 0 || source_lmax < 0)
    throw std::invalid_argument("ChannelBasis: negative truncation");
  ChannelBasis b;
  b.kind_ = BasisKind::Vector;
  b.truncation_ = jmax;
  b.source_lmax_ = source_lmax;
  for (int j = 0; j <= jmax; ++j)
    for (int m = -j; m <= j; ++m)
      for (int l = std::max(0, j - 1); l <= j + 1; ++l) {
        if (j == 0 && l != 1) continue;
        b.channels_.push_back({j, l, m});
      }
  for (int i = 0; i < b.dim(); ++i) {
    b.orbital_l_.push_back(b.channels_[i].l);
    b.lookup_[{b.channels_[i].j, b.channels_[i].l, b.channels_[i].m}] = i;
  }
  return b;
}

int ChannelBasis::index(int j, int l, int m) const {
  auto it = lookup_.find({j, l, m});
  return it == lookup_.end() ? -1 : it->second;
}

double scalar_coupling(int l, int m, int lp, int mp, int lpp, int mpp) {
  const double w0 = wigner3j(l, lp, lpp, 0, 0, 0);
  if (w0 == 0.0) return 0.0;
  const double wm = wigner3j(l, lp, lpp, m, mp, -mpp);
  if (wm == 0.0) return 0.0;
  double z = std::sqrt((2.0 * l + 1.0) * (2.0 * lp + 1.0) * (2.0 * lpp + 1.0) /
                       (4.0 * pi)) *
             w0 * wm;
  return (mpp % 2 != 0) ? -z : z;
}

double vector_coupling(int j, int l, int m, int lp, int mp, int jpp, int lpp,
                       int mpp) {
  const double six = wigner6j(l, lpp, lp, jpp, j, 1);
  if (six == 0.0) return 0.0;
  const double cg0 = clebsch_gordan(l, 0, lpp, 0, lp, 0);
  if (cg0 == 0.0) return 0.0;
  const double cgm = clebsch_gordan(j, m, jpp, -mpp, lp, -mp);
  if (cgm == 0.0) return 0.0;
  double z = std::sqrt((2.0 * j + 1.0) * (2.0 * jpp + 1.0) * (2.0 * l + 1.0) *
                       (2.0 * lpp + 1.0) /
                       (4.0 * pi * (2.0 * lp + 1.0))) *
             six * cg0 * cgm;
  const int phase = lpp + lp + l + mpp + mp + 1;
  return (((phase % 2) + 2) % 2 != 0) ? -z : z;
}

CouplingTensor CouplingTensor::build(
    const ChannelBasis& rows, const ChannelBasis& cols,
    const std::vector<std::pair<int, int>>& pattern) {
  if (rows.kind() != cols.kind())
    throw std::invalid_argument("CouplingTensor: basis kinds differ");
  CouplingTensor t(rows, cols);
  for (const auto& [lp, mp] : pattern) {
    RealMatrix z = RealMatrix::Zero(rows.dim(), cols.dim());
    for (int rr = 0; rr < rows.dim(); ++rr) {
      const Channel& cr = rows.channel(rr);
      for (int cc = 0; cc < cols.dim(); ++cc) {
        const Channel& cl = cols.channel(cc);
        if (cl.m + mp != cr.m) continue;
        if (rows.kind() == BasisKind::Scalar) {
          z(rr, cc) = scalar_coupling(cl.l, cl.m, lp, mp, cr.l, cr.m);
        } else {
          z(rr, cc) =
              vector_coupling(cl.j, cl.l, cl.m, lp, mp, cr.j, cr.l, cr.m);
        }
      }
    }
    t.entries_.emplace(std::make_pair(lp, mp), std::move(z));
  }
  return t;
}

const RealMatrix* CouplingTensor::entry(int lp, int mp) const {
  auto it = entries_.find({lp, mp});
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace vps
