#pragma once

#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "vps/types.hpp"

namespace vps {

enum class BasisKind { Scalar, Vector };

/// One scattering channel. Scalar channels store j == l.
struct Channel {
  int j;
  int l;
  int m;
};

/// Ordered, immutable index set of scattering channels.
///
/// Scalar ordering: l = 0..lmax, m = -l..l.
/// Vector ordering: j = 0..jmax, m = -j..j, l in {j-1, j, j+1} ascending
/// (j = 0 admits only l = 1). The ordering is total and stable, so channel
/// indices are reproducible across runs.
class ChannelBasis {
 public:
  /// Empty placeholder; real bases come from the factories below.
  ChannelBasis() = default;

  static ChannelBasis make_scalar(int lmax, int source_lmax);
  static ChannelBasis make_vector(int jmax, int source_lmax);

  BasisKind kind() const { return kind_; }
  /// lmax for scalar bases, jmax for vector bases.
  int truncation() const { return truncation_; }
  int source_lmax() const { return source_lmax_; }

  int dim() const { return static_cast<int>(channels_.size()); }
  const Channel& channel(int i) const { return channels_[i]; }
  const std::vector<Channel>& channels() const { return channels_; }

  /// Index of (j, l, m), or -1 when the channel is not in the basis.
  int index(int j, int l, int m) const;

  /// Orbital l per channel; fixes the diagonal of L^2 and of W(kr).
  const std::vector<int>& orbital_l() const { return orbital_l_; }

  bool operator==(const ChannelBasis& other) const {
    return kind_ == other.kind_ && truncation_ == other.truncation_;
  }

 private:
  BasisKind kind_ = BasisKind::Scalar;
  int truncation_ = 0;
  int source_lmax_ = 0;
  std::vector<Channel> channels_;
  std::vector<int> orbital_l_;
  std::map<std::tuple<int, int, int>, int> lookup_;
};

/// Coupling coefficient of scalar channels (l, m) and (l'', m'') through a
/// source multipole (l', m''): the projection of Y_{l}^{m} Y_{l'}^{m'} onto
/// Y_{l''}^{m''}, expressed through 3j symbols.
double scalar_coupling(int l, int m, int lp, int mp, int lpp, int mpp);

/// Coupling coefficient of vector channels (j, l, m) and (j'', l'', m'')
/// through a source multipole (l', m'), via the 6j symbol and
/// Clebsch-Gordan coefficients.
double vector_coupling(int j, int l, int m, int lp, int mp, int jpp, int lpp,
                       int mpp);

/// Precomputed coupling matrices Z for a fixed pair of channel bases and a
/// fixed set of source multipole indices. Entries are k- and r-independent
/// and immutable after construction, so concurrent reads are safe.
class CouplingTensor {
 public:
  /// rows and cols must share the basis kind. pattern lists the (l', m')
  /// source indices to precompute.
  static CouplingTensor build(const ChannelBasis& rows, const ChannelBasis& cols,
                              const std::vector<std::pair<int, int>>& pattern);

  const ChannelBasis& rows() const { return rows_; }
  const ChannelBasis& cols() const { return cols_; }

  /// Z matrix for source index (l', m'); nullptr when outside the pattern.
  const RealMatrix* entry(int lp, int mp) const;

  const std::map<std::pair<int, int>, RealMatrix>& entries() const {
    return entries_;
  }

 private:
  CouplingTensor(ChannelBasis rows, ChannelBasis cols)
      : rows_(std::move(rows)), cols_(std::move(cols)) {}
  ChannelBasis rows_;
  ChannelBasis cols_;
  std::map<std::pair<int, int>, RealMatrix> entries_;
};

}  // namespace vps
