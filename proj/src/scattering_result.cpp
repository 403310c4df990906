#include "vps/scattering_result.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace vps {

ModeDecomposition decompose_modes(const ComplexMatrix& s) {
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(s, true);
  ComplexVector vals = solver.eigenvalues();
  ComplexMatrix vecs = solver.eigenvectors();

  std::vector<int> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double pa = 0.5 * std::arg(vals(a)), pb = 0.5 * std::arg(vals(b));
    if (pa != pb) return pa < pb;
    return std::abs(vals(a)) < std::abs(vals(b));
  });

  ModeDecomposition out;
  out.values.resize(vals.size());
  out.vectors.resize(vecs.rows(), vecs.cols());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    out.values(i) = vals(order[i]);
    out.vectors.col(i) = vecs.col(order[i]).normalized();
  }
  return out;
}

double match_modes(const ModeDecomposition& previous, ModeDecomposition& current) {
  const Eigen::Index n = current.values.size();
  if (previous.values.size() != n || n == 0) return 0.0;

  RealMatrix overlap(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      overlap(i, j) =
          std::abs(previous.vectors.col(i).dot(current.vectors.col(j)));

  std::vector<int> assign(n, -1);
  std::vector<bool> used(n, false);
  double min_overlap = 1.0;
  // Greedy maximal-overlap assignment, largest overlaps first.
  for (Eigen::Index pass = 0; pass < n; ++pass) {
    double best = -1.0;
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (assign[i] >= 0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (used[j]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    assign[bi] = static_cast<int>(bj);
    used[bj] = true;
    min_overlap = std::min(min_overlap, best);
  }

  ModeDecomposition reordered;
  reordered.values.resize(n);
  reordered.vectors.resize(current.vectors.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    reordered.values(i) = current.values(assign[i]);
    reordered.vectors.col(i) = current.vectors.col(assign[i]);
  }
  current = std::move(reordered);
  return min_overlap;
}

}  // namespace vps
