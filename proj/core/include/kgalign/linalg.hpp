#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace kgalign {

// Entity-major storage: one row per entity.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Scales every row to unit Euclidean length. Zero rows stay zero.
inline void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

inline Matrix normalized_rows(Matrix m) {
  normalize_rows(m);
  return m;
}

// Gradient of y = x / |x| with respect to x, given dL/dy. Zero x yields zero.
template <typename X, typename Y, typename DY>
RowVector normalize_backward(const X& x, const Y& y, const DY& dy) {
  const double n = x.norm();
  if (n == 0.0) return RowVector::Zero(x.size());
  return (dy - y * y.dot(dy)) / n;
}

}  // namespace kgalign
