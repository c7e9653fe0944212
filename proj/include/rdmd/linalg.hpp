#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "rdmd/types.hpp"

namespace rdmd {

/// Default relative singular-value cutoff for an m x n matrix.
inline double default_rtol(Eigen::Index rows, Eigen::Index cols) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

/// Order in which spectra are reported: descending modulus, then descending
/// imaginary part. Moduli that agree to a relative 1e-12 count as equal so
/// conjugate pairs are ordered (+im, -im) regardless of rounding.
inline std::vector<Eigen::Index> spectrum_order(const CVector& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values[a]) > std::abs(values[b]); });
  // Re-sort runs of (numerically) equal modulus by imaginary part.
  std::size_t start = 0;
  while (start < idx.size()) {
    const double lead = std::abs(values[idx[start]]);
    std::size_t stop = start + 1;
    while (stop < idx.size() &&
           std::abs(std::abs(values[idx[stop]]) - lead) <= 1e-12 * std::max(1.0, lead)) {
      ++stop;
    }
    std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(stop),
                     [&](Eigen::Index a, Eigen::Index b) { return values[a].imag() > values[b].imag(); });
    start = stop;
  }
  return idx;
}

inline CVector sorted_spectrum(const CVector& values) {
  const auto order = spectrum_order(values);
  CVector out(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[order[i]];
  return out;
}

/// Thin SVD, singular values descending.
struct Svd {
  CMatrix U;
  RVector sigma;
  CMatrix V;

  /// Number of singular values above rtol * sigma_max.
  Eigen::Index numerical_rank(double rtol) const {
    if (sigma.size() == 0 || sigma[0] == 0.0) return 0;
    const double cut = rtol * sigma[0];
    Eigen::Index r = 0;
    while (r < sigma.size() && sigma[r] > cut) ++r;
    return r;
  }
};

inline Svd thin_svd(const CMatrix& m) {
  require(m.size() > 0, "svd of an empty matrix");
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return Svd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Moore-Penrose pseudoinverse. Singular values below rtol * sigma_max are
/// treated as zero.
inline CMatrix pseudo_inverse(const CMatrix& m, double rtol) {
  require(m.size() > 0, "pseudo_inverse of an empty matrix");
  require(m.allFinite(), "pseudo_inverse: matrix has non-finite entries");
  require(rtol >= 0.0, "pseudo_inverse: rtol must be nonnegative");
  const Svd s = thin_svd(m);
  const Eigen::Index r = s.numerical_rank(rtol);
  if (r == 0) return CMatrix::Zero(m.cols(), m.rows());
  const RVector inv = s.sigma.head(r).cwiseInverse();
  return s.V.leftCols(r) * inv.asDiagonal() * s.U.leftCols(r).adjoint();
}

inline CMatrix pseudo_inverse(const CMatrix& m) { return pseudo_inverse(m, default_rtol(m.rows(), m.cols())); }

/// Condition number in the 2-norm.
inline double condition_number(const CMatrix& m) {
  const Svd s = thin_svd(m);
  const double smin = s.sigma[s.sigma.size() - 1];
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s.sigma[0] / smin;
}

struct EigenDecomposition {
  CVector values;
  CMatrix right;  ///< columns are right eigenvectors v_i (unit norm)
  CMatrix left;   ///< rows are w_i^T with left * right = I
  double condition = 1.0;
};

/// Eigenvalues with right and biorthogonal left eigenvectors. The left vectors
/// are the rows of V^{-1}, so w_i^T v_j = delta_ij. Throws NearDefective when
/// cond(V) exceeds cond_limit.
inline EigenDecomposition eig_left_right(const CMatrix& c, double cond_limit) {
  require(c.rows() == c.cols(), "eig_left_right: matrix must be square");
  require(c.size() > 0, "eig_left_right: empty matrix");
  require(c.allFinite(), "eig_left_right: matrix has non-finite entries");
  Eigen::ComplexEigenSolver<CMatrix> solver(c, true);
  if (solver.info() != Eigen::Success) fail(ErrorKind::NearDefective, "eig_left_right: eigen solver did not converge");

  const auto order = spectrum_order(solver.eigenvalues());
  EigenDecomposition out;
  out.values.resize(c.rows());
  out.right.resize(c.rows(), c.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out.values[j] = solver.eigenvalues()[order[i]];
    out.right.col(j) = solver.eigenvectors().col(order[i]).normalized();
  }

  out.condition = condition_number(out.right);
  if (!(out.condition <= cond_limit)) {
    std::ostringstream msg;
    msg << "eigenvector matrix is near defective (cond = " << out.condition << " > " << cond_limit
        << "); reduce the rank or change the observables";
    fail(ErrorKind::NearDefective, msg.str());
  }
  out.left = out.right.partialPivLu().inverse();
  return out;
}

}  // namespace rdmd
