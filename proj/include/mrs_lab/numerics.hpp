// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense complex-matrix kernels shared by the channel, rate, receiver and
// estimation code. Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mrs_lab/errors.hpp"

namespace mrs {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Elementwise relative tolerance used when a matrix must be Hermitian.
inline constexpr double kHermitianTol = 1e-12;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) {
      const auto v = Complex(a(i, j));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
  return true;
}

inline bool is_hermitian(const CMatrix& a, double tol = kHermitianTol) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.cwiseAbs().maxCoeff();
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i <= j; ++i) {
      const double diff = std::abs(a(i, j) - std::conj(a(j, i)));
      const double ref = std::max(std::abs(a(i, j)), std::abs(a(j, i)));
      if (diff > tol * ref + 1e-2 * tol * scale) return false;
    }
  return true;
}

/// Kronecker product A (x) B. Block (i, j) of the result is a_ij * B.
template <typename DA, typename DB>
auto kronecker(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DA::Scalar,
                                                       typename DB::Scalar>::ReturnType;
  using Result = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  constexpr auto kMax = std::numeric_limits<Index>::max();
  const Index ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  if (ar < 1 || ac < 1 || br < 1 || bc < 1) throw input_error("kronecker: empty operand");
  if (ar > kMax / br || ac > kMax / bc) throw size_error("kronecker: dimension overflow");
  const Index rows = ar * br, cols = ac * bc;
  if (rows > kMax / cols) throw size_error("kronecker: element count overflow");

  Result out(rows, cols);
  for (Index j = 0; j < ac; ++j)
    for (Index i = 0; i < ar; ++i)
      out.block(i * br, j * bc, br, bc) = Scalar(a(i, j)) * b.template cast<Scalar>();
  return out;
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(CMatrix m) : l_(std::move(m)) {
    if (l_.rows() != l_.cols()) throw input_error("cholesky: matrix is not square");
    const Index n = l_.rows();
    for (Index j = 0; j < n; ++j) {
      double d = l_(j, j).real();
      if (j > 0) d -= l_.row(j).head(j).squaredNorm();
      if (!(d > 0.0) || !std::isfinite(d)) {
        ok_ = false;
        return;
      }
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (Index i = j + 1; i < n; ++i) {
        Complex s = l_(i, j);
        if (j > 0) s -= l_.row(j).head(j).dot(l_.row(i).head(j));  // sum_k l_ik conj(l_jk)
        l_(i, j) = s / ljj;
      }
    }
    l_.triangularView<Eigen::StrictlyUpper>().setZero();
  }

  bool ok() const noexcept { return ok_; }

  /// Natural log of det(M), accumulated pivot by pivot.
  double log_det() const {
    double acc = 0.0;
    for (Index i = 0; i < l_.rows(); ++i) acc += std::log(l_(i, i).real());
    return 2.0 * acc;
  }

  /// Solves M x = b.
  CVector solve(const CVector& b) const {
    const auto lower = l_.triangularView<Eigen::Lower>();
    CVector y = lower.solve(b);
    return lower.adjoint().solve(y);
  }

  const CMatrix& lower() const noexcept { return l_; }

 private:
  CMatrix l_;
  bool ok_ = true;
};

/// I + c * A A^H on the smaller Gram side (the two sides share their
/// non-unit eigenvalues, so the determinant is the same).
inline CMatrix shifted_gram(const CMatrix& a, double c) {
  CMatrix gram = a.rows() <= a.cols() ? CMatrix(a * a.adjoint()) : CMatrix(a.adjoint() * a);
  gram *= c;
  gram.diagonal().array() += 1.0;
  return gram;
}

/// log2 det(I + c * A A^H) in bits.
inline double gram_logdet_rate(const CMatrix& a, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw input_error("gram_logdet_rate: c must be finite and >= 0");
  if (a.size() == 0) return 0.0;
  if (!all_finite(a)) throw input_error("gram_logdet_rate: non-finite matrix entry");
  const CholeskyFactor factor(shifted_gram(a, c));
  if (!factor.ok()) throw std::logic_error("gram_logdet_rate: shifted Gram matrix is not positive definite");
  return std::max(0.0, factor.log_det() / std::numbers::ln2);
}

/// Post-MMSE SINR of the stream carried by column 0 of H:
/// 1 / [(I + c H^H H)^-1]_00 - 1. Only the first column of the inverse is formed.
inline double mmse_residual_sinr(const CMatrix& h, double c) {
  if (h.cols() < 1) throw input_error("mmse_residual_sinr: H needs at least one column");
  if (!(c >= 0.0) || !std::isfinite(c)) throw input_error("mmse_residual_sinr: c must be finite and >= 0");
  if (!all_finite(h)) throw input_error("mmse_residual_sinr: non-finite matrix entry");
  CMatrix m = h.adjoint() * h;
  m *= c;
  m.diagonal().array() += 1.0;
  const CholeskyFactor factor(std::move(m));
  if (!factor.ok()) throw std::logic_error("mmse_residual_sinr: regularized system is singular");
  const CVector e0 = CVector::Unit(h.cols(), 0);
  const double inv00 = factor.solve(e0)(0).real();
  return std::max(0.0, 1.0 / inv00 - 1.0);
}

/// All eigenvalues of a Hermitian matrix, in descending order.
inline std::vector<double> hermitian_eigenvalues(const CMatrix& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) throw input_error("hermitian_eigenvalues: matrix must be square");
  if (!all_finite(a)) throw input_error("hermitian_eigenvalues: non-finite matrix entry");
  if (!is_hermitian(a)) throw input_error("hermitian_eigenvalues: matrix is not Hermitian");
  const Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::logic_error("hermitian_eigenvalues: solver did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace mrs
