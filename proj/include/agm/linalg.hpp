#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "agm/random.hpp"
#include "agm/types.hpp"

namespace agm::linalg {

struct SpectralResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Matrices whose Gram matrix is at most this size are handled by a dense
/// Hermitian eigensolver; larger ones go through power iteration.
inline constexpr Eigen::Index kDenseSpectralDim = 32;
inline constexpr int kMaxPowerIterations = 10000;
inline constexpr double kDefaultRelTol = 1e-12;
/// Absolute bound on max |M - M*| accepted as Hermitian.
inline constexpr double kHermitianTol = 1e-10;

namespace detail {

template <typename Derived>
double largest_gram_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const DenseMatrix<Scalar> gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, static_cast<double>(eig.eigenvalues().maxCoeff()));
}

}  // namespace detail

/// Largest singular value of `m`.
///
/// Small matrices (Gram dimension <= kDenseSpectralDim) use a full
/// eigendecomposition of M*M and always report converged. Larger ones run
/// power iteration on M*M from a fixed start vector, stopping when successive
/// Rayleigh quotients agree to `rel_tol`. If that does not happen within
/// kMaxPowerIterations the dense value is returned with converged = false.
template <typename Derived>
SpectralResult spectral_norm(const Eigen::MatrixBase<Derived>& m,
                             double rel_tol = kDefaultRelTol) {
  using Scalar = typename Derived::Scalar;
  if (!(rel_tol > 0.0)) throw DomainError("spectral_norm: rel_tol must be positive");
  if (m.size() == 0) return {};
  if (m.cols() <= kDenseSpectralDim)
    return {std::sqrt(detail::largest_gram_eigenvalue(m)), 0, true};

  const auto& mat = m.derived();
  if (mat.cwiseAbs().maxCoeff() == 0.0) return {};

  // Fixed start vector: deterministic, generic with probability one.
  Rng rng(0x5eedULL);
  std::uniform_real_distribution<double> uniform(0.5, 1.5);
  DenseVector<Scalar> v(mat.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Scalar(uniform(rng));
  v.normalize();

  DenseVector<Scalar> w(mat.rows());
  double lambda = 0.0;
  for (int it = 1; it <= kMaxPowerIterations; ++it) {
    w.noalias() = mat * v;
    const double next = w.squaredNorm();
    v.noalias() = mat.adjoint() * w;
    const double vn = v.norm();
    if (vn == 0.0) return {std::sqrt(next), it, true};
    v /= vn;
    if (it > 1 && std::abs(next - lambda) <= rel_tol * next) return {std::sqrt(next), it, true};
    lambda = next;
  }
  return {std::sqrt(detail::largest_gram_eigenvalue(m)), kMaxPowerIterations, false};
}

/// max |M_ij - conj(M_ji)|.
template <typename Derived>
double hermitian_residual(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw DomainError("hermitian_residual: matrix is not square");
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of (M + M*)/2. Throws DomainError when max |M - M*|
/// exceeds kHermitianTol.
template <typename Derived>
double min_eig_hermitian(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const double residual = hermitian_residual(m);
  if (residual > kHermitianTol) {
    std::ostringstream msg;
    msg << "min_eig_hermitian: matrix is not Hermitian (max |M - M*| = " << residual << ")";
    throw DomainError(msg.str());
  }
  const DenseMatrix<Scalar> sym = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  return static_cast<double>(eig.eigenvalues().minCoeff());
}

/// (1/dim) tr M.
template <typename Derived>
auto normalized_trace(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DomainError("normalized_trace: need a nonempty square matrix");
  return Scalar(m.trace() / static_cast<double>(m.rows()));
}

/// M^{-1/2} for Hermitian positive definite M; throws if the smallest
/// eigenvalue is at or below `min_eigenvalue`.
Matrix inverse_sqrt_hpd(const Matrix& m, double min_eigenvalue = 1e-8);

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the
/// phases of diag(R) moved into Q.
Matrix haar_unitary(int dim, Rng& rng);

/// Verblunsky coefficients alpha_0..alpha_{dim-1} of a CUE(dim) spectral
/// measure (Killip-Nenciu): independent, rotation invariant, with
/// |alpha_k|^2 ~ Beta(1, dim - k - 1) for k < dim - 1 and |alpha_{dim-1}| = 1.
std::vector<Complex> cue_verblunsky(int dim, Rng& rng);

/// CMV matrix L M of the coefficients, with L = X_0 + X_2 + ..., M = 1 + X_1 + X_3 + ...
/// (direct sums), X_k = [[conj(alpha_k), r_k], [r_k, -alpha_k]] on coordinates
/// k, k+1, r_k = sqrt(1 - |alpha_k|^2), the last block cut to conj(alpha_{n-1}).
/// Unitary; for cue_verblunsky input its eigenvalues follow CUE, so
/// W C W* with W Haar and independent is Haar.
Matrix cmv_matrix(const std::vector<Complex>& alpha);
/// tr(cmv_matrix(alpha)) in O(n).
Complex cmv_trace(const std::vector<Complex>& alpha);


struct MomentMatrix {
  Matrix a;
  double t = 1.0;
  double s = 1.0;
  bool degenerate = false;  // a^2 = I, i.e. t = 1
};

/// Diagonal matrix with spectrum {+t, -t, +s, -s} in equal multiplicity and
/// s = sqrt(2 - t^2), so tau(a) = 0, tau(a^2) = 1. dim must be divisible by 4
/// and 0 <= t <= sqrt(2).
MomentMatrix hermitian_with_moments(int dim, double t);

}  // namespace agm::linalg
