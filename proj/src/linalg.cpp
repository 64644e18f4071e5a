#include "agm/linalg.hpp"

#include <numbers>
#include <random>
#include <string>

namespace agm::linalg {

Matrix inverse_sqrt_hpd(const Matrix& m, double min_eigenvalue) {
  const Matrix sym = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > min_eigenvalue)) {
    std::ostringstream msg;
    msg << "matrix is not positive definite enough to invert (min eigenvalue = " << lo << ")";
    throw DomainError(msg.str());
  }
  const Eigen::VectorXd scale = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().adjoint();
}

Matrix haar_unitary(int dim, Rng& rng) {
  if (dim < 1) throw DomainError("haar_unitary: dim must be >= 1");
  const Matrix z = complex_gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    const Complex phase = mag > 0.0 ? d / mag : Complex(1.0);
    q.col(j) *= phase;
  }
  return q;
}

std::vector<Complex> cue_verblunsky(int dim, Rng& rng) {
  if (dim < 1) throw DomainError("cue_verblunsky: dim must be >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Complex> alpha(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    // Beta(1, b) by inversion: 1 - U^{1/b}.
    const int b = dim - k - 1;
    const double radius = b == 0 ? 1.0 : std::sqrt(1.0 - std::pow(1.0 - unit(rng), 1.0 / b));
    alpha[static_cast<std::size_t>(k)] = std::polar(radius, phase);
  }
  return alpha;
}

namespace {

// L and M of a CMV factorisation are tridiagonal; entry i of `upper` is
// (i, i+1) and of `lower` is (i+1, i).
struct Tridiagonal {
  Vector diag, upper, lower;
  explicit Tridiagonal(Eigen::Index n)
      : diag(Vector::Ones(n)), upper(Vector::Zero(std::max<Eigen::Index>(n - 1, 0))), lower(upper) {}
  Matrix dense() const {
    const auto n = diag.size();
    Matrix out = diag.asDiagonal();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      out(i, i + 1) = upper(i);
      out(i + 1, i) = lower(i);
    }
    return out;
  }
};

std::pair<Tridiagonal, Tridiagonal> cmv_factors(const std::vector<Complex>& alpha) {
  const auto n = static_cast<Eigen::Index>(alpha.size());
  if (n < 1) throw DomainError("cmv_matrix: need at least one coefficient");
  Tridiagonal l(n), m(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Tridiagonal& target = k % 2 == 0 ? l : m;
    const Complex a = alpha[static_cast<std::size_t>(k)];
    target.diag(k) = std::conj(a);
    if (k == n - 1) break;
    const double r = std::sqrt(std::max(0.0, 1.0 - std::norm(a)));
    target.upper(k) = r;
    target.lower(k) = r;
    target.diag(k + 1) = -a;
  }
  return {std::move(l), std::move(m)};
}

}  // namespace

Matrix cmv_matrix(const std::vector<Complex>& alpha) {
  const auto [l, m] = cmv_factors(alpha);
  return l.dense() * m.dense();
}

Complex cmv_trace(const std::vector<Complex>& alpha) {
  const auto [l, m] = cmv_factors(alpha);
  Complex tr = l.diag.cwiseProduct(m.diag).sum();
  tr += l.upper.cwiseProduct(m.lower).sum() + l.lower.cwiseProduct(m.upper).sum();
  return tr;
}

MomentMatrix hermitian_with_moments(int dim, double t) {
  if (dim < 4 || dim % 4 != 0)
    throw DomainError("hermitian_with_moments: dim must be a positive multiple of 4, got " +
                      std::to_string(dim));
  if (!(t >= 0.0) || t * t > 2.0)
    throw DomainError("hermitian_with_moments: need 0 <= t <= sqrt(2) so that s is real");
  MomentMatrix out;
  out.t = t;
  out.s = std::sqrt(2.0 - t * t);
  out.degenerate = (t == 1.0);
  out.a = Matrix::Zero(dim, dim);
  // Interleaving +t, -t, +s, -s keeps every partial sum of the trace exact.
  const double pattern[4] = {t, -t, out.s, -out.s};
  for (int i = 0; i < dim; ++i) out.a(i, i) = pattern[i % 4];
  return out;
}

}  // namespace agm::linalg
