#include "agm/freeprobe.hpp"

#include <cmath>
#include <sstream>

#include "agm/linalg.hpp"
#include "agm/parallel.hpp"

namespace agm::freeprobe {

namespace {

double unitary_defect(const Matrix& u) {
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

// X -> (1/n) sum_j a_j X a_j*
Matrix nest(const std::vector<Matrix>& ajs, const Matrix& x) {
  const auto dim = x.rows();
  Matrix acc = Matrix::Zero(dim, dim);
  Matrix tmp(dim, dim);
  for (const auto& aj : ajs) {
    tmp.noalias() = aj * x;
    acc.noalias() += tmp * aj.adjoint();
  }
  return acc / static_cast<double>(ajs.size());
}

}  // namespace

FreeFamily::FreeFamily(Matrix a, std::vector<Matrix> us) : a_(std::move(a)), us_(std::move(us)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) throw DomainError("FreeFamily: a must be square");
  if (us_.empty()) throw DomainError("FreeFamily: need at least one unitary");
  if (linalg::hermitian_residual(a_) > 1e-10) throw DomainError("FreeFamily: a is not Hermitian");
  for (const auto& u : us_) {
    if (u.rows() != a_.rows() || u.cols() != a_.cols())
      throw DomainError("FreeFamily: unitaries must match the dimension of a");
    if (unitary_defect(u) > 1e-12) throw DomainError("FreeFamily: u_j is not unitary to 1e-12");
  }
  ajs_.reserve(us_.size());
  for (const auto& u : us_) ajs_.emplace_back(a_ * u);
  degenerate = (a_ * a_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= 1e-12;
}

InvariantReport FreeFamily::check_invariants() const {
  InvariantReport r;
  r.hermitian = linalg::hermitian_residual(a_);
  r.trace = std::abs(linalg::normalized_trace(a_));
  r.second = std::abs(linalg::normalized_trace(Matrix(a_ * a_)) - 1.0);
  for (const auto& u : us_) {
    r.unitary = std::max(r.unitary, unitary_defect(u));
    r.max_unitary_trace = std::max(r.max_unitary_trace, std::abs(linalg::normalized_trace(u)));
  }
  return r;
}

FreeFamily make_free_family(int dim, int n, double t, Rng& rng) {
  if (n < 2) throw DomainError("make_free_family: need n >= 2");
  if (!(t > 0.0)) throw DomainError("make_free_family: need t > 0");
  const auto moments = linalg::hermitian_with_moments(dim, t);
  const Matrix v = linalg::haar_unitary(dim, rng);
  Matrix a = v * moments.a * v.adjoint();
  a = ((a + a.adjoint()) / 2.0).eval();

  long redraws = 0;
  std::vector<Matrix> us;
  us.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(us.size()) < n) {
    // tr U depends only on the spectrum, so the rejection runs on a CUE
    // spectrum (CMV model, O(dim) trace) and the accepted one is rotated by
    // an independent Haar W: W C W* is Haar conditioned on |tau| <= tol.
    const auto alpha = linalg::cue_verblunsky(dim, rng);
    if (std::abs(linalg::cmv_trace(alpha)) <= kUnitaryTraceTol * dim) {
      const Matrix w = linalg::haar_unitary(dim, rng);
      Matrix u = w * linalg::cmv_matrix(alpha) * w.adjoint();
      us.push_back(std::move(u));
    } else if (++redraws > kMaxRedraws) {
      std::ostringstream msg;
      msg << "make_free_family: no unitary with |tau(u)| <= " << kUnitaryTraceTol << " after "
          << kMaxRedraws << " draws at dim " << dim;
      throw InfeasibleError(msg.str());
    }
  }
  FreeFamily fam(std::move(a), std::move(us));
  fam.t = t;
  fam.degenerate = moments.degenerate;
  fam.redraws = redraws;
  return fam;
}

Matrix ewo3(const FreeFamily& fam) {
  const int n = fam.n();
  if (n < 3) throw DomainError("ewo3: need n >= 3");
  const auto& ajs = fam.ajs();
  const auto dim = fam.dim();
  std::vector<Matrix> gram(ajs.size());
  Matrix total = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j < ajs.size(); ++j) {
    gram[j].noalias() = ajs[j] * ajs[j].adjoint();
    total += gram[j];
  }
  Matrix acc = Matrix::Zero(dim, dim);
  Matrix inner(dim, dim), mid(dim, dim), tmp(dim, dim);
  for (int j1 = 0; j1 < n; ++j1) {
    mid.setZero();
    for (int j2 = 0; j2 < n; ++j2) {
      if (j2 == j1) continue;
      inner = total - gram[j1] - gram[j2];
      tmp.noalias() = ajs[j2] * inner;
      mid.noalias() += tmp * ajs[j2].adjoint();
    }
    tmp.noalias() = ajs[j1] * mid;
    acc.noalias() += tmp * ajs[j1].adjoint();
  }
  return acc / (static_cast<double>(n) * (n - 1) * (n - 2));
}

Matrix ewr3(const FreeFamily& fam) {
  const Matrix id = Matrix::Identity(fam.dim(), fam.dim());
  return nest(fam.ajs(), nest(fam.ajs(), nest(fam.ajs(), id)));
}

Matrix difference_rhs(const FreeFamily& fam) {
  const int n = fam.n();
  if (n < 2) throw DomainError("difference_rhs: need n >= 2");
  const auto& ajs = fam.ajs();
  const auto dim = fam.dim();
  const Matrix defect = Matrix::Identity(dim, dim) - fam.a() * fam.a();
  const double nn = static_cast<double>(n);

  // sum_{j,k} a_j a_k D a_k* a_j* = n^2 * nest(nest(D)).
  const Matrix pairs = nest(ajs, nest(ajs, defect)) * (nn * nn);
  Matrix diag = Matrix::Zero(dim, dim);
  Matrix sq(dim, dim), tmp(dim, dim);
  for (const auto& aj : ajs) {
    sq.noalias() = aj * aj;
    tmp.noalias() = sq * defect;
    diag.noalias() += tmp * sq.adjoint();
  }
  return pairs * (1.0 / (nn * nn) - 1.0 / (nn * (nn - 1.0))) + diag / (nn * (nn - 1.0));
}

double difference_identity_residual(const FreeFamily& fam) {
  const Matrix lhs = ewo3(fam) - ewr3(fam);
  return linalg::spectral_norm(Matrix(lhs - difference_rhs(fam))).value;
}

double order_violation(const FreeFamily& fam) {
  return linalg::min_eig_hermitian(Matrix(ewr3(fam) - ewo3(fam)));
}

double trace_gap(const FreeFamily& fam) {
  return std::abs(linalg::normalized_trace(Matrix(ewr3(fam) - ewo3(fam))));
}

double free_moment_residual(const FreeFamily& fam) {
  const auto& us = fam.us();
  const Matrix& a = fam.a();
  const Complex ta = linalg::normalized_trace(a);
  double worst = 0.0;
  for (std::size_t j = 0; j < us.size(); ++j) {
    const Matrix m = a * us[j] * a * us[j].adjoint();
    worst = std::max(worst, std::abs(linalg::normalized_trace(m) - ta * ta));
    for (std::size_t k = 0; k < us.size(); ++k)
      if (k != j) worst = std::max(worst, std::abs(linalg::normalized_trace(Matrix(us[j] * us[k].adjoint()))));
  }
  return worst;
}

std::vector<CounterexampleRow> counterexample_sweep(int dim, int n, double t, int seeds,
                                                    std::uint64_t seed, unsigned workers) {
  if (seeds < 1) throw DomainError("counterexample_sweep: need at least one seed");
  if (n < 3) throw DomainError("counterexample_sweep: need n >= 3");
  if (t > std::sqrt(2.0)) throw DomainError("counterexample_sweep: need t <= sqrt(2)");
  return parallel_map(static_cast<std::size_t>(seeds), workers, [&](std::size_t s) {
    Rng rng = substream(seed, s);
    const auto fam = make_free_family(dim, n, t, rng);
    const Matrix wo = ewo3(fam);
    const Matrix wr = ewr3(fam);
    CounterexampleRow row;
    row.seed_index = s;
    row.identity_residual = linalg::spectral_norm(Matrix(wo - wr - difference_rhs(fam))).value;
    row.lambda_min = linalg::min_eig_hermitian(Matrix(wr - wo));
    row.tau_wo = linalg::normalized_trace(wo).real();
    row.tau_wr = linalg::normalized_trace(wr).real();
    row.trace_gap = std::abs(linalg::normalized_trace(Matrix(wr - wo)));
    row.redraws = fam.redraws;
    return row;
  });
}

}  // namespace agm::freeprobe
