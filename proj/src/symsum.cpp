#include "agm/symsum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "agm/linalg.hpp"
#include "agm/parallel.hpp"

namespace agm::symsum {

using partitions::Partition;

const char* to_string(Side side) noexcept { return side == Side::left ? "left" : "right"; }

namespace {

double opnorm(const Matrix& m) { return linalg::spectral_norm(m).value; }

Matrix gram_sum(const std::vector<Matrix>& ops) {
  const auto m = ops.front().rows();
  Matrix acc = Matrix::Zero(m, m);
  for (const auto& a : ops) acc.noalias() += a.adjoint() * a;
  return acc;
}

const OperatorFamily& oriented(const OperatorFamily& fam, Side side, std::optional<OperatorFamily>& storage) {
  if (side == Side::left) return fam;
  storage.emplace(fam.adjoint());
  return *storage;
}

void require_normalized(const OperatorFamily& fam, Side side, const char* who) {
  if (!fam.normalized(side)) {
    std::ostringstream msg;
    msg << who << ": family is not normalised on the " << to_string(side)
        << " side (residual " << fam.normalization_residual(side) << ")";
    throw DomainError(msg.str());
  }
}

void require_enumerable(const OperatorFamily& fam, int d, const char* who) {
  if (d < 1) throw DomainError(std::string(who) + ": d must be >= 1");
  if (fam.n() > kMaxEnumerationN || d > kMaxEnumerationD) {
    std::ostringstream msg;
    msg << who << ": exhaustive enumeration needs n <= " << kMaxEnumerationN << " and d <= "
        << kMaxEnumerationD << " (got n = " << fam.n() << ", d = " << d << ")";
    throw InfeasibleError(msg.str());
  }
}

// Depth-first walk over tuples in lexicographic order, keeping the running
// product P = A_{j_r} ... A_{j_1}; every full tuple contributes P* P.
Matrix enumerate_sandwich(const std::vector<Matrix>& ops, int d, bool distinct) {
  const int n = static_cast<int>(ops.size());
  const auto m = ops.front().rows();
  std::vector<Matrix> prefix(static_cast<std::size_t>(d) + 1, Matrix(m, m));
  prefix[0] = Matrix::Identity(m, m);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  Matrix acc = Matrix::Zero(m, m);

  auto walk = [&](auto&& self, int depth) -> void {
    for (int j = 0; j < n; ++j) {
      if (distinct && used[static_cast<std::size_t>(j)]) continue;
      auto& next = prefix[static_cast<std::size_t>(depth) + 1];
      next.noalias() = ops[static_cast<std::size_t>(j)] * prefix[static_cast<std::size_t>(depth)];
      if (depth + 1 == d) {
        acc.noalias() += next.adjoint() * next;
      } else {
        used[static_cast<std::size_t>(j)] = 1;
        self(self, depth + 1);
        used[static_cast<std::size_t>(j)] = 0;
      }
    }
  };
  walk(walk, 0);
  return acc;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace

OperatorFamily::OperatorFamily(std::vector<Matrix> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw DomainError("OperatorFamily: need at least one operator");
  m_ = static_cast<int>(ops_.front().rows());
  if (m_ < 1) throw DomainError("OperatorFamily: operators must be nonempty");
  for (const auto& a : ops_) {
    if (a.rows() != m_ || a.cols() != m_)
      throw DomainError("OperatorFamily: all operators must be square of the same dimension");
    if (!a.allFinite()) throw DomainError("OperatorFamily: non-finite entry");
  }
  const Matrix id = Matrix::Identity(m_, m_);
  Matrix right = Matrix::Zero(m_, m_);
  for (const auto& a : ops_) {
    sup_norm_sq_ = std::max(sup_norm_sq_, opnorm(a.adjoint() * a));
    right.noalias() += a * a.adjoint();
  }
  const double inv_n = 1.0 / static_cast<double>(ops_.size());
  left_residual_ = opnorm(gram_sum(ops_) * inv_n - id);
  right_residual_ = opnorm(right * inv_n - id);
}

OperatorFamily OperatorFamily::adjoint() const {
  std::vector<Matrix> adj;
  adj.reserve(ops_.size());
  for (const auto& a : ops_) adj.emplace_back(a.adjoint());
  return OperatorFamily(std::move(adj));
}

OperatorFamily normalize_family(std::vector<Matrix> ops, Side side) {
  if (ops.empty()) throw DomainError("normalize_family: empty family");
  const auto m = ops.front().rows();
  Matrix mean = Matrix::Zero(m, m);
  for (const auto& a : ops) {
    if (a.rows() != m || a.cols() != m)
      throw DomainError("normalize_family: all operators must be square of the same dimension");
    if (side == Side::left) mean.noalias() += a.adjoint() * a;
    else mean.noalias() += a * a.adjoint();
  }
  mean /= static_cast<double>(ops.size());
  Matrix root;
  try {
    root = linalg::inverse_sqrt_hpd(mean);
  } catch (const DomainError& e) {
    throw DomainError(std::string("normalize_family: mean of A*A is singular: ") + e.what());
  }
  for (auto& a : ops) {
    if (side == Side::left) a = (a * root).eval();
    else a = (root * a).eval();
  }
  return OperatorFamily(std::move(ops));
}

OperatorFamily random_normalized_family(int n, int m, Rng& rng, Side side) {
  if (n < 1 || m < 1) throw DomainError("random_normalized_family: need n, m >= 1");
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) ops.push_back(complex_gaussian_matrix(m, m, rng));
  return normalize_family(std::move(ops), side);
}

OperatorFamily unitary_family(int n, int m, Rng& rng) {
  if (n < 1 || m < 1) throw DomainError("unitary_family: need n, m >= 1");
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) ops.push_back(linalg::haar_unitary(m, rng));
  return OperatorFamily(std::move(ops));
}

Matrix e_wo(const OperatorFamily& fam, int d, Side side) {
  require_enumerable(fam, d, "e_wo");
  if (d > fam.n()) throw DomainError("e_wo: d > n leaves no distinct index tuples");
  std::optional<OperatorFamily> store;
  const auto& f = oriented(fam, side, store);
  const auto count = static_cast<double>(partitions::falling_factorial(f.n(), d));
  return enumerate_sandwich(f.ops(), d, true) * (1.0 / count);
}

Matrix e_wr(const OperatorFamily& fam, int d, Side side) {
  require_enumerable(fam, d, "e_wr");
  std::optional<OperatorFamily> store;
  const auto& f = oriented(fam, side, store);
  return enumerate_sandwich(f.ops(), d, false) * std::pow(static_cast<double>(f.n()), -d);
}

Matrix e_wo_by_subsets(const OperatorFamily& fam, int d, Side side) {
  const int n = fam.n();
  if (d < 1) throw DomainError("e_wo_by_subsets: d must be >= 1");
  if (d > n) throw DomainError("e_wo_by_subsets: d > n leaves no distinct index tuples");
  if (n > 63) throw InfeasibleError("e_wo_by_subsets: n must be <= 63");
  const double widest = binomial(n, std::min(d - 1, n / 2));
  if (widest * fam.m() * fam.m() * 16.0 > 2.0e9)
    throw InfeasibleError("e_wo_by_subsets: subset table would exceed 2 GB");

  std::optional<OperatorFamily> store;
  const auto& f = oriented(fam, side, store);
  const auto& ops = f.ops();
  const auto m = f.m();
  if (d == 1) return gram_sum(ops) * (1.0 / static_cast<double>(n));

  // choose[c][k] = C(c, k); colex rank of a sorted subset {c_0 < c_1 < ...}
  // is sum_i C(c_i, i + 1), which Gosper's enumeration visits in order.
  std::vector<std::vector<std::uint64_t>> choose(static_cast<std::size_t>(n) + 1,
                                                 std::vector<std::uint64_t>(static_cast<std::size_t>(d) + 1, 0));
  for (int c = 0; c <= n; ++c) {
    choose[c][0] = 1;
    for (int k = 1; k <= d && k <= c; ++k) choose[c][k] = choose[c - 1][k - 1] + (k <= c - 1 ? choose[c - 1][k] : 0);
  }
  auto rank = [&](std::uint64_t mask) {
    std::uint64_t r = 0;
    int i = 0;
    while (mask) {
      const int c = std::countr_zero(mask);
      r += choose[static_cast<std::size_t>(c)][static_cast<std::size_t>(i + 1)];
      mask &= mask - 1;
      ++i;
    }
    return r;
  };

  std::vector<Matrix> gram(ops.size());
  for (std::size_t j = 0; j < ops.size(); ++j) gram[j].noalias() = ops[j].adjoint() * ops[j];

  std::vector<Matrix> outer;  // level r + 1
  std::vector<Matrix> level;  // level r
  Matrix tmp(m, m);
  for (int r = d - 1; r >= 0; --r) {
    const auto count = choose[static_cast<std::size_t>(n)][static_cast<std::size_t>(r)];
    level.assign(count, Matrix::Zero(m, m));
    std::uint64_t mask = r == 0 ? 0 : ((std::uint64_t{1} << r) - 1);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      Matrix& acc = level[idx];
      for (int j = 0; j < n; ++j) {
        const std::uint64_t bit = std::uint64_t{1} << j;
        if (mask & bit) continue;
        if (r == d - 1) {
          acc += gram[static_cast<std::size_t>(j)];
        } else {
          tmp.noalias() = ops[static_cast<std::size_t>(j)].adjoint() * outer[rank(mask | bit)];
          acc.noalias() += tmp * ops[static_cast<std::size_t>(j)];
        }
      }
      if (r > 0 && idx + 1 < count) {
        const std::uint64_t low = mask & (~mask + 1);
        const std::uint64_t ripple = mask + low;
        mask = ripple | (((mask ^ ripple) >> 2) / low);
      }
    }
    outer.swap(level);
  }
  return outer.front() * (1.0 / static_cast<double>(partitions::falling_factorial(n, d)));
}

Matrix e_wr_by_nesting(const OperatorFamily& fam, int d, Side side) {
  if (d < 1) throw DomainError("e_wr_by_nesting: d must be >= 1");
  std::optional<OperatorFamily> store;
  const auto& f = oriented(fam, side, store);
  const double inv_n = 1.0 / static_cast<double>(f.n());
  Matrix x = gram_sum(f.ops()) * inv_n;
  Matrix tmp(f.m(), f.m());
  for (int level = 1; level < d; ++level) {
    Matrix next = Matrix::Zero(f.m(), f.m());
    for (const auto& a : f.ops()) {
      tmp.noalias() = a.adjoint() * x;
      next.noalias() += tmp * a;
    }
    x = next * inv_n;
  }
  return x;
}

Matrix partition_sum(const OperatorFamily& fam, const Partition& sigma, Side side) {
  if (fam.n() > partitions::kMaxAlphabet || sigma.size() > partitions::kMaxGroundSet)
    throw InfeasibleError("partition_sum: exhaustive enumeration needs n <= 12 and |sigma| <= 8");
  std::optional<OperatorFamily> store;
  const auto& f = oriented(fam, side, store);
  const auto m = f.m();
  Matrix acc = Matrix::Zero(m, m);
  Matrix p(m, m), tmp(m, m);
  for (const auto& tuple : partitions::tuples_with_kernel(f.n(), sigma)) {
    // P = A_{i_1} A_{i_2} ... A_{i_d}; the term is P* P.
    p = f[tuple.front()];
    for (std::size_t q = 1; q < tuple.size(); ++q) {
      tmp.noalias() = p * f[tuple[q]];
      p.swap(tmp);
    }
    acc.noalias() += p.adjoint() * p;
  }
  return acc;
}

double bound_partition_sum(const OperatorFamily& fam, const Partition& sigma, Side side) {
  require_normalized(fam, side, "bound_partition_sum");
  const int nu = sigma.block_count();
  return std::pow(static_cast<double>(fam.n()), nu) * std::pow(fam.sup_norm_sq(), sigma.size() - nu);
}

double single_block_alt_bound(const OperatorFamily& fam, const Partition& sigma) {
  return std::pow(fam.sup_norm_sq(), sigma.size());
}

FoldedSum folded_sum(const OperatorFamily& fam, const Partition& sigma, Side side) {
  if (sigma.size() < 2 || sigma.is_singleton(0))
    throw DomainError("folded_sum: position 1 must not be a singleton block");
  if (fam.n() > partitions::kMaxAlphabet || sigma.size() > partitions::kMaxGroundSet)
    throw InfeasibleError("folded_sum: exhaustive enumeration needs n <= 12 and |sigma| <= 8");
  std::optional<OperatorFamily> store;
  const auto& f = oriented(fam, side, store);
  const auto m = f.m();
  const Matrix id = Matrix::Identity(m, m);

  FoldedSum out;
  out.value = Matrix::Zero(m, m);
  Matrix q(m, m), tmp(m, m);
  for (const auto& tuple : partitions::tuples_with_kernel(f.n(), sigma)) {
    // Q = A_{i_2} ... A_{i_d}.
    q = f[tuple[1]];
    for (std::size_t k = 2; k < tuple.size(); ++k) {
      tmp.noalias() = q * f[tuple[k]];
      q.swap(tmp);
    }
    const Matrix& first = f[tuple[0]];
    const Matrix middle = id - first.adjoint() * first;
    tmp.noalias() = middle * q;
    out.value.noalias() += q.adjoint() * tmp;
  }
  const Partition gamma = sigma.without_position(0);
  out.telescoped = partition_sum(f, gamma) - partition_sum(f, sigma);
  out.residual = opnorm(out.value - out.telescoped);
  if (out.residual > 1e-10 * std::max(1.0, opnorm(out.value)))
    throw std::logic_error("folded_sum: direct and telescoped sums disagree");
  return out;
}

double folded_sum_bound(const OperatorFamily& fam, const Partition& sigma, Side side) {
  const double c = fam.sup_norm_sq();
  return bound_partition_sum(fam, sigma, side) * (1.0 + 1.0 / c);
}

double folding_residual(std::span<const Matrix> ops) {
  if (ops.empty()) throw DomainError("folding_residual: need at least one operator");
  const auto m = ops.front().rows();
  const Matrix id = Matrix::Identity(m, m);
  const int d = static_cast<int>(ops.size());

  Matrix p = id;
  for (const auto& a : ops) p = (p * a).eval();
  const Matrix lhs = id - p.adjoint() * p;

  Matrix rhs = Matrix::Zero(m, m);
  Matrix q = id;  // A_{j+1} ... A_d, built from the right
  for (int j = d - 1; j >= 0; --j) {
    const Matrix& a = ops[static_cast<std::size_t>(j)];
    rhs.noalias() += q.adjoint() * (id - a.adjoint() * a) * q;
    q = (a * q).eval();
  }
  return opnorm(lhs - rhs);
}

bool within_slack(double lhs, double rhs) noexcept {
  return lhs <= rhs + 1e-9 * std::max(1.0, rhs);
}

double sandwich_epsilon(const OperatorFamily& fam, int d) {
  return (1.0 + fam.sup_norm_sq()) / fam.n() * d * (d - 1) / 2.0;
}

SymReport check_theorem_bound(const OperatorFamily& fam, int d, Side side, bool with_detail) {
  require_normalized(fam, side, "check_theorem_bound");
  if (d > fam.n()) throw DomainError("check_theorem_bound: need d <= n");
  SymReport report;
  report.d = d;
  const Matrix s = e_wo(fam, d, side);
  report.lhs = opnorm(Matrix::Identity(fam.m(), fam.m()) - s);
  report.rhs = sandwich_epsilon(fam, d);
  report.epsilon = report.rhs;
  report.passed = within_slack(report.lhs, report.rhs);
  if (with_detail) {
    for (const auto& sigma : partitions::enumerate_partitions(d)) {
      PartitionBreakdown row{sigma, opnorm(partition_sum(fam, sigma, side)),
                             bound_partition_sum(fam, sigma, side), std::nullopt};
      if (sigma.block_count() == 1) row.single_block_alt = single_block_alt_bound(fam, sigma);
      report.detail.push_back(std::move(row));
    }
  }
  return report;
}

SymReport check_sandwich(const OperatorFamily& fam, int d, Side side) {
  require_normalized(fam, side, "check_sandwich");
  if (d > fam.n()) throw DomainError("check_sandwich: need d <= n");
  SymReport report;
  report.d = d;
  report.epsilon = sandwich_epsilon(fam, d);
  report.rhs = report.epsilon;
  const Matrix s = e_wo(fam, d, side);
  const Matrix id = Matrix::Identity(fam.m(), fam.m());
  const double lower = linalg::min_eig_hermitian(s - (1.0 - report.epsilon) * id);
  const double upper = linalg::min_eig_hermitian((1.0 + report.epsilon) * id - s);
  const double tol = 1e-9 * std::max(1.0, report.epsilon);
  report.passed = lower >= -tol && upper >= -tol;
  report.lhs = report.epsilon - std::min(lower, upper);
  return report;
}

FamilySampler deterministic_sampler(int m) {
  if (m < 1) throw DomainError("deterministic_sampler: m must be >= 1");
  Matrix shift = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) shift((i + 1) % m, i) = 1.0;
  return {"deterministic", m, [shift](Rng&) { return shift; }};
}

FamilySampler perturbed_isometry_sampler(int m, double delta) {
  if (m < 1) throw DomainError("perturbed_isometry_sampler: m must be >= 1");
  if (!(delta >= 0.0)) throw DomainError("perturbed_isometry_sampler: delta must be >= 0");
  return {"perturbed", m, [m, delta](Rng& rng) {
            const Matrix u = linalg::haar_unitary(m, rng);
            const Matrix g = complex_gaussian_matrix(m, m, rng, 1.0 / m);
            const Matrix pert = Matrix::Identity(m, m) + delta * g;
            return Matrix(u * pert / std::sqrt(1.0 + delta * delta));
          }};
}

FamilySampler ginibre_sampler(int m) {
  if (m < 1) throw DomainError("ginibre_sampler: m must be >= 1");
  return {"ginibre", m, [m](Rng& rng) { return complex_gaussian_matrix(m, m, rng, 1.0 / m); }};
}

namespace {

struct Moment {
  double value = 0.0;
  double se = 0.0;
  double raw_mean = 0.0;  // E x^p
  double raw_var = 0.0;
};

Moment pth_moment(const std::vector<double>& norms, int p) {
  const double t = static_cast<double>(norms.size());
  double mean = 0.0;
  for (double x : norms) mean += std::pow(x, p);
  mean /= t;
  double var = 0.0;
  for (double x : norms) var += (std::pow(x, p) - mean) * (std::pow(x, p) - mean);
  var /= (t - 1.0);
  Moment out;
  out.raw_mean = mean;
  out.raw_var = var;
  out.value = std::pow(mean, 1.0 / p);
  out.se = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) / p * std::sqrt(var / t) : 0.0;
  return out;
}

}  // namespace

DeviationReport deviation_experiment(const FamilySampler& sampler, int n, int d, int p, int trials,
                                     std::uint64_t seed, unsigned workers) {
  if (d < 1 || 4 * d > n) throw DomainError("deviation_experiment: need 1 <= d <= n/4");
  if (p != 1 && p != 2 && p != 4) throw DomainError("deviation_experiment: p must be 1, 2 or 4");
  if (trials < 30) throw DomainError("deviation_experiment: need at least 30 trials");
  if (!sampler.draw) throw DomainError("deviation_experiment: sampler has no draw function");

  struct Trial {
    double spread, wo_dev, wr_dev, wo_norm, wr_norm;
  };
  const int m = sampler.m;
  auto run = [&](std::size_t t) {
    Rng rng = substream(seed, t);
    std::vector<Matrix> ops;
    ops.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) ops.push_back(sampler.draw(rng));
    const OperatorFamily fam(std::move(ops));
    const Matrix id = Matrix::Identity(m, m);
    const Matrix wo = e_wo_by_subsets(fam, d);
    const Matrix wr = e_wr_by_nesting(fam, d);
    return Trial{opnorm(gram_sum(fam.ops()) - static_cast<double>(n) * id), opnorm(wo - id),
                 opnorm(wr - id), opnorm(wo), opnorm(wr)};
  };
  const auto results = parallel_map(static_cast<std::size_t>(trials), workers, run);

  auto column = [&](double Trial::*field) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.*field);
    return out;
  };
  const auto spread = pth_moment(column(&Trial::spread), p);
  const auto wo_dev = pth_moment(column(&Trial::wo_dev), p);
  const auto wr_dev = pth_moment(column(&Trial::wr_dev), p);
  const auto wo_norm_col = column(&Trial::wo_norm);
  const auto wr_norm_col = column(&Trial::wr_norm);
  const auto wo_norm = pth_moment(wo_norm_col, p);
  const auto wr_norm = pth_moment(wr_norm_col, p);

  DeviationReport out;
  out.sampler = sampler.name;
  out.n = n;
  out.d = d;
  out.p = p;
  out.m = m;
  out.trials = trials;
  out.epsilon_hat = spread.value / n;
  out.epsilon_hat_se = spread.se / n;
  out.delta_wo = wo_dev.value;
  out.delta_wo_se = wo_dev.se;
  out.delta_wr = wr_dev.value;
  out.delta_wr_se = wr_dev.se;
  out.norm_wo = wo_norm.value;
  out.norm_wr = wr_norm.value;
  out.ratio = wo_norm.value / wr_norm.value;

  // Delta method on log(ratio) = (log M_wo - log M_wr) / p with paired trials.
  double cov = 0.0;
  for (std::size_t t = 0; t < results.size(); ++t)
    cov += (std::pow(wo_norm_col[t], p) - wo_norm.raw_mean) * (std::pow(wr_norm_col[t], p) - wr_norm.raw_mean);
  cov /= (trials - 1.0);
  const double rel_var = wo_norm.raw_var / (wo_norm.raw_mean * wo_norm.raw_mean) +
                         wr_norm.raw_var / (wr_norm.raw_mean * wr_norm.raw_mean) -
                         2.0 * cov / (wo_norm.raw_mean * wr_norm.raw_mean);
  out.ratio_se = out.ratio / p * std::sqrt(std::max(0.0, rel_var) / trials);

  out.predicted_deviation = d * out.epsilon_hat;
  out.predicted_ratio = 1.0 + out.predicted_deviation;
  return out;
}

PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DomainError("fit_power_law: need at least two paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("fit_power_law: values must be positive");
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double k = static_cast<double>(xs.size());
  const double denom = k * sxx - sx * sx;
  if (denom == 0.0) throw DomainError("fit_power_law: x values must not all coincide");
  PowerLawFit fit;
  fit.exponent = (k * sxy - sx * sy) / denom;
  fit.prefactor = std::exp((sy - fit.exponent * sx) / k);
  return fit;
}

}  // namespace agm::symsum
