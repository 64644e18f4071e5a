#include "agm/igm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "agm/linalg.hpp"
#include "agm/parallel.hpp"

namespace agm::igm {

VectorFamily VectorFamily::from_vectors(std::vector<Vector> vectors, double tol) {
  if (vectors.empty()) throw DomainError("VectorFamily: need at least one vector");
  const auto m = vectors.front().size();
  if (m < 1) throw DomainError("VectorFamily: vectors must be nonempty");
  VectorFamily fam;
  fam.m_ = static_cast<int>(m);
  Matrix second = Matrix::Zero(m, m);
  for (const auto& v : vectors) {
    if (v.size() != m) throw DomainError("VectorFamily: vectors must share a dimension");
    if (!v.allFinite()) throw DomainError("VectorFamily: non-finite entry");
    second.noalias() += v * v.adjoint();
    fam.mu_ = std::max(fam.mu_, v.squaredNorm());
    if (v.imag().cwiseAbs().maxCoeff() != 0.0) fam.real_ = false;
  }
  second /= static_cast<double>(vectors.size());
  fam.sigma_ = second.trace().real() / static_cast<double>(m);
  fam.residual_ = linalg::spectral_norm(Matrix(second - fam.sigma_ * Matrix::Identity(m, m))).value;
  fam.isotropic_ = fam.residual_ <= tol;
  fam.vectors_ = std::move(vectors);
  return fam;
}

const char* to_string(Policy policy) noexcept {
  switch (policy) {
    case Policy::with_replacement: return "with_replacement";
    case Policy::without_replacement: return "without_replacement";
    case Policy::block_repeat: return "block_repeat";
  }
  return "?";
}

Policy policy_from_string(const std::string& name) {
  for (Policy p : {Policy::with_replacement, Policy::without_replacement, Policy::block_repeat})
    if (name == to_string(p)) return p;
  throw DomainError("unknown policy \"" + name + "\"");
}

void IgmConfig::validate(int n, int m) const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("IgmConfig: gamma must be >= 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("IgmConfig: rho must be >= 0");
  if (k < 1) throw DomainError("IgmConfig: k must be >= 1");
  if (trials < 1) throw DomainError("IgmConfig: trials must be >= 1");
  if (mult < 1) throw DomainError("IgmConfig: mult must be >= 1");
  if (x_star.size() != m || x_0.size() != m)
    throw DomainError("IgmConfig: x_star and x_0 must have the family's dimension");
  if (policy != Policy::with_replacement && k > pool_size(n)) {
    std::ostringstream msg;
    msg << "IgmConfig: sampling without replacement needs k <= pool size (k = " << k
        << ", pool = " << pool_size(n) << "); use block_repeat with a larger mult";
    throw DomainError(msg.str());
  }
}

std::vector<int> draw_pool_indices(int n, const IgmConfig& cfg, Rng& rng) {
  const int pool = cfg.pool_size(n);
  std::vector<int> out(static_cast<std::size_t>(cfg.k));
  if (cfg.policy == Policy::with_replacement) {
    std::uniform_int_distribution<int> pick(0, pool - 1);
    for (auto& i : out) i = pick(rng);
    return out;
  }
  if (cfg.k > pool) throw DomainError("draw_pool_indices: k exceeds the pool size");
  std::vector<int> perm(static_cast<std::size_t>(pool));
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < cfg.k; ++t) {
    std::uniform_int_distribution<int> pick(t, pool - 1);
    std::swap(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(pick(rng))]);
    out[static_cast<std::size_t>(t)] = perm[static_cast<std::size_t>(t)];
  }
  return out;
}

std::vector<Complex> draw_noise(const VectorFamily& vecs, const IgmConfig& cfg, Rng& rng) {
  std::vector<Complex> w(static_cast<std::size_t>(cfg.pool_size(vecs.n())));
  if (cfg.rho == 0.0) return w;
  const bool real = vecs.is_real() && cfg.x_star.imag().cwiseAbs().maxCoeff() == 0.0;
  for (auto& z : w) z = real ? Complex(real_normal(rng, cfg.rho), 0.0) : complex_normal(rng, cfg.rho * cfg.rho);
  return w;
}

std::vector<Vector> run_with(const VectorFamily& vecs, const IgmConfig& cfg,
                             const std::vector<int>& pool_indices, const std::vector<Complex>& noise) {
  const int n = vecs.n();
  std::vector<Vector> xs;
  xs.reserve(pool_indices.size() + 1);
  xs.push_back(cfg.x_0);
  Vector x = cfg.x_0;
  for (int p : pool_indices) {
    if (p < 0 || p >= static_cast<int>(noise.size())) throw DomainError("run_with: pool index out of range");
    const Vector& a = vecs[p % n];
    const Complex y = a.dot(cfg.x_star) + noise[static_cast<std::size_t>(p)];
    const Complex residual = a.dot(x) - y;  // a* x - y
    x -= cfg.gamma * residual * a;
    xs.push_back(x);
  }
  return xs;
}

std::vector<Vector> igm_run(const VectorFamily& vecs, const IgmConfig& cfg, Rng& rng) {
  cfg.validate(vecs.n(), vecs.m());
  const auto noise = draw_noise(vecs, cfg, rng);
  const auto idx = draw_pool_indices(vecs.n(), cfg, rng);
  return run_with(vecs, cfg, idx, noise);
}

double error_expansion_check(const VectorFamily& vecs, const IgmConfig& cfg,
                             const std::vector<int>& pool_indices, const std::vector<Complex>& noise) {
  const auto xs = run_with(vecs, cfg, pool_indices, noise);
  const int n = vecs.n();
  const auto m = vecs.m();
  const Matrix id = Matrix::Identity(m, m);
  std::vector<Matrix> steps;
  for (int p : pool_indices) {
    const Vector& a = vecs[p % n];
    steps.push_back(id - cfg.gamma * a * a.adjoint());
  }
  const Vector e0 = cfg.x_0 - cfg.x_star;
  double worst = 0.0;
  for (std::size_t t = 1; t <= steps.size(); ++t) {
    Matrix head = id;
    for (std::size_t j = 0; j < t; ++j) head = (steps[j] * head).eval();
    Vector expanded = head * e0;
    for (std::size_t l = 0; l < t; ++l) {
      Matrix tail = id;
      for (std::size_t j = l + 1; j < t; ++j) tail = (steps[j] * tail).eval();
      const int p = pool_indices[l];
      expanded += tail * (cfg.gamma * vecs[p % n]) * noise[static_cast<std::size_t>(p)];
    }
    worst = std::max(worst, (xs[t] - cfg.x_star - expanded).norm());
  }
  return worst;
}

double phi(double gamma, double sigma, double mu) noexcept {
  return 1.0 - 2.0 * gamma * sigma + gamma * gamma * sigma * mu;
}

namespace {

// log(n (n-1) ... (n-k+1))
double log_falling(int n, int k) {
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += std::log(static_cast<double>(n - j));
  return s;
}

}  // namespace

double c_kl(int n, int k, int l) {
  if (l < 0 || k < l) throw DomainError("c_kl: need 0 <= l <= k");
  if (k > n) throw DomainError("c_kl: need k <= n");
  return std::exp(log_falling(n, l) + log_falling(n, k - l) - log_falling(n, k));
}

double c_kl_estimate(int n, int k, int l) {
  if (l < 0 || k < l) throw DomainError("c_kl_estimate: need 0 <= l <= k");
  if (k >= n) throw DomainError("c_kl_estimate: need k < n");
  return std::exp(static_cast<double>(l) * (k - l) / (n - k));
}

BoundTerms bound_terms(const VectorFamily& vecs, const IgmConfig& cfg, int k) {
  cfg.validate(vecs.n(), vecs.m());
  if (k < 1) throw DomainError("bound_terms: k must be >= 1");
  BoundTerms b;
  b.k = k;
  b.n = cfg.pool_size(vecs.n());
  b.phi = phi(cfg.gamma, vecs.sigma(), vecs.mu());
  if (!(b.phi > 0.0 && b.phi < 1.0)) {
    std::ostringstream msg;
    msg << "bound: phi = " << b.phi << " is outside (0, 1)";
    throw InfeasibleError(msg.str());
  }
  if (k >= b.n) {
    std::ostringstream msg;
    msg << "bound: phi exp(1/(n-k)) < 1 needs k < n (k = " << k << ", n = " << b.n << ")";
    throw InfeasibleError(msg.str());
  }
  const double inv = 1.0 / (b.n - k);
  b.growth = b.phi * std::exp(inv);
  if (!(b.growth < 1.0)) {
    std::ostringstream msg;
    msg << "bound: phi exp(1/(n-k)) = " << b.growth << " is not < 1";
    throw InfeasibleError(msg.str());
  }
  b.a = inv + std::log(b.phi);
  if (!(b.a < 0.0)) {
    std::ostringstream msg;
    msg << "bound: a = 1/(n-k) + ln phi = " << b.a << " is not < 0";
    throw InfeasibleError(msg.str());
  }
  double sup_sq = 0.0;
  const auto m = vecs.m();
  for (const auto& v : vecs.vectors()) {
    const Matrix step = Matrix::Identity(m, m) - cfg.gamma * v * v.adjoint();
    sup_sq = std::max(sup_sq, std::pow(linalg::spectral_norm(step).value, 2));
  }
  b.c1 = sup_sq / b.phi;
  b.c2 = (b.a * b.a - 2.0 * b.a + 2.0) / std::pow(-b.a, 3);
  b.eta = (cfg.x_0 - cfg.x_star).squaredNorm();
  b.contraction_term =
      std::pow(b.phi, k) * (1.0 + static_cast<double>(k) * (k - 1) * (1.0 + b.c1) / (2.0 * b.n)) * b.eta;
  b.noise_term = cfg.rho * cfg.rho * cfg.gamma * cfg.gamma * vecs.mu() *
                 (1.0 / (1.0 - b.growth) + b.c2 * b.growth + 1.0);
  b.value = b.contraction_term + b.noise_term;
  return b;
}

double bound_rhs(const VectorFamily& vecs, const IgmConfig& cfg, int k) {
  return bound_terms(vecs, cfg, k).value;
}

IgmStats monte_carlo_mse(const VectorFamily& vecs, const IgmConfig& cfg, unsigned workers) {
  cfg.validate(vecs.n(), vecs.m());
  const auto runs = parallel_map(static_cast<std::size_t>(cfg.trials), workers, [&](std::size_t r) {
    Rng rng = substream(cfg.seed, r);
    const auto xs = igm_run(vecs, cfg, rng);
    std::vector<double> err;
    err.reserve(xs.size());
    for (const auto& x : xs) err.push_back((x - cfg.x_star).squaredNorm());
    return err;
  });

  IgmStats s;
  s.trials = cfg.trials;
  const std::size_t steps = static_cast<std::size_t>(cfg.k) + 1;
  s.mean.assign(steps, 0.0);
  s.stderr_.assign(steps, 0.0);
  for (const auto& err : runs)
    for (std::size_t t = 0; t < steps; ++t) s.mean[t] += err[t];
  for (auto& v : s.mean) v /= cfg.trials;
  if (cfg.trials > 1) {
    for (const auto& err : runs)
      for (std::size_t t = 0; t < steps; ++t) s.stderr_[t] += (err[t] - s.mean[t]) * (err[t] - s.mean[t]);
    for (auto& v : s.stderr_) v = std::sqrt(v / (cfg.trials - 1.0) / cfg.trials);
  }

  const int pool = cfg.pool_size(vecs.n());
  s.phi = phi(cfg.gamma, vecs.sigma(), vecs.mu());
  s.eta = (cfg.x_0 - cfg.x_star).squaredNorm();
  s.below_cube_root = cfg.k < std::cbrt(static_cast<double>(pool));
  s.bound.assign(steps, std::nullopt);
  s.c2.assign(steps, std::nullopt);
  s.bound_note.assign(steps, "");
  s.bound_note[0] = "no bound at t = 0";
  for (std::size_t t = 1; t < steps; ++t) {
    try {
      const auto b = bound_terms(vecs, cfg, static_cast<int>(t));
      s.bound[t] = b.value;
      s.c2[t] = b.c2;
      s.c1 = b.c1;
    } catch (const InfeasibleError& e) {
      s.bound_note[t] = e.what();
    }
  }
  if (!vecs.isotropic())
    for (std::size_t t = 1; t < steps; ++t)
      if (s.bound[t]) {
        s.bound[t].reset();
        s.c2[t].reset();
        s.bound_note[t] = "bound: family is not isotropic";
      }
  return s;
}

bool within_envelope(const IgmStats& stats) {
  for (std::size_t t = 0; t < stats.mean.size(); ++t)
    if (stats.bound[t] && !(stats.mean[t] <= *stats.bound[t] + 3.0 * stats.stderr_[t])) return false;
  return true;
}

const char* to_string(OrbitVariant v) noexcept {
  return v == OrbitVariant::rank_one_frame ? "rank_one_frame" : "projector";
}

OrbitVariant orbit_variant_from_string(const std::string& name) {
  if (name == "rank_one_frame") return OrbitVariant::rank_one_frame;
  if (name == "projector") return OrbitVariant::projector;
  throw DomainError("unknown orbit variant \"" + name + "\"");
}

VectorFamily gen_group_orbit(int d, OrbitVariant variant, Rng& rng) {
  if (d < 2) throw DomainError("gen_group_orbit: need d >= 2");
  Vector h(d);
  for (int i = 0; i < d; ++i) h(i) = complex_normal(rng);
  h *= std::sqrt(static_cast<double>(d)) / h.norm();
  const double scale = variant == OrbitVariant::projector ? std::sqrt(static_cast<double>(d)) : 1.0;
  const double pi = std::acos(-1.0);

  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(d) * d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      // (X^p Z^q h)_j = omega^{q (j - p)} h_{j - p}
      Vector v(d);
      for (int j = 0; j < d; ++j) {
        const int src = ((j - p) % d + d) % d;
        v(j) = std::polar(scale, 2.0 * pi * ((q * src) % d) / d) * h(src);
      }
      out.push_back(std::move(v));
    }
  auto fam = VectorFamily::from_vectors(std::move(out));
  fam.label = "group_orbit d=" + std::to_string(d) + " " + to_string(variant);
  return fam;
}

const char* to_string(DesignKind k) noexcept {
  switch (k) {
    case DesignKind::simplex: return "simplex";
    case DesignKind::cross_polytope: return "cross_polytope";
    case DesignKind::icosahedron: return "icosahedron";
  }
  return "?";
}

DesignKind design_kind_from_string(const std::string& name) {
  for (DesignKind k : {DesignKind::simplex, DesignKind::cross_polytope, DesignKind::icosahedron})
    if (name == to_string(k)) return k;
  throw DomainError("unknown design \"" + name + "\"");
}

VectorFamily gen_spherical_design(DesignKind kind, int m) {
  std::vector<Vector> out;
  switch (kind) {
    case DesignKind::simplex: {
      if (m < 2) throw DomainError("gen_spherical_design: simplex needs m >= 2");
      // Centred basis vectors of R^{m+1} live in the hyperplane orthogonal to
      // the all-ones vector; a Householder reflection sends that normal to
      // e_{m+1}, so the first m coordinates give the simplex in R^m.
      const int big = m + 1;
      Eigen::VectorXd v = Eigen::VectorXd::Constant(big, 1.0 / std::sqrt(static_cast<double>(big)));
      v(m) -= 1.0;
      const Eigen::MatrixXd house = Eigen::MatrixXd::Identity(big, big) - 2.0 * v * v.transpose() / v.squaredNorm();
      for (int i = 0; i < big; ++i) {
        Eigen::VectorXd x = -Eigen::VectorXd::Constant(big, 1.0 / big);
        x(i) += 1.0;
        const Eigen::VectorXd y = (house * x).head(m);
        out.push_back((y / y.norm()).cast<Complex>());
      }
      break;
    }
    case DesignKind::cross_polytope: {
      if (m < 2) throw DomainError("gen_spherical_design: cross_polytope needs m >= 2");
      for (int i = 0; i < m; ++i)
        for (double sign : {1.0, -1.0}) {
          Vector e = Vector::Zero(m);
          e(i) = sign;
          out.push_back(std::move(e));
        }
      break;
    }
    case DesignKind::icosahedron: {
      const double g = (1.0 + std::sqrt(5.0)) / 2.0;
      for (int shift = 0; shift < 3; ++shift)
        for (double s1 : {1.0, -1.0})
          for (double s2 : {1.0, -1.0}) {
            const double base[3] = {0.0, s1, s2 * g};
            Vector x(3);
            for (int c = 0; c < 3; ++c) x((c + shift) % 3) = base[c];
            out.push_back(x / x.norm());
          }
      m = 3;
      break;
    }
  }
  auto fam = VectorFamily::from_vectors(std::move(out));
  fam.label = std::string(to_string(kind)) + " m=" + std::to_string(m);
  return fam;
}

}  // namespace agm::igm
