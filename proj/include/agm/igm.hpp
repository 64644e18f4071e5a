#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agm/random.hpp"
#include "agm/types.hpp"

namespace agm::igm {

/// Default certificate tolerance for (1/n) sum a a* = sigma I.
inline constexpr double kIsotropyTol = 1e-8;

/// n vectors a_i in C^m with their isotropy data.
///
/// sigma is read off as tr((1/n) sum a a*) / m, so the residual
/// ||(1/n) sum a a* - sigma I|| measures how far the family is from isotropic.
class VectorFamily {
 public:
  static VectorFamily from_vectors(std::vector<Vector> vectors, double tol = kIsotropyTol);

  int n() const noexcept { return static_cast<int>(vectors_.size()); }
  int m() const noexcept { return m_; }
  const std::vector<Vector>& vectors() const noexcept { return vectors_; }
  const Vector& operator[](int i) const { return vectors_.at(static_cast<std::size_t>(i)); }

  double sigma() const noexcept { return sigma_; }
  /// max_i ||a_i||^2.
  double mu() const noexcept { return mu_; }
  double isotropy_residual() const noexcept { return residual_; }
  bool isotropic() const noexcept { return isotropic_; }
  /// All entries have zero imaginary part.
  bool is_real() const noexcept { return real_; }
  /// m sigma = mean ||a_i||^2 <= mu; false would mean broken bookkeeping.
  bool trace_consistent() const noexcept { return m_ * sigma_ <= mu_ * (1.0 + 1e-12); }

  /// Free-form provenance ("group_orbit d=4 rank_one_frame", ...).
  std::string label;

 private:
  std::vector<Vector> vectors_;
  int m_ = 0;
  double sigma_ = 0.0;
  double mu_ = 0.0;
  double residual_ = 0.0;
  bool isotropic_ = false;
  bool real_ = true;
};

enum class Policy { with_replacement, without_replacement, block_repeat };

const char* to_string(Policy policy) noexcept;
Policy policy_from_string(const std::string& name);

struct IgmConfig {
  double gamma = 0.1;
  double rho = 0.0;
  int k = 1;
  Policy policy = Policy::without_replacement;
  /// Copies of each vector in the sampling pool (block_repeat only).
  int mult = 1;
  int trials = 100;
  std::uint64_t seed = kDefaultSeed;
  Vector x_star;
  Vector x_0;

  /// Checks the invariants against a family of n vectors in C^m; throws
  /// DomainError naming the violated one.
  void validate(int n, int m) const;
  /// Number of entries in the sampling pool: n, or n * mult for block_repeat.
  int pool_size(int n) const noexcept { return policy == Policy::block_repeat ? n * mult : n; }
};

/// Pool positions visited by one run. Pool position p refers to vector p % n.
/// without_replacement / block_repeat: first k entries of a Fisher-Yates
/// shuffle of the pool; with_replacement: k independent uniform draws.
std::vector<int> draw_pool_indices(int n, const IgmConfig& cfg, Rng& rng);

/// One noise value per pool position, real N(0, rho^2) for real families and
/// circular complex with E|w|^2 = rho^2 otherwise.
std::vector<Complex> draw_noise(const VectorFamily& vecs, const IgmConfig& cfg, Rng& rng);

/// x_0, x_1, ..., x_k for the given visit order and noise,
/// x_t = x_{t-1} - gamma a (a* x_{t-1} - y) with y = a* x_star + w.
std::vector<Vector> run_with(const VectorFamily& vecs, const IgmConfig& cfg,
                             const std::vector<int>& pool_indices, const std::vector<Complex>& noise);

/// Draws noise, then the visit order, from `rng` and runs.
std::vector<Vector> igm_run(const VectorFamily& vecs, const IgmConfig& cfg, Rng& rng);

/// max over steps t of || (x_t - x_star) - expanded_t || where expanded_t is
///   prod_{j<=t} (I - gamma a a*) (x_0 - x_star)
///     + sum_{l<=t} [prod_{t>=j>l} (I - gamma a a*)] gamma a_{i_l} w_{i_l}
/// built from explicit m x m matrices.
double error_expansion_check(const VectorFamily& vecs, const IgmConfig& cfg,
                             const std::vector<int>& pool_indices, const std::vector<Complex>& noise);

/// 1 - 2 gamma sigma + gamma^2 sigma mu.
double phi(double gamma, double sigma, double mu) noexcept;

/// (n..n-l+1)(n..n-(k-l)+1) / (n..n-k+1), evaluated in log space.
/// Needs 0 <= l <= k <= n.
double c_kl(int n, int k, int l);
/// exp(l (k - l) / (n - k)); needs k < n.
double c_kl_estimate(int n, int k, int l);

struct BoundTerms {
  int k = 0;
  int n = 0;       // pool size
  double phi = 0.0;
  double c1 = 0.0;  // sup ||I - gamma a a*||^2 / phi
  double a = 0.0;   // 1/(n-k) + ln phi
  double c2 = 0.0;  // (a^2 - 2a + 2) / (-a)^3
  double growth = 0.0;  // phi exp(1/(n-k))
  double eta = 0.0;     // ||x_0 - x_star||^2
  double contraction_term = 0.0;
  double noise_term = 0.0;
  double value = 0.0;
};

/// The k-step estimate
///   phi^k (1 + k(k-1)(1+C1)/(2n)) eta
///     + rho^2 gamma^2 mu (1/(1 - phi e^{1/(n-k)}) + C2 phi e^{1/(n-k)} + 1)
/// with n the pool size. Throws InfeasibleError naming the failed
/// precondition: phi in (0,1), phi e^{1/(n-k)} < 1 (needs k < n), a < 0.
BoundTerms bound_terms(const VectorFamily& vecs, const IgmConfig& cfg, int k);
double bound_rhs(const VectorFamily& vecs, const IgmConfig& cfg, int k);

struct IgmStats {
  /// Index t = 0..k holds the mean (and standard error) of ||x_t - x_star||^2.
  std::vector<double> mean;
  std::vector<double> stderr_;
  /// bound[t] set where the preconditions hold (t >= 1).
  std::vector<std::optional<double>> bound;
  std::vector<std::optional<double>> c2;
  /// Why bound[t] is missing, empty when present.
  std::vector<std::string> bound_note;
  double phi = 0.0;
  double c1 = 0.0;
  double eta = 0.0;
  /// k < pool^{1/3}, the regime where the contraction term stays small.
  bool below_cube_root = false;
  int trials = 0;
};

/// Averages ||x_t - x_star||^2 over cfg.trials runs; trial r uses
/// substream(cfg.seed, r), results are reduced in trial order.
IgmStats monte_carlo_mse(const VectorFamily& vecs, const IgmConfig& cfg, unsigned workers = 1);

/// True iff mean <= bound + 3 stderr at every t with a bound.
bool within_envelope(const IgmStats& stats);

enum class OrbitVariant { rank_one_frame, projector };
const char* to_string(OrbitVariant v) noexcept;
OrbitVariant orbit_variant_from_string(const std::string& name);

/// Heisenberg-Weyl orbit {X^p Z^q h : 0 <= p, q < d} of a random fiducial h
/// with ||h||^2 = d: n = d^2, sigma = 1, mu = d. The projector variant scales
/// every vector by sqrt(d), giving sigma = d, mu = d^2.
VectorFamily gen_group_orbit(int d, OrbitVariant variant, Rng& rng);

enum class DesignKind { simplex, cross_polytope, icosahedron };
const char* to_string(DesignKind k) noexcept;
DesignKind design_kind_from_string(const std::string& name);

/// Unit-vector 2-designs: regular simplex (m+1 points in R^m), cross-polytope
/// (+-e_i, 2m points) and the icosahedron (12 points, m ignored, R^3).
/// sigma = 1/m, mu = 1.
VectorFamily gen_spherical_design(DesignKind kind, int m = 3);

}  // namespace agm::igm
