#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "agm/igm.hpp"
#include "agm/linalg.hpp"

using namespace agm;
using namespace agm::igm;

namespace {

Vector random_vector(int m, Rng& rng) { return complex_gaussian_matrix(m, 1, rng).col(0); }

VectorFamily random_family(int n, int m, Rng& rng) {
  std::vector<Vector> v;
  for (int i = 0; i < n; ++i) v.push_back(random_vector(m, rng));
  return VectorFamily::from_vectors(std::move(v));
}

IgmConfig basic_config(const VectorFamily& fam, Rng& rng) {
  IgmConfig cfg;
  cfg.gamma = 0.1;
  cfg.rho = 0.2;
  cfg.k = std::min(4, fam.n());
  cfg.trials = 50;
  cfg.x_star = random_vector(fam.m(), rng);
  cfg.x_0 = Vector::Zero(fam.m());
  return cfg;
}

double second_moment_residual(const VectorFamily& fam, double target) {
  Matrix s = Matrix::Zero(fam.m(), fam.m());
  for (const auto& v : fam.vectors()) s += v * v.adjoint();
  s /= fam.n();
  return (s - target * Matrix::Identity(fam.m(), fam.m())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("gamma = 0 keeps the starting point") {
  Rng rng(41);
  const auto fam = random_family(6, 3, rng);
  auto cfg = basic_config(fam, rng);
  cfg.gamma = 0.0;
  const auto xs = igm_run(fam, cfg, rng);
  for (const auto& x : xs) CHECK(x == cfg.x_0);
  const auto stats = monte_carlo_mse(fam, cfg);
  for (double v : stats.mean) CHECK(v == doctest::Approx(cfg.x_star.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("rho = 0 and x_0 = x_star is a fixed point") {
  Rng rng(42);
  const auto fam = random_family(6, 3, rng);
  auto cfg = basic_config(fam, rng);
  cfg.rho = 0.0;
  cfg.x_0 = cfg.x_star;
  for (const auto& x : igm_run(fam, cfg, rng)) CHECK((x - cfg.x_star).norm() < 1e-14);
}

TEST_CASE("scalar closed form") {
  const Vector a = Vector::Constant(1, Complex(std::sqrt(3.0), 0.0));
  const auto fam = VectorFamily::from_vectors({a});
  IgmConfig cfg;
  cfg.gamma = 0.2;
  cfg.rho = 0.0;
  cfg.k = 7;
  cfg.policy = Policy::with_replacement;
  cfg.trials = 5;
  cfg.x_star = Vector::Constant(1, 1.5);
  cfg.x_0 = Vector::Constant(1, 0.5);
  const auto stats = monte_carlo_mse(fam, cfg);
  for (int t = 0; t <= cfg.k; ++t)
    CHECK(std::abs(stats.mean[t] - std::pow(1.0 - 0.2 * 3.0, 2 * t)) <= 1e-12);
}

TEST_CASE("expansion identity on random configurations") {
  Rng rng(43);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 6, m = 1 + trial % 4;
    const auto fam = random_family(n, m, rng);
    auto cfg = basic_config(fam, rng);
    cfg.k = 1 + trial % std::min(8, n);
    cfg.gamma = 0.05 + 0.01 * (trial % 5);
    cfg.x_0 = random_vector(m, rng);
    const auto noise = draw_noise(fam, cfg, rng);
    const auto idx = draw_pool_indices(n, cfg, rng);
    worst = std::max(worst, error_expansion_check(fam, cfg, idx, noise));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("expansion identity edge cases") {
  Rng rng(44);
  const auto fam = random_family(4, 2, rng);
  auto cfg = basic_config(fam, rng);
  cfg.k = 1;
  CHECK(error_expansion_check(fam, cfg, {2}, draw_noise(fam, cfg, rng)) <= 1e-15);
  cfg.rho = 0.0;
  cfg.k = 4;
  CHECK(error_expansion_check(fam, cfg, {3, 1, 0, 2}, draw_noise(fam, cfg, rng)) <= 1e-10);
}

TEST_CASE("config validation") {
  Rng rng(45);
  const auto fam = random_family(4, 2, rng);
  auto cfg = basic_config(fam, rng);
  cfg.k = 5;
  CHECK_THROWS_WITH_AS(cfg.validate(4, 2), doctest::Contains("k <= pool size"), DomainError);
  cfg.policy = Policy::with_replacement;
  CHECK_NOTHROW(cfg.validate(4, 2));
  cfg.policy = Policy::block_repeat;
  cfg.mult = 2;
  CHECK_NOTHROW(cfg.validate(4, 2));
  cfg.x_0 = Vector::Zero(3);
  CHECK_THROWS_AS(cfg.validate(4, 2), DomainError);
  CHECK(policy_from_string("block_repeat") == Policy::block_repeat);
  CHECK_THROWS_AS(policy_from_string("shuffle"), DomainError);
}

TEST_CASE("without-replacement indices are distinct") {
  Rng rng(46);
  IgmConfig cfg;
  cfg.k = 7;
  for (int r = 0; r < 200; ++r) {
    const auto idx = draw_pool_indices(7, cfg, rng);
    CHECK(std::set<int>(idx.begin(), idx.end()).size() == 7);
  }
  cfg.policy = Policy::block_repeat;
  cfg.mult = 3;
  cfg.k = 15;
  for (int r = 0; r < 50; ++r) {
    const auto idx = draw_pool_indices(7, cfg, rng);
    CHECK(std::set<int>(idx.begin(), idx.end()).size() == 15);
    for (int p : idx) CHECK((p >= 0 && p < 21));
  }
}

TEST_CASE("without-replacement tuples are uniform (chi-square)") {
  Rng rng(47);
  IgmConfig cfg;
  cfg.k = 3;
  const int draws = 100000;
  std::map<std::vector<int>, int> counts;
  for (int r = 0; r < draws; ++r) ++counts[draw_pool_indices(5, cfg, rng)];
  REQUIRE(counts.size() == 60);
  const double expected = draws / 60.0;
  double stat = 0.0;
  for (const auto& [tuple, c] : counts) stat += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(59);
  CHECK(boost::math::cdf(boost::math::complement(dist, stat)) > 0.001);
}

TEST_CASE("noise is real for real data and independent per pool copy") {
  Rng rng(48);
  const auto design = gen_spherical_design(DesignKind::cross_polytope, 3);
  IgmConfig cfg;
  cfg.rho = 1.0;
  cfg.policy = Policy::block_repeat;
  cfg.mult = 2;
  cfg.x_star = Vector::Ones(3);
  cfg.x_0 = Vector::Zero(3);
  const auto w = draw_noise(design, cfg, rng);
  REQUIRE(w.size() == 12);
  for (const auto& z : w) CHECK(z.imag() == 0.0);
  CHECK(w[0] != w[6]);
}

TEST_CASE("phi") {
  CHECK(phi(0.0, 1.0, 3.0) == 1.0);
  CHECK(phi(0.1, 1.0, 4.0) == doctest::Approx(1.0 - 0.2 + 0.04));
  CHECK(phi(0.25, 1.0, 4.0) == doctest::Approx(0.75));
}

TEST_CASE("c_kl values, symmetry and estimate") {
  CHECK(c_kl(7, 3, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c_kl(4, 2, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(c_kl(3, 4, 1), DomainError);
  for (int n = 1; n <= 20; ++n)
    for (int k = 0; k <= n; ++k)
      for (int l = 0; l <= k; ++l) CHECK(c_kl(n, k, l) == doctest::Approx(c_kl(n, k, k - l)).epsilon(1e-12));
  for (int n = 2; n <= 30; ++n)
    for (int k = 1; k <= n / 2; ++k)
      for (int l = 0; l <= k; ++l) {
        const double c = c_kl(n, k, l);
        CHECK(c >= 1.0 - 1e-12);
        CHECK(c <= c_kl_estimate(n, k, l) * (1.0 + 1e-9));
      }
}

TEST_CASE("bound preconditions and trivial value") {
  Rng rng(49);
  const auto orbit = gen_group_orbit(4, OrbitVariant::rank_one_frame, rng);
  IgmConfig cfg;
  cfg.gamma = 0.1;
  cfg.rho = 0.0;
  cfg.k = 4;
  cfg.x_star = Vector::Ones(4);
  cfg.x_0 = cfg.x_star;
  CHECK(bound_rhs(orbit, cfg, 4) == 0.0);
  cfg.gamma = 0.6;  // beyond 2/d
  CHECK_THROWS_WITH_AS(bound_rhs(orbit, cfg, 4), doctest::Contains("outside (0, 1)"), InfeasibleError);
  cfg.gamma = 0.49;
  CHECK(phi(cfg.gamma, orbit.sigma(), orbit.mu()) < 1.0);
  CHECK_THROWS_WITH_AS(bound_rhs(orbit, cfg, 2), doctest::Contains("not < 1"), InfeasibleError);
  cfg.k = 16;
  CHECK_THROWS_WITH_AS(bound_rhs(orbit, cfg, 16), doctest::Contains("k < n"), InfeasibleError);
  CHECK_THROWS_WITH_AS(bound_rhs(orbit, cfg, 15), doctest::Contains("not < 1"), InfeasibleError);
  // phi e^{1/(n-k)} < 1 implies a < 0, so the last check cannot fire on its own.
  cfg.gamma = 0.25;
  const auto b = bound_terms(orbit, cfg, 3);
  CHECK(b.a < 0.0);
  CHECK(b.c2 == doctest::Approx((b.a * b.a - 2 * b.a + 2) / std::pow(-b.a, 3)));
  CHECK(b.c1 == doctest::Approx(1.0 / 0.75));
}

TEST_CASE("valid gamma domain of the orbit family is (0, 2/d)") {
  Rng rng(50);
  for (int d : {2, 4, 8}) {
    const auto orbit = gen_group_orbit(d, OrbitVariant::rank_one_frame, rng);
    for (double frac : {0.1, 0.5, 0.9, 1.1}) {
      const double g = frac * 2.0 / d;
      const double p = phi(g, orbit.sigma(), orbit.mu());
      CHECK((p > 0.0 && p < 1.0) == (frac < 1.0));
    }
  }
}

TEST_CASE("group orbit certificates") {
  Rng rng(51);
  for (int d = 2; d <= 9; ++d) {
    const auto fam = gen_group_orbit(d, OrbitVariant::rank_one_frame, rng);
    CHECK(fam.n() == d * d);
    CHECK(fam.isotropy_residual() <= 1e-10);
    CHECK(fam.sigma() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fam.mu() == doctest::Approx(d).epsilon(1e-12));
    CHECK(fam.trace_consistent());
    double mu = 0.0;
    for (const auto& v : fam.vectors()) mu = std::max(mu, v.squaredNorm());
    CHECK(mu == fam.mu());
    const auto proj = gen_group_orbit(d, OrbitVariant::projector, rng);
    CHECK(proj.sigma() == doctest::Approx(d).epsilon(1e-12));
    CHECK(proj.mu() == doctest::Approx(d * d).epsilon(1e-12));
    CHECK(proj.isotropy_residual() <= 1e-10 * d);
  }
  const auto two = gen_group_orbit(2, OrbitVariant::rank_one_frame, rng);
  CHECK(second_moment_residual(two, 1.0) <= 1e-12);
  CHECK_THROWS_AS(gen_group_orbit(1, OrbitVariant::projector, rng), DomainError);
}

TEST_CASE("spherical designs") {
  const auto cross = gen_spherical_design(DesignKind::cross_polytope, 3);
  CHECK(cross.n() == 6);
  CHECK(cross.sigma() == doctest::Approx(1.0 / 3.0));
  CHECK(second_moment_residual(cross, 1.0 / 3.0) <= 1e-12);

  const auto tri = gen_spherical_design(DesignKind::simplex, 2);
  CHECK(tri.n() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(tri[i].norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tri[i].dot(tri[(i + 1) % 3]).real() == doctest::Approx(-0.5).epsilon(1e-14));
  }
  CHECK(second_moment_residual(tri, 0.5) <= 1e-12);

  const auto ico = gen_spherical_design(DesignKind::icosahedron);
  CHECK(ico.n() == 12);
  CHECK(second_moment_residual(ico, 1.0 / 3.0) <= 1e-12);

  for (int m = 2; m <= 8; ++m) {
    const auto s = gen_spherical_design(DesignKind::simplex, m);
    CHECK(s.n() == m + 1);
    CHECK(second_moment_residual(s, 1.0 / m) <= 1e-12);
    CHECK(s.mu() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.is_real());
  }
  CHECK_THROWS_AS(gen_spherical_design(DesignKind::simplex, 1), DomainError);
  CHECK(design_kind_from_string("icosahedron") == DesignKind::icosahedron);
}

TEST_CASE("monte carlo is independent of the worker count") {
  Rng rng(52);
  const auto fam = gen_group_orbit(3, OrbitVariant::rank_one_frame, rng);
  auto cfg = basic_config(fam, rng);
  cfg.trials = 64;
  const auto a = monte_carlo_mse(fam, cfg, 1);
  const auto b = monte_carlo_mse(fam, cfg, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("empirical error stays inside the bound for a design") {
  Rng rng(53);
  const auto fam = gen_spherical_design(DesignKind::icosahedron);
  IgmConfig cfg;
  cfg.gamma = 1.0;
  cfg.rho = 0.1;
  cfg.k = 6;
  cfg.trials = 2000;
  cfg.x_star = Vector::Ones(3);
  cfg.x_0 = Vector::Zero(3);
  const auto stats = monte_carlo_mse(fam, cfg);
  for (int t = 1; t <= 6; ++t) CHECK(stats.bound[t].has_value());
  CHECK(within_envelope(stats));
  CHECK_FALSE(stats.bound[0].has_value());
}

TEST_CASE("non-isotropic families get no bound") {
  Rng rng(54);
  const auto fam = random_family(10, 2, rng);
  CHECK_FALSE(fam.isotropic());
  auto cfg = basic_config(fam, rng);
  cfg.gamma = 0.01;
  const auto stats = monte_carlo_mse(fam, cfg);
  for (const auto& b : stats.bound) CHECK_FALSE(b.has_value());
}
