// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include "agm/cli.hpp"
#include "agm/freeprobe.hpp"
#include "agm/igm.hpp"
#include "agm/linalg.hpp"
#include "agm/parallel.hpp"
#include "agm/partitions.hpp"
#include "agm/random.hpp"
#include "agm/symsum.hpp"

using namespace agm;
namespace fs = std::filesystem;

namespace {

const unsigned kWorkers = std::max(1u, std::thread::hardware_concurrency());

struct Verdict {
  bool pass = false;
  std::string detail;
};

double opnorm(const Matrix& m) { return linalg::spectral_norm(m).value; }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

symsum::OperatorFamily raw_family(int n, int m, Rng& rng) {
  std::vector<Matrix> ops;
  for (int j = 0; j < n; ++j) ops.push_back(complex_gaussian_matrix(m, m, rng));
  return symsum::OperatorFamily(std::move(ops));
}

Verdict enumeration_oracle() {
  double worst = 0.0;
  int cases = 0;
  for (int n = 1; n <= 5; ++n)
    for (int m = 1; m <= 3; ++m)
      for (int d = 1; d <= 3; ++d)
        for (int rep = 0; rep < 4; ++rep) {
          Rng rng = substream(101, static_cast<std::uint64_t>(((n * 4 + m) * 4 + d) * 4 + rep));
          const auto fam = raw_family(n, m, rng);
          Matrix total = Matrix::Zero(m, m);
          for (const auto& sigma : partitions::enumerate_partitions(d)) total += symsum::partition_sum(fam, sigma);
          const Matrix wr = std::pow(static_cast<double>(n), d) * symsum::e_wr(fam, d);
          worst = std::max(worst, opnorm(wr - total) / std::max(1.0, opnorm(wr)));
          if (d <= n) {
            const Matrix wo = static_cast<double>(partitions::falling_factorial(n, d)) * symsum::e_wo(fam, d);
            const Matrix finest = symsum::partition_sum(fam, partitions::Partition::finest(d));
            worst = std::max(worst, opnorm(wo - finest) / std::max(1.0, opnorm(wo)));
          }
          ++cases;
        }
  return {worst <= 1e-10, fmt("%.0f families, max relative residual %.3g", cases, worst)};
}

struct SweepTally {
  long bound_violations = 0, sandwich_violations = 0, checks = 0;
  double worst_bound_ratio = 0.0;
};

SweepTally theorem_sweep() {
  struct Row {
    int bound_fail = 0, sandwich_fail = 0;
    double ratio = 0.0;
  };
  const auto rows = parallel_map(1000, kWorkers, [](std::size_t f) {
    Rng rng = substream(202, f);
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const int m = std::uniform_int_distribution<int>(1, 4)(rng);
    const int d = std::uniform_int_distribution<int>(1, std::min(n, 4))(rng);
    std::vector<Matrix> ops;
    for (int j = 0; j < n; ++j) ops.push_back(complex_gaussian_matrix(m, m, rng));
    Row r;
    for (auto side : {symsum::Side::left, symsum::Side::right}) {
      const auto fam = symsum::normalize_family(ops, side);
      const auto b = symsum::check_theorem_bound(fam, d, side, false);
      const auto s = symsum::check_sandwich(fam, d, side);
      r.bound_fail += !b.passed;
      r.sandwich_fail += !s.passed;
      if (b.rhs > 0) r.ratio = std::max(r.ratio, b.lhs / b.rhs);
    }
    return r;
  });
  SweepTally t;
  for (const auto& r : rows) {
    t.bound_violations += r.bound_fail;
    t.sandwich_violations += r.sandwich_fail;
    t.worst_bound_ratio = std::max(t.worst_bound_ratio, r.ratio);
    t.checks += 2;
  }
  return t;
}

Verdict folding() {
  double worst_residual = 0.0, worst_ratio = 0.0, worst_telescope = 0.0;
  long partitions_checked = 0;
  bool ok = true;
  for (int f = 0; f < 100; ++f) {
    Rng rng = substream(303, static_cast<std::uint64_t>(f));
    const int n = std::uniform_int_distribution<int>(2, 5)(rng);
    const int m = std::uniform_int_distribution<int>(1, 3)(rng);
    const int d = std::uniform_int_distribution<int>(2, 5)(rng);
    std::vector<Matrix> ops;
    for (int j = 0; j < n; ++j) ops.push_back(complex_gaussian_matrix(m, m, rng));
    worst_telescope = std::max(worst_telescope, symsum::folding_residual(ops));
    const auto fam = symsum::normalize_family(std::move(ops));
    for (const auto& sigma : partitions::enumerate_partitions(d)) {
      if (sigma.is_singleton(0)) continue;
      try {
        const auto fs_ = symsum::folded_sum(fam, sigma);
        worst_residual = std::max(worst_residual, fs_.residual / std::max(1.0, opnorm(fs_.value)));
        const double ratio = opnorm(fs_.value) / symsum::folded_sum_bound(fam, sigma);
        worst_ratio = std::max(worst_ratio, ratio);
        ok = ok && symsum::within_slack(opnorm(fs_.value), symsum::folded_sum_bound(fam, sigma));
      } catch (const std::logic_error&) {
        ok = false;
      }
      ++partitions_checked;
    }
  }
  ok = ok && worst_residual <= 1e-10 && worst_telescope <= 1e-10;
  return {ok, fmt("%.0f partitions, folding residual %.3g, telescoping residual %.3g, max norm/bound %.3f",
                  partitions_checked, worst_residual, worst_telescope, worst_ratio)};
}

Verdict difference_identity() {
  const int dims[] = {8, 16, 64};
  const auto residuals = parallel_map(100, kWorkers, [&](std::size_t i) {
    Rng rng = substream(404, i);
    const auto fam = freeprobe::make_free_family(dims[i % 3], 3 + static_cast<int>((i / 3) % 2), 1.2, rng);
    return freeprobe::difference_identity_residual(fam);
  });
  const double worst = *std::max_element(residuals.begin(), residuals.end());
  return {worst <= 1e-9, fmt("100 draws, max residual %.3g", worst)};
}

Verdict order_violation() {
  const auto rows = freeprobe::counterexample_sweep(256, 3, 1.2, 50, kDefaultSeed, kWorkers);
  int negative = 0;
  double max_gap = 0.0, worst_lambda = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    negative += r.lambda_min < 0.0;
    max_gap = std::max(max_gap, r.trace_gap);
    worst_lambda = std::max(worst_lambda, r.lambda_min);
  }
  const bool ok = negative >= 48 && max_gap <= 1e-3;
  return {ok, fmt("negative lambda_min in %.0f/50 seeds (largest %.4f), max |trace gap| %.3g", negative,
                  worst_lambda, max_gap)};
}

Verdict expansion_identity() {
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    Rng rng = substream(505, static_cast<std::uint64_t>(c));
    const int m = std::uniform_int_distribution<int>(1, 4)(rng);
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    std::vector<Vector> vs;
    const bool real = c % 2 == 0;
    for (int i = 0; i < n; ++i) {
      Vector v = complex_gaussian_matrix(m, 1, rng).col(0);
      if (real) v = v.real().cast<Complex>();
      vs.push_back(v);
    }
    const auto fam = igm::VectorFamily::from_vectors(std::move(vs));
    igm::IgmConfig cfg;
    cfg.gamma = std::uniform_real_distribution<double>(0.0, 1.0)(rng) / fam.mu();
    cfg.rho = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cfg.policy = static_cast<igm::Policy>(c % 3);
    cfg.mult = cfg.policy == igm::Policy::block_repeat ? 3 : 1;
    cfg.k = std::uniform_int_distribution<int>(1, std::min(8, cfg.pool_size(n)))(rng);
    if (cfg.policy == igm::Policy::with_replacement) cfg.k = std::uniform_int_distribution<int>(1, 8)(rng);
    cfg.x_star = complex_gaussian_matrix(m, 1, rng).col(0);
    cfg.x_0 = complex_gaussian_matrix(m, 1, rng).col(0);
    if (real) {
      cfg.x_star = cfg.x_star.real().cast<Complex>();
      cfg.x_0 = cfg.x_0.real().cast<Complex>();
    }
    cfg.validate(fam.n(), fam.m());
    const auto noise = igm::draw_noise(fam, cfg, rng);
    const auto idx = igm::draw_pool_indices(fam.n(), cfg, rng);
    worst = std::max(worst, igm::error_expansion_check(fam, cfg, idx, noise));
  }
  return {worst <= 1e-10, fmt("100 configurations, max residual %.3g", worst)};
}

Verdict bound_envelope() {
  struct Case {
    igm::VectorFamily fam;
    double gamma;
    int k;
  };
  std::vector<Case> cases;
  for (int d : {2, 4, 8}) {
    Rng rng = substream(606, static_cast<std::uint64_t>(d));
    cases.push_back({igm::gen_group_orbit(d, igm::OrbitVariant::rank_one_frame, rng), 1.0 / d, d * d / 2});
  }
  cases.push_back({igm::gen_spherical_design(igm::DesignKind::cross_polytope, 3), 1.0, 3});
  // k = 2 already breaks phi e^{1/(n-k)} < 1 for the 4-simplex at gamma = 1.
  cases.push_back({igm::gen_spherical_design(igm::DesignKind::simplex, 4), 1.0, 1});
  cases.push_back({igm::gen_spherical_design(igm::DesignKind::icosahedron), 1.0, 6});

  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    igm::IgmConfig cfg;
    cfg.gamma = c.gamma;
    cfg.rho = 0.1;
    cfg.k = c.k;
    cfg.trials = 10000;
    cfg.seed = 700 + i;
    Rng rng = substream(cfg.seed, 1u << 20);
    cfg.x_star = complex_gaussian_matrix(c.fam.m(), 1, rng).col(0);
    if (c.fam.is_real()) cfg.x_star = cfg.x_star.real().cast<Complex>();
    cfg.x_0 = Vector::Zero(c.fam.m());
    const auto start = std::chrono::steady_clock::now();
    const auto stats = igm::monte_carlo_mse(c.fam, cfg, kWorkers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool all_bounds = true;
    double worst = 0.0;  // largest (mean - 3 se) / bound
    for (int t = 1; t <= cfg.k; ++t) {
      if (!stats.bound[t]) {
        all_bounds = false;
        continue;
      }
      worst = std::max(worst, (stats.mean[t] - 3.0 * stats.stderr_[t]) / *stats.bound[t]);
    }
    const bool pass = all_bounds && igm::within_envelope(stats) && secs <= 600.0;
    ok = ok && pass;
    detail << (i ? "; " : "") << c.fam.label << " k=" << cfg.k << (pass ? "" : " FAILED") << " max ratio "
           << std::setprecision(3) << worst;
  }
  return {ok, detail.str()};
}

Verdict scalar_closed_form() {
  double worst = 0.0;
  const double mu = 1.5, gamma = 0.3;
  for (auto policy : {igm::Policy::without_replacement, igm::Policy::with_replacement, igm::Policy::block_repeat}) {
    std::vector<Vector> vs;
    for (int i = 0; i < 6; ++i) {
      Vector v(1);
      v(0) = std::polar(std::sqrt(mu), 0.7 * i);
      vs.push_back(v);
    }
    const auto fam = igm::VectorFamily::from_vectors(std::move(vs));
    igm::IgmConfig cfg;
    cfg.gamma = gamma;
    cfg.rho = 0.0;
    cfg.k = 6;
    cfg.policy = policy;
    cfg.mult = 2;
    cfg.trials = 20;
    cfg.x_star = Vector::Constant(1, Complex(1.5, -0.5));
    cfg.x_0 = Vector::Constant(1, Complex(-0.5, 0.25));
    const double eta = (cfg.x_0 - cfg.x_star).squaredNorm();
    const auto stats = igm::monte_carlo_mse(fam, cfg);
    for (int t = 0; t <= cfg.k; ++t)
      worst = std::max(worst, std::abs(stats.mean[t] - std::pow(1.0 - gamma * mu, 2 * t) * eta));
  }
  return {worst <= 1e-12, fmt("3 policies, k <= 6, max deviation %.3g", worst)};
}

Verdict isotropy_certificates() {
  double worst = 0.0;
  int families = 0;
  auto take = [&](const igm::VectorFamily& f) {
    worst = std::max(worst, f.isotropy_residual());
    ++families;
  };
  for (int m = 2; m <= 8; ++m) {
    take(igm::gen_spherical_design(igm::DesignKind::simplex, m));
    take(igm::gen_spherical_design(igm::DesignKind::cross_polytope, m));
  }
  take(igm::gen_spherical_design(igm::DesignKind::icosahedron));
  for (int d = 2; d <= 12; ++d)
    for (auto v : {igm::OrbitVariant::rank_one_frame, igm::OrbitVariant::projector}) {
      Rng rng = substream(808, static_cast<std::uint64_t>(d));
      take(igm::gen_group_orbit(d, v, rng));
    }
  return {worst <= 1e-10, fmt("%.0f families, max second-moment residual %.3g", families, worst)};
}

Verdict deviation_scaling() {
  const auto sampler = symsum::perturbed_isometry_sampler(2, 0.1);
  std::vector<double> ds, devs;
  std::ostringstream pts;
  for (int d = 2; d <= 5; ++d) {
    const auto r = symsum::deviation_experiment(sampler, 32, d, 2, 500, kDefaultSeed, kWorkers);
    ds.push_back(d);
    devs.push_back(r.delta_wo);
    pts << " d=" << d << ":" << std::setprecision(4) << r.delta_wo;
  }
  const auto fit = symsum::fit_power_law(ds, devs);
  return {fit.exponent <= 1.3, fmt("fitted exponent %.3f;", fit.exponent) + pts.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "agmlab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::vector<std::string>> runs{
      {"verify-bounds", "--families", "20", "--d", "4", "--n", "6"},
      {"sandwich", "--families", "20", "--d", "4", "--side", "right"},
      {"deviation", "--trials", "60", "--d", "2,3,4", "--n", "16"},
      {"counterexample", "--dim", "16", "--seeds", "6"},
      {"igm", "--compare", "--config-json",
       R"({"gamma":0.25,"rho":0.1,"k":8,"trials":1000,"seed":11,"generator":{"kind":"group_orbit","d":4}})"},
      {"designs"},
      {"sweep", "--families", "200"},
  };
  int identical = 0;
  std::string failed;
  for (const auto& base : runs) {
    std::string reference;
    bool same = true;
    for (const char* workers : {"1", "2", "5"}) {
      auto args = base;
      const std::string out = (dir / (base[0] + "_" + workers + ".csv")).string();
      args.insert(args.end(), {"--workers", workers, "--out", out});
      std::ostringstream o, e;
      if (cli::run(args, o, e) != cli::kExitOk) same = false;
      const std::string text = slurp(out);
      if (reference.empty()) reference = text;
      else same = same && text == reference;
    }
    std::ostringstream o, e;
    const std::string replayed = (dir / (base[0] + "_replay.csv")).string();
    same = same && cli::run({"replay", (dir / (base[0] + "_5.csv.manifest.json")).string(), "--out", replayed,
                             "--manifest", replayed + ".json"},
                            o, e) == cli::kExitOk;
    same = same && slurp(replayed) == reference && !reference.empty();
    if (same) ++identical;
    else failed += " " + base[0];
  }
  fs::remove_all(dir);
  return {identical == static_cast<int>(runs.size()),
          fmt("%.0f/%.0f subcommands byte-identical across workers 1, 2, 5 and on replay", identical,
              static_cast<double>(runs.size())) + failed};
}

}  // namespace

int main() {
  int failures = 0;
  // limit: wall-clock budget in seconds, part of the criterion
  auto report = [&](int id, const char* name, const std::function<Verdict()>& fn, double limit) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && secs <= limit;
    failures += !pass;
    std::printf("%s %2d %s: %s [%.1f s of %.0f s]\n", pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs,
                limit);
    std::fflush(stdout);
    return secs;
  };

  std::printf("acceptance run with %u worker(s)\n", kWorkers);
  report(1, "enumeration oracle", enumeration_oracle, 10);

  SweepTally sweep;
  double sweep_secs = 0.0;
  {
    const auto start = std::chrono::steady_clock::now();
    sweep = theorem_sweep();
    sweep_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  report(2, "norm bound sweep", [&] {
    return Verdict{sweep.bound_violations == 0 && sweep_secs <= 120.0,
                   fmt("%.0f violations in %.0f checks, max lhs/rhs %.3f, sweep %.1f s", sweep.bound_violations,
                       sweep.checks, sweep.worst_bound_ratio, sweep_secs)};
  }, 120);
  report(3, "sandwich sweep", [&] {
    return Verdict{sweep.sandwich_violations == 0,
                   fmt("%.0f violations in %.0f checks", sweep.sandwich_violations, sweep.checks)};
  }, 120);
  report(4, "folding identity and bound", folding, 600);
  report(5, "difference identity", difference_identity, 60);
  report(6, "order violation at dim 256", order_violation, 300);
  report(7, "IGM expansion identity", expansion_identity, 600);
  report(8, "IGM bound envelope", bound_envelope, 3600);
  report(9, "scalar closed form", scalar_closed_form, 600);
  report(10, "isotropy certificates", isotropy_certificates, 600);
  report(11, "deviation scaling", deviation_scaling, 600);
  report(12, "determinism", determinism, 600);
  std::printf("%s: %d of 12 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
