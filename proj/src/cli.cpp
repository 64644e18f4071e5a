#include "agm/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "agm/freeprobe.hpp"
#include "agm/igm.hpp"
#include "agm/parallel.hpp"
#include "agm/symsum.hpp"
#include "agm/symsum_io.hpp"

#ifndef AGM_VERSION
#define AGM_VERSION "0.0.0"
#endif

namespace agm::cli {

namespace {

using nlohmann::json;

struct Common {
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::string manifest;
  unsigned workers = 1;
  std::string format = "csv";
};

struct Outcome {
  Table table;
  json summary = json::object();
  int exit_code = kExitOk;
};

/// A subcommand: registers its options, then runs with them and reports the
/// resolved parameter set for the manifest.
struct Command {
  CLI::App* app = nullptr;
  Common common;
  std::function<json()> parameters;
  std::function<Outcome(Common&, std::ostream&)> execute;
};

void add_common(Command& cmd) {
  auto* app = cmd.app;
  app->add_option("--seed", cmd.common.seed, "Base seed")->capture_default_str();
  app->add_option("--out", cmd.common.out, "Output file, '-' for stdout (default <subcommand>.<format>)");
  app->add_option("--manifest", cmd.common.manifest, "Manifest path (default <out>.manifest.json)");
  app->add_option("--workers", cmd.common.workers, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
  app->add_option("--format", cmd.common.format, "Output format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DomainError("cannot write " + path);
  os << text;
}

symsum::Side parse_side(const std::string& s) {
  if (s == "left") return symsum::Side::left;
  if (s == "right") return symsum::Side::right;
  throw DomainError("side must be left or right");
}

// ---------------------------------------------------------------------------
// verify-bounds and sandwich

struct FamilyParams {
  int n = 4, m = 2, d = 3, families = 10;
  std::string side = "left";
  std::string preset = "random";
  std::string family_file;
  std::string family_json;
  bool detail = false;
};

void add_family_options(CLI::App* app, FamilyParams& p) {
  app->add_option("--n", p.n, "Operators per family")->capture_default_str();
  app->add_option("--m", p.m, "Matrix dimension")->capture_default_str();
  app->add_option("--d", p.d, "Largest d (every 1..d is checked)")->capture_default_str();
  app->add_option("--families", p.families, "Number of families")->capture_default_str();
  app->add_option("--side", p.side, "Normalisation side")->capture_default_str()->check(CLI::IsMember({"left", "right"}));
  app->add_option("--preset", p.preset, "Family generator")->capture_default_str()->check(CLI::IsMember({"random", "unitary"}));
  app->add_option("--family", p.family_file, "JSON family file (overrides the preset)");
  app->add_option("--family-json", p.family_json, "Inline JSON family")->group("");
}

json family_parameters(const FamilyParams& p) {
  json j{{"n", p.n}, {"m", p.m}, {"d", p.d}, {"families", p.families}, {"side", p.side}, {"preset", p.preset}};
  if (!p.family_json.empty()) j["family-json"] = p.family_json;
  return j;
}

std::vector<symsum::OperatorFamily> build_families(FamilyParams& p, const Common& c) {
  const auto side = parse_side(p.side);
  if (!p.family_file.empty()) p.family_json = json::parse(read_file(p.family_file)).dump();
  if (!p.family_json.empty()) {
    auto fam = symsum::family_from_json(json::parse(p.family_json));
    p.n = fam.n();
    p.m = fam.m();
    p.families = 1;
    if (!fam.normalized(side)) {
      std::vector<Matrix> ops = fam.ops();
      fam = symsum::normalize_family(std::move(ops), side);
    }
    return {fam};
  }
  if (p.n < 1 || p.m < 1 || p.families < 1) throw DomainError("need n, m, families >= 1");
  if (p.n > symsum::kMaxEnumerationN) throw InfeasibleError("n exceeds the enumeration guard");
  std::vector<symsum::OperatorFamily> out;
  for (int f = 0; f < p.families; ++f) {
    Rng rng = substream(c.seed, static_cast<std::uint64_t>(f));
    out.push_back(p.preset == "unitary" ? symsum::unitary_family(p.n, p.m, rng)
                                         : symsum::random_normalized_family(p.n, p.m, rng, side));
  }
  return out;
}

void check_d(const FamilyParams& p) {
  if (p.d < 1) throw DomainError("d must be >= 1");
  if (p.d > symsum::kMaxEnumerationD) throw InfeasibleError("d exceeds the enumeration guard");
}

Outcome run_verify_bounds(FamilyParams& p, const Common& c) {
  check_d(p);
  const auto fams = build_families(p, c);
  const auto side = parse_side(p.side);
  const int dmax = std::min(p.d, p.n);
  const auto reports = parallel_map(fams.size(), c.workers, [&](std::size_t f) {
    std::vector<symsum::SymReport> rs;
    for (int d = 1; d <= dmax; ++d) rs.push_back(symsum::check_theorem_bound(fams[f], d, side, p.detail));
    return rs;
  });
  Outcome o;
  if (p.detail)
    o.table.columns = {"family", "d", "sigma", "blocks", "measured", "lemma_bound", "single_block_alt"};
  else
    o.table.columns = {"family", "n", "m", "d", "side", "C", "lhs", "rhs", "passed"};
  long long failures = 0;
  for (std::size_t f = 0; f < fams.size(); ++f)
    for (const auto& r : reports[f]) {
      if (!r.passed) ++failures;
      if (!p.detail) {
        o.table.add({static_cast<long long>(f), static_cast<long long>(fams[f].n()),
                     static_cast<long long>(fams[f].m()), static_cast<long long>(r.d), p.side,
                     fams[f].sup_norm_sq(), r.lhs, r.rhs, r.passed});
        continue;
      }
      for (const auto& row : r.detail) {
        Cell alt;
        if (row.single_block_alt) alt = *row.single_block_alt;
        o.table.add({static_cast<long long>(f), static_cast<long long>(r.d), row.sigma.to_string(),
                     static_cast<long long>(row.sigma.block_count()), row.measured, row.lemma_bound, alt});
      }
    }
  o.summary = {{"checks", static_cast<long long>(fams.size()) * dmax}, {"failures", failures}};
  o.exit_code = failures ? kExitAssertion : kExitOk;
  return o;
}

Outcome run_sandwich(FamilyParams& p, const Common& c) {
  check_d(p);
  const auto fams = build_families(p, c);
  const auto side = parse_side(p.side);
  const int dmax = std::min(p.d, p.n);
  const auto reports = parallel_map(fams.size(), c.workers, [&](std::size_t f) {
    std::vector<symsum::SymReport> rs;
    for (int d = 1; d <= dmax; ++d) rs.push_back(symsum::check_sandwich(fams[f], d, side));
    return rs;
  });
  Outcome o;
  o.table.columns = {"family", "n", "m", "d", "side", "C", "epsilon", "max_deviation", "passed"};
  long long failures = 0;
  for (std::size_t f = 0; f < fams.size(); ++f)
    for (const auto& r : reports[f]) {
      if (!r.passed) ++failures;
      o.table.add({static_cast<long long>(f), static_cast<long long>(fams[f].n()),
                   static_cast<long long>(fams[f].m()), static_cast<long long>(r.d), p.side,
                   fams[f].sup_norm_sq(), r.epsilon, r.lhs, r.passed});
    }
  o.summary = {{"checks", static_cast<long long>(fams.size()) * dmax}, {"failures", failures}};
  o.exit_code = failures ? kExitAssertion : kExitOk;
  return o;
}

// ---------------------------------------------------------------------------
// deviation

struct DeviationParams {
  std::string sampler = "perturbed";
  int m = 2, n = 32, p = 2, trials = 500;
  double delta = 0.1;
  std::vector<int> d{2, 3, 4, 5};
};

Outcome run_deviation(const DeviationParams& p, const Common& c) {
  symsum::FamilySampler sampler;
  if (p.sampler == "perturbed") sampler = symsum::perturbed_isometry_sampler(p.m, p.delta);
  else if (p.sampler == "ginibre") sampler = symsum::ginibre_sampler(p.m);
  else sampler = symsum::deterministic_sampler(p.m);
  Outcome o;
  o.table.columns = {"sampler", "n", "m", "p", "d", "trials", "epsilon_hat", "epsilon_hat_se",
                     "delta_wo", "delta_wo_se", "delta_wr", "delta_wr_se", "norm_wo", "norm_wr",
                     "ratio", "ratio_se", "predicted_ratio"};
  std::vector<double> ds, devs;
  for (int d : p.d) {
    const auto r = symsum::deviation_experiment(sampler, p.n, d, p.p, p.trials, c.seed, c.workers);
    o.table.add({r.sampler, static_cast<long long>(r.n), static_cast<long long>(r.m),
                 static_cast<long long>(r.p), static_cast<long long>(r.d), static_cast<long long>(r.trials),
                 r.epsilon_hat, r.epsilon_hat_se, r.delta_wo, r.delta_wo_se, r.delta_wr, r.delta_wr_se,
                 r.norm_wo, r.norm_wr, r.ratio, r.ratio_se, r.predicted_ratio});
    ds.push_back(d);
    devs.push_back(r.delta_wo);
  }
  const bool fittable = ds.size() >= 2 && std::all_of(devs.begin(), devs.end(), [](double v) { return v > 0.0; });
  if (fittable) {
    const auto fit = symsum::fit_power_law(ds, devs);
    o.summary["delta_wo_exponent"] = fit.exponent;
    o.summary["delta_wo_prefactor"] = fit.prefactor;
  } else {
    o.summary["delta_wo_exponent"] = nullptr;
  }
  return o;
}

// ---------------------------------------------------------------------------
// counterexample

struct CounterParams {
  int dim = 256, n = 3, seeds = 50;
  double t = 1.2;
};

Outcome run_counterexample(const CounterParams& p, const Common& c) {
  if (p.t > std::sqrt(2.0)) throw DomainError("t must be <= sqrt(2)");
  const auto rows = freeprobe::counterexample_sweep(p.dim, p.n, p.t, p.seeds, c.seed, c.workers);
  Outcome o;
  o.table.columns = {"seed", "identity_residual", "lambda_min", "trace_gap", "tau_wo", "tau_wr", "redraws"};
  long long negative = 0, bad_identity = 0;
  double max_gap = 0.0;
  for (const auto& r : rows) {
    o.table.add({static_cast<long long>(r.seed_index), r.identity_residual, r.lambda_min, r.trace_gap,
                 r.tau_wo, r.tau_wr, static_cast<long long>(r.redraws)});
    if (r.lambda_min < 0.0) ++negative;
    if (!(r.identity_residual <= 1e-9)) ++bad_identity;
    max_gap = std::max(max_gap, r.trace_gap);
  }
  o.summary = {{"seeds", p.seeds},
               {"negative_lambda_min", negative},
               {"negative_fraction", static_cast<double>(negative) / p.seeds},
               {"max_trace_gap", max_gap},
               {"identity_failures", bad_identity}};
  o.exit_code = bad_identity ? kExitAssertion : kExitOk;
  return o;
}

// ---------------------------------------------------------------------------
// igm

Complex parse_scalar(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  throw DomainError("vector entries must be numbers or [re, im] pairs");
}

Vector parse_vector(const json& v) {
  if (!v.is_array() || v.empty()) throw DomainError("vectors must be nonempty arrays");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = parse_scalar(v[i]);
  return out;
}

igm::VectorFamily family_from_generator(const json& gen, std::uint64_t fallback_seed) {
  const std::string kind = gen.at("kind").get<std::string>();
  if (kind == "group_orbit") {
    const auto seed = gen.value("seed", fallback_seed);
    Rng rng = substream(seed, 0);
    return igm::gen_group_orbit(gen.at("d").get<int>(),
                                igm::orbit_variant_from_string(gen.value("variant", std::string("rank_one_frame"))),
                                rng);
  }
  if (kind == "vectors") {
    std::vector<Vector> vs;
    for (const auto& v : gen.at("vectors")) vs.push_back(parse_vector(v));
    auto fam = igm::VectorFamily::from_vectors(std::move(vs));
    fam.label = "vectors";
    return fam;
  }
  return igm::gen_spherical_design(igm::design_kind_from_string(kind), gen.value("m", 3));
}

struct IgmParams {
  std::string config_file;
  std::string config_json;
  bool compare = false;
};

Outcome run_igm(IgmParams& p, Common& c, bool seed_given, std::ostream& err) {
  if (!p.config_file.empty()) p.config_json = json::parse(read_file(p.config_file)).dump();
  if (p.config_json.empty()) throw DomainError("igm needs --config");
  const json cfg_doc = json::parse(p.config_json);

  igm::IgmConfig cfg;
  cfg.seed = seed_given ? c.seed : cfg_doc.value("seed", c.seed);
  c.seed = cfg.seed;  // recorded in the manifest, so replay passes it back as --seed
  const auto fam = family_from_generator(cfg_doc.at("generator"), cfg.seed);
  cfg.gamma = cfg_doc.at("gamma").get<double>();
  cfg.rho = cfg_doc.value("rho", 0.0);
  cfg.k = cfg_doc.at("k").get<int>();
  cfg.policy = igm::policy_from_string(cfg_doc.value("policy", std::string("without_replacement")));
  cfg.mult = cfg_doc.value("mult", 1);
  cfg.trials = cfg_doc.value("trials", 100);
  cfg.x_star = cfg_doc.contains("x_star") ? parse_vector(cfg_doc["x_star"]) : Vector(Vector::Ones(fam.m()));
  cfg.x_0 = cfg_doc.contains("x_0") ? parse_vector(cfg_doc["x_0"]) : Vector(Vector::Zero(fam.m()));
  cfg.validate(fam.n(), fam.m());

  std::vector<igm::IgmConfig> runs{cfg};
  if (p.compare && cfg.policy != igm::Policy::with_replacement) {
    auto wr = cfg;
    wr.policy = igm::Policy::with_replacement;
    runs.push_back(wr);
  }

  Outcome o;
  o.table.columns = {"k", "policy", "mean_mse", "stderr", "bound"};
  bool missing_bound = false;
  bool envelope = true;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto stats = igm::monte_carlo_mse(fam, runs[r], c.workers);
    // The estimate concerns sampling without replacement; other curves are
    // reported beside it but not asserted.
    const bool asserted = r == 0 && runs[r].policy != igm::Policy::with_replacement;
    for (std::size_t t = 0; t < stats.mean.size(); ++t) {
      Cell bound;
      if (stats.bound[t] && runs[r].policy != igm::Policy::with_replacement) bound = *stats.bound[t];
      else if (asserted && t > 0) missing_bound = true;
      o.table.add({static_cast<long long>(t), std::string(igm::to_string(runs[r].policy)), stats.mean[t],
                   stats.stderr_[t], bound});
    }
    if (asserted) {
      envelope = igm::within_envelope(stats);
      o.summary["phi"] = stats.phi;
      o.summary["C1"] = stats.c1;
      o.summary["eta"] = stats.eta;
      o.summary["k_below_cube_root_of_pool"] = stats.below_cube_root;
      json notes = json::array();
      for (const auto& note : stats.bound_note)
        if (!note.empty()) notes.push_back(note);
      o.summary["bound_notes"] = notes;
    }
  }
  o.summary["family"] = {{"label", fam.label}, {"n", fam.n()}, {"m", fam.m()}, {"sigma", fam.sigma()},
                         {"mu", fam.mu()}, {"isotropy_residual", fam.isotropy_residual()}};
  o.summary["seed"] = cfg.seed;
  o.summary["within_envelope"] = envelope;
  if (missing_bound) err << "warning: bound not applicable for some steps (see bound_notes)\n";
  o.exit_code = envelope ? kExitOk : kExitAssertion;
  return o;
}

// ---------------------------------------------------------------------------
// designs

struct DesignParams {
  std::vector<int> m{2, 3, 4, 5};
  std::vector<int> d{2, 3, 4, 5, 8};
};

Outcome run_designs(const DesignParams& p, const Common& c) {
  Outcome o;
  o.table.columns = {"family", "n", "m", "sigma", "mu", "isotropy_residual", "passed"};
  long long failures = 0;
  auto add = [&](const igm::VectorFamily& fam, double tol) {
    const bool ok = fam.isotropy_residual() <= tol;
    if (!ok) ++failures;
    o.table.add({fam.label, static_cast<long long>(fam.n()), static_cast<long long>(fam.m()), fam.sigma(),
                 fam.mu(), fam.isotropy_residual(), ok});
  };
  for (int m : p.m) {
    add(igm::gen_spherical_design(igm::DesignKind::simplex, m), 1e-10);
    add(igm::gen_spherical_design(igm::DesignKind::cross_polytope, m), 1e-10);
  }
  add(igm::gen_spherical_design(igm::DesignKind::icosahedron), 1e-10);
  for (int d : p.d)
    for (auto variant : {igm::OrbitVariant::rank_one_frame, igm::OrbitVariant::projector}) {
      Rng rng = substream(c.seed, static_cast<std::uint64_t>(d));
      const auto fam = igm::gen_group_orbit(d, variant, rng);
      // The certificate is relative to sigma (d for the projector variant).
      add(fam, 1e-10 * std::max(1.0, fam.sigma()));
    }
  o.summary = {{"families", static_cast<long long>(o.table.rows.size())}, {"failures", failures}};
  o.exit_code = failures ? kExitAssertion : kExitOk;
  return o;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepParams {
  int families = 1000, n_max = 8, m_max = 4, d_max = 4;
};

Outcome run_sweep(const SweepParams& p, const Common& c) {
  if (p.families < 1 || p.n_max < 1 || p.m_max < 1 || p.d_max < 1) throw DomainError("sweep sizes must be >= 1");
  if (p.n_max > symsum::kMaxEnumerationN || p.d_max > symsum::kMaxEnumerationD)
    throw InfeasibleError("sweep sizes exceed the enumeration guards");
  struct Row {
    int n, m, d;
    std::string side;
    double c, lhs, rhs, dev;
    bool bound_ok, sandwich_ok;
  };
  const auto rows = parallel_map(static_cast<std::size_t>(p.families), c.workers, [&](std::size_t f) {
    Rng rng = substream(c.seed, f);
    const int n = std::uniform_int_distribution<int>(1, p.n_max)(rng);
    const int m = std::uniform_int_distribution<int>(1, p.m_max)(rng);
    const int d = std::uniform_int_distribution<int>(1, std::min(n, p.d_max))(rng);
    std::vector<Matrix> raw;
    for (int j = 0; j < n; ++j) raw.push_back(complex_gaussian_matrix(m, m, rng));
    std::vector<Row> out;
    for (auto side : {symsum::Side::left, symsum::Side::right}) {
      const auto fam = symsum::normalize_family(raw, side);
      const auto b = symsum::check_theorem_bound(fam, d, side, false);
      const auto s = symsum::check_sandwich(fam, d, side);
      out.push_back({n, m, d, symsum::to_string(side), fam.sup_norm_sq(), b.lhs, b.rhs, s.lhs, b.passed, s.passed});
    }
    return out;
  });
  Outcome o;
  o.table.columns = {"family", "n", "m", "d", "side", "C", "bound_lhs", "bound_rhs", "bound_passed",
                     "sandwich_max_deviation", "sandwich_passed"};
  long long failures = 0;
  for (std::size_t f = 0; f < rows.size(); ++f)
    for (const auto& r : rows[f]) {
      failures += !r.bound_ok + !r.sandwich_ok;
      o.table.add({static_cast<long long>(f), static_cast<long long>(r.n), static_cast<long long>(r.m),
                   static_cast<long long>(r.d), r.side, r.c, r.lhs, r.rhs, r.bound_ok, r.dev, r.sandwich_ok});
    }
  o.summary = {{"families", p.families}, {"failures", failures}};
  o.exit_code = failures ? kExitAssertion : kExitOk;
  return o;
}

// ---------------------------------------------------------------------------

int finish(const std::string& name, const json& parameters, const Common& c, const Outcome& o,
           double seconds, std::ostream& out, std::ostream& err) {
  const std::string text = c.format == "json" ? to_json(o.table, o.summary) : to_csv(o.table);
  const std::string data_path = c.out.empty() ? name + "." + c.format : c.out;
  if (data_path == "-") out << text;
  else write_file(data_path, text);

  std::string manifest_path = c.manifest;
  if (manifest_path.empty() && data_path != "-") manifest_path = data_path + ".manifest.json";
  if (!manifest_path.empty()) {
    json params = parameters;
    params["seed"] = c.seed;
    params["format"] = c.format;
    const json manifest{{"tool", "agmlab"},
                        {"version", AGM_VERSION},
                        {"subcommand", name},
                        {"parameters", params},
                        {"seed", c.seed},
                        {"workers", c.workers},
                        {"outputs", {{"data", data_path}, {"manifest", manifest_path}}},
                        {"args", args_from_parameters(name, params)},
                        {"exit_code", o.exit_code},
                        {"summary", o.summary},
                        {"duration_seconds", seconds}};
    write_file(manifest_path, manifest.dump(2) + "\n");
  }
  if (o.exit_code == kExitAssertion) err << name << ": assertion failed, see " << data_path << "\n";
  return o.exit_code;
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err, int depth);

int replay(const std::string& path, const std::string& out_override, const std::string& manifest_override,
           unsigned workers, bool workers_given, std::ostream& out, std::ostream& err, int depth) {
  if (depth > 0) throw DomainError("a manifest cannot replay another replay");
  const json manifest = json::parse(read_file(path));
  auto args = manifest.at("args").get<std::vector<std::string>>();
  args.push_back("--out");
  args.push_back(out_override.empty() ? manifest.at("outputs").at("data").get<std::string>() : out_override);
  if (!manifest_override.empty()) {
    args.push_back("--manifest");
    args.push_back(manifest_override);
  }
  args.push_back("--workers");
  args.push_back(std::to_string(workers_given ? workers : manifest.value("workers", 1u)));
  return dispatch(std::move(args), out, err, depth + 1);
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"agmlab: operator-mean inequalities, free-probability surrogate and IGM experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", AGM_VERSION);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    commands.push_back(std::make_unique<Command>());
    auto& cmd = *commands.back();
    cmd.app = app.add_subcommand(name, help);
    add_common(cmd);
    return cmd;
  };

  FamilyParams vb, sw;
  {
    auto& cmd = make("verify-bounds", "Check ||I - E_wo|| against (1+C) d(d-1)/(2n)");
    add_family_options(cmd.app, vb);
    cmd.app->add_flag("--detail", vb.detail, "Emit the per-partition breakdown instead");
    cmd.parameters = [&] {
      auto j = family_parameters(vb);
      j["detail"] = vb.detail;
      return j;
    };
    cmd.execute = [&](Common& c, std::ostream&) { return run_verify_bounds(vb, c); };
  }
  {
    auto& cmd = make("sandwich", "Check (1-eps) I <= E_wo <= (1+eps) I");
    add_family_options(cmd.app, sw);
    cmd.parameters = [&] { return family_parameters(sw); };
    cmd.execute = [&](Common& c, std::ostream&) { return run_sandwich(sw, c); };
  }
  DeviationParams dv;
  {
    auto& cmd = make("deviation", "Monte Carlo deviation of E_wo and E_wr for i.i.d. random operators");
    cmd.app->add_option("--sampler", dv.sampler)->capture_default_str()->check(CLI::IsMember({"perturbed", "ginibre", "deterministic"}));
    cmd.app->add_option("--m", dv.m, "Matrix dimension")->capture_default_str();
    cmd.app->add_option("--delta", dv.delta, "Perturbation size")->capture_default_str();
    cmd.app->add_option("--n", dv.n, "Operators per family")->capture_default_str();
    cmd.app->add_option("--d", dv.d, "Comma-separated d values")->delimiter(',')->capture_default_str();
    cmd.app->add_option("--p", dv.p, "Moment exponent (1, 2 or 4)")->capture_default_str();
    cmd.app->add_option("--trials", dv.trials, "Families per point")->capture_default_str();
    cmd.parameters = [&] {
      return json{{"sampler", dv.sampler}, {"m", dv.m}, {"delta", dv.delta}, {"n", dv.n},
                  {"d", dv.d},             {"p", dv.p}, {"trials", dv.trials}};
    };
    cmd.execute = [&](Common& c, std::ostream&) { return run_deviation(dv, c); };
  }
  CounterParams cx;
  {
    auto& cmd = make("counterexample", "Order violation of E_wo,3 <= E_wr,3 in a Haar-unitary model");
    cmd.app->add_option("--dim", cx.dim, "Matrix dimension (multiple of 4)")->capture_default_str();
    cmd.app->add_option("--n", cx.n, "Number of unitaries")->capture_default_str();
    cmd.app->add_option("--t", cx.t, "Spectrum parameter, 0 < t <= sqrt(2)")->capture_default_str();
    cmd.app->add_option("--seeds", cx.seeds, "Independent draws")->capture_default_str();
    cmd.parameters = [&] { return json{{"dim", cx.dim}, {"n", cx.n}, {"t", cx.t}, {"seeds", cx.seeds}}; };
    cmd.execute = [&](Common& c, std::ostream&) { return run_counterexample(cx, c); };
  }
  IgmParams ig;
  {
    auto& cmd = make("igm", "Incremental gradient Monte Carlo against the k-step bound");
    cmd.app->add_option("--config", ig.config_file, "JSON config with IgmConfig fields and a generator");
    cmd.app->add_option("--config-json", ig.config_json, "Inline JSON config")->group("");
    cmd.app->add_flag("--compare", ig.compare, "Also report the with-replacement curve");
    cmd.parameters = [&] { return json{{"config-json", ig.config_json}, {"compare", ig.compare}}; };
    cmd.execute = [&, app = cmd.app](Common& c, std::ostream& e) {
      return run_igm(ig, c, app->count("--seed") > 0, e);
    };
  }
  DesignParams ds;
  {
    auto& cmd = make("designs", "Second-moment certificates of every vector generator");
    cmd.app->add_option("--m", ds.m, "Dimensions for simplex and cross-polytope")->delimiter(',')->capture_default_str();
    cmd.app->add_option("--d", ds.d, "Dimensions for the group orbits")->delimiter(',')->capture_default_str();
    cmd.parameters = [&] { return json{{"m", ds.m}, {"d", ds.d}}; };
    cmd.execute = [&](Common& c, std::ostream&) { return run_designs(ds, c); };
  }
  SweepParams sp;
  {
    auto& cmd = make("sweep", "Random-size families through both checks on both sides");
    cmd.app->add_option("--families", sp.families)->capture_default_str();
    cmd.app->add_option("--n-max", sp.n_max)->capture_default_str();
    cmd.app->add_option("--m-max", sp.m_max)->capture_default_str();
    cmd.app->add_option("--d-max", sp.d_max)->capture_default_str();
    cmd.parameters = [&] {
      return json{{"families", sp.families}, {"n-max", sp.n_max}, {"m-max", sp.m_max}, {"d-max", sp.d_max}};
    };
    cmd.execute = [&](Common& c, std::ostream&) { return run_sweep(sp, c); };
  }

  std::string replay_path, replay_out, replay_manifest;
  unsigned replay_workers = 1;
  auto* rp = app.add_subcommand("replay", "Re-run the invocation recorded in a manifest");
  rp->add_option("MANIFEST", replay_path, "Manifest file")->required();
  rp->add_option("--out", replay_out, "Output file (default: the recorded one)");
  rp->add_option("--manifest", replay_manifest, "Manifest path for the new run");
  auto* rw = rp->add_option("--workers", replay_workers, "Worker threads")->check(CLI::Range(1u, 1024u));

  std::vector<std::string> storage{"agmlab"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (rp->parsed())
      return replay(replay_path, replay_out, replay_manifest, replay_workers, rw->count() > 0, out, err, depth);
    for (auto& cmd : commands) {
      if (!cmd->app->parsed()) continue;
      const auto start = std::chrono::steady_clock::now();
      const Outcome o = cmd->execute(cmd->common, err);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return finish(cmd->app->get_name(), cmd->parameters(), cmd->common, o, seconds, out, err);
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: bad JSON input: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return dispatch(args, out, err, 0);
}

}  // namespace agm::cli
