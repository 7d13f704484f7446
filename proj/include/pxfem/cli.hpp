#pragma once

// Command-line driver: solve | study | probe | mesh, each reading one JSON
// config and writing its artifacts into --out.  Exit codes: 0 success,
// 1 config error, 2 solver failure, 3 failed rate assertion.

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pxfem/config.hpp"
#include "pxfem/lpx.hpp"
#include "pxfem/nfunction_probes.hpp"

namespace pxfem {

struct CliOptions {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  bool verbose = false;
};

namespace detail {

inline std::string joined(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

inline void write_solution_csv(const std::string& path, const FeSpace& s,
                               const FeFunction& u) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x,y,value\n";
  char buf[128];
  const Triangulation& t = *s.mesh;
  for (std::size_t v = 0; v < t.vertices.size(); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t.vertices[v].x,
                  t.vertices[v].y, u.nodal[v]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed on " + path);
}

inline void write_stats_json(const std::string& path, const FeSpace& s,
                             const SolveStats& st) {
  nlohmann::json j;
  j["converged"] = st.converged;
  j["newton_iters"] = st.newton_iters;
  j["final_residual"] = st.final_residual;
  j["ndof"] = s.n_free;
  j["h"] = s.mesh->h;
  j["regularized"] = st.regularized;
  j["kappa_solve_used"] = st.kappa_solve_used;
  j["total_cg_iters"] = st.total_cg_iters;
  j["used_direct"] = st.used_direct;
  j["energy_history"] = st.energy_history;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed on " + path);
}

struct ProbeWriter {
  std::ofstream out;

  explicit ProbeWriter(const std::string& path) : out(path) {
    if (!out)
      throw std::runtime_error("cannot open " + path + " for writing");
    out << "probe,param,lo,hi,samples\n";
  }

  void row(const std::string& probe, const std::string& param, double lo,
           double hi, long samples) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", lo, hi);
    out << probe << ',' << param << ',' << buf << ',' << samples << '\n';
  }
};

inline void run_probes(const ProbeSpec& spec, std::uint64_t seed,
                       const std::string& path, bool verbose) {
  ProbeWriter w(path);
  PhiFamily fam(spec.exponent, spec.kappa, PhiVariant::Integral);
  auto wants = [&](const char* kind) {
    for (const auto& k : spec.kinds)
      if (k == kind) return true;
    return false;
  };

  if (wants("flux")) {
    RatioEnvelopes env = flux_difference_envelope(fam, seed, spec.draws);
    w.row("flux_ratio_f2", "", env.r1.lo, env.r1.hi, env.r1.n);
    w.row("flux_ratio_shift", "", env.r2.lo, env.r2.hi, env.r2.n);
    w.row("flux_ratio_dprime", "", env.r3.lo, env.r3.hi, env.r3.n);
  }
  if (wants("young")) {
    double gap = young_min_gap(fam, spec.young_grid);
    w.row("young_min_gap", "", gap, gap,
          static_cast<long>(spec.young_grid) * spec.young_grid);
  }
  if (wants("shift")) {
    Envelope small = shift_small_envelope(fam, seed + 1, spec.draws);
    w.row("shift_small", "", small.lo, small.hi, small.n);
    Envelope large = shift_large_envelope(fam, seed + 2, spec.draws);
    w.row("shift_large", "", large.lo, large.hi, large.n);
    Envelope dbl = double_shift_envelope(fam, seed + 3, spec.draws);
    w.row("double_shift", "", dbl.lo, dbl.hi, dbl.n);
    char param[32];
    std::snprintf(param, sizeof param, "delta=%g", spec.delta);
    ShiftChangeConstants ch =
        change_of_shift_constants(fam, spec.delta, seed + 4, spec.draws);
    w.row("change_of_shift_primal", param, ch.primal, ch.primal, spec.draws);
    w.row("change_of_shift_dual", param, ch.dual, ch.dual, spec.draws);
    Envelope conj = conjugate_shift_envelope(fam, seed + 5, spec.draws);
    w.row("conjugate_shift", "", conj.lo, conj.hi, conj.n);
    ShiftScaleEnvelopes sc = shift_scale_envelope(fam, seed + 6, spec.draws);
    w.row("shift_scale_primal", "", sc.primal.lo, sc.primal.hi, sc.primal.n);
    w.row("shift_scale_dual", "", sc.dual.lo, sc.dual.hi, sc.dual.n);
    ShiftScaleEnvelopes ix = index_scaling_envelope(fam, seed + 7,
                                                    spec.draws);
    w.row("index_scaling_primal", "", ix.primal.lo, ix.primal.hi,
          ix.primal.n);
    w.row("index_scaling_dual", "", ix.dual.lo, ix.dual.hi, ix.dual.n);
  }
  if (wants("key") || wants("poincare")) {
    Rng rng(seed + 8);
    for (int k = 1; k <= spec.dyadic_levels; ++k) {
      double ell = std::pow(0.5, k);
      double key_k = 0.0, skey_k = 0.0, poi_k = 0.0;
      for (int rep = 0; rep < spec.reps; ++rep) {
        Cube q{{uniform(rng, 0.0, 1.0 - ell), uniform(rng, 0.0, 1.0 - ell)},
               ell};
        double bound = std::max(1.0, std::pow(q.measure(), -spec.m));
        double a = uniform(rng, 0.0, 0.3 * bound);
        GridFunction f = random_admissible_sample(
            q, spec.lattice, rng, uniform(rng, 0.1, 0.6) * (bound - a));
        key_k = std::max(key_k, key_estimate_probe(spec.exponent, f, spec.m));
        skey_k = std::max(
            skey_k, shifted_key_probe(spec.exponent, f, a, spec.m));

        TrigField t = TrigField::random(rng, 2, 3);
        GridFunction u = GridFunction::sample_with_gradient(
            q, spec.lattice, [&](Vec2 x) { return t(x); },
            [&](Vec2 x) { return t.grad(x); });
        double mg = u.mean_abs_gradient();
        double target = 0.5 * (bound - a);
        if (mg > target) u.scale(target / mg);
        poi_k = std::max(poi_k,
                         poincare_shift_probe(spec.exponent, u, a, spec.m));
      }
      char param[16];
      std::snprintf(param, sizeof param, "k=%d", k);
      if (wants("key")) {
        w.row("key", param, key_k, key_k, spec.reps);
        w.row("shifted_key", param, skey_k, skey_k, spec.reps);
      }
      if (wants("poincare")) w.row("poincare", param, poi_k, poi_k, spec.reps);
    }
  }
  if (verbose) std::fprintf(stderr, "probe report written to %s\n",
                            path.c_str());
}

}  // namespace detail

inline int cmd_solve(const RunSpec& spec, const CliOptions& opt) {
  if (spec.study.levels != 0)
    throw ConfigError("solve runs a single level; set mesh.levels to 0");

  Triangulation t = generate(spec.study.domain, spec.study.n0);
  FeSpace s = FeSpace::build(t);
  Problem prob{spec.study.fam,
               spec.manufactured ? RhsKind::Manufactured : RhsKind::Function,
               [c = spec.constant_rhs](Vec2) { return c; },
               spec.study.v_exact,
               spec.study.solver};
  SolveResult res = solve(prob, s, spec.study.frozen);

  detail::write_solution_csv(detail::joined(opt.out, "solution.csv"), s,
                             res.u);
  detail::write_stats_json(detail::joined(opt.out, "stats.json"), s,
                           res.stats);
  if (opt.verbose)
    std::fprintf(stderr, "%d newton iterations, final residual %.3e\n",
                 res.stats.newton_iters, res.stats.final_residual);
  if (!res.stats.converged) {
    std::fprintf(stderr,
                 "solver failed: final residual %.17g after %d iterations\n",
                 res.stats.final_residual, res.stats.newton_iters);
    return 2;
  }
  return 0;
}

inline int cmd_study(const RunSpec& spec, const CliOptions& opt) {
  if (!spec.manufactured)
    throw ConfigError("study needs a manufactured rhs");
  if (spec.unreachable_tol)
    throw ConfigError("study needs a reachable solver tolerance");

  ConvergenceReport rep = run_study(spec.study);
  write_report_csv(rep, detail::joined(opt.out, "report.csv"));
  if (spec.svg) write_report_svg(rep, detail::joined(opt.out, "report.svg"));

  if (rep.aborted) {
    std::fprintf(stderr, "solver failed at level %zu; partial report\n",
                 rep.rows.size());
    return 2;
  }
  if (opt.verbose)
    for (const StudyRow& r : rep.rows)
      std::fprintf(stderr, "level %d  h %.4g  err %.6g  eoc %.3f\n", r.level,
                   r.h, r.quasi_err, r.eoc);
  if (spec.assert_eoc) {
    if (rep.rows.size() < 2 || std::isnan(rep.rows.back().eoc)) {
      std::fprintf(stderr, "no rate available to check against %.3g\n",
                   *spec.assert_eoc);
      return 3;
    }
    if (rep.rows.back().eoc < *spec.assert_eoc) {
      std::fprintf(stderr, "final rate %.4f below the asserted %.4f\n",
                   rep.rows.back().eoc, *spec.assert_eoc);
      return 3;
    }
  }
  return 0;
}

inline int cmd_probe(const ProbeSpec& spec, const CliOptions& opt) {
  detail::run_probes(spec, opt.seed, detail::joined(opt.out, "probes.csv"),
                     opt.verbose);
  return 0;
}

inline int cmd_mesh(const MeshSpec& spec, const CliOptions& opt) {
  if (spec.validate) {
    try {
      Triangulation t = read_mesh(spec.validate_path);
      std::printf("valid: %zu vertices, %zu cells, h %.17g, gamma0 %.17g\n",
                  t.vertices.size(), t.cells.size(), t.h, t.gamma0);
      return 0;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "invalid mesh: %s\n", e.what());
      return 1;
    }
  }
  Triangulation t = generate(spec.domain, spec.n);
  for (int r = 0; r < spec.refine; ++r) t = refine_uniform(t);
  std::string path = detail::joined(opt.out, spec.write_name);
  write_mesh(t, path);
  if (opt.verbose)
    std::fprintf(stderr, "%zu vertices, %zu cells written to %s\n",
                 t.vertices.size(), t.cells.size(), path.c_str());
  return 0;
}

// args excludes the program name and is in natural order.
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"variable exponent p-laplacian solver and probe bench",
               "pxfem"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&opt](CLI::App* cmd) {
    cmd->add_option("--config", opt.config, "JSON config file")->required();
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--seed", opt.seed, "probe sampling seed");
    cmd->add_option("--threads", opt.threads, "worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", opt.verbose, "chatty progress on stderr");
  };
  CLI::App* c_solve = app.add_subcommand("solve", "single nonlinear solve");
  CLI::App* c_study = app.add_subcommand("study", "refinement study");
  CLI::App* c_probe = app.add_subcommand("probe", "inequality probes");
  CLI::App* c_mesh = app.add_subcommand("mesh", "mesh file tool");
  for (CLI::App* c : {c_solve, c_study, c_probe, c_mesh}) add_common(c);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    detail::ensure_out_dir(opt.out);
    nlohmann::json cfg = load_json(opt.config);
    if (c_solve->parsed()) return cmd_solve(parse_run_config(cfg), opt);
    if (c_study->parsed()) return cmd_study(parse_run_config(cfg), opt);
    if (c_probe->parsed()) return cmd_probe(parse_probe_config(cfg), opt);
    return cmd_mesh(parse_mesh_config(cfg), opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace pxfem
