#pragma once

// JSON run configurations.  Every section is an object with a fixed key
// set; unknown keys are rejected up front so typos cannot silently fall
// back to defaults.

#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pxfem/error.hpp"

namespace pxfem {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const char* where,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_as(const json& j, const char* where, const char* key) {
  if (!j.contains(key))
    throw ConfigError(std::string(where) + " needs '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " +
                      where + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* where, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j, where, key);
}

inline Vec2 get_vec2(const json& j, const char* where, const char* key) {
  auto v = get_as<std::vector<double>>(j, where, key);
  if (v.size() != 2)
    throw ConfigError(std::string("'") + key + "' in " + where +
                      " must be a pair [x, y]");
  return {v[0], v[1]};
}

}  // namespace detail

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

inline Domain parse_domain(const std::string& name) {
  if (name == "square") return Domain::UnitSquare;
  if (name == "lshape") return Domain::LShape;
  throw ConfigError("unknown domain '" + name + "' (square | lshape)");
}

inline ExponentField parse_exponent(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_as;
  const char* where = "exponent";
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("exponent needs a 'kind'");
  std::string kind = get_as<std::string>(j, where, "kind");
  try {
    if (kind == "constant") {
      check_keys(j, where, {"kind", "p"});
      return ExponentField::constant(get_as<double>(j, where, "p"));
    }
    if (kind == "affine") {
      check_keys(j, where, {"kind", "c", "grad"});
      return ExponentField::affine(get_as<double>(j, where, "c"),
                                   detail::get_vec2(j, where, "grad"));
    }
    if (kind == "sinusoidal") {
      check_keys(j, where, {"kind", "base", "amp"});
      return ExponentField::sinusoidal(get_as<double>(j, where, "base"),
                                       get_as<double>(j, where, "amp"));
    }
    if (kind == "holder-cusp") {
      check_keys(j, where, {"kind", "base", "amp", "center", "alpha"});
      return ExponentField::holder_cusp(
          get_as<double>(j, where, "base"), get_as<double>(j, where, "amp"),
          detail::get_vec2(j, where, "center"),
          get_as<double>(j, where, "alpha"));
    }
    if (kind == "table") {
      check_keys(j, where, {"kind", "nx", "ny", "values"});
      return ExponentField::table(
          get_as<int>(j, where, "nx"), get_as<int>(j, where, "ny"),
          get_as<std::vector<double>>(j, where, "values"));
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid exponent: ") + e.what());
  }
  throw ConfigError("unknown exponent kind '" + kind + "'");
}

inline ScalarField parse_manufactured(const std::string& name) {
  if (name == "sinsin") return sinsin_field();
  if (name == "lshape-corner") return lshape_corner_field();
  throw ConfigError("unknown manufactured field '" + name +
                    "' (sinsin | lshape-corner)");
}

// One parsed solve/study configuration.  A tolerance of exactly zero is
// legal input meaning an unreachable target: the run is forced through all
// Newton iterations and reports failure (the solver itself rejects a
// non-positive tolerance, so the driver substitutes the smallest positive
// double).
struct RunSpec {
  StudyConfig study;
  bool manufactured = true;
  double constant_rhs = 0.0;
  std::string rhs_desc;
  std::optional<double> assert_eoc;
  bool svg = true;
  bool unreachable_tol = false;
};

inline RunSpec parse_run_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_as;
  using detail::get_or;

  check_keys(j, "config", {"problem", "mesh", "solver", "study"});
  if (!j.contains("problem")) throw ConfigError("config needs 'problem'");
  const auto& jp = j.at("problem");
  check_keys(jp, "problem", {"domain", "exponent", "kappa", "rhs"});

  Domain domain =
      parse_domain(get_or<std::string>(jp, "problem", "domain", "square"));
  if (!jp.contains("exponent"))
    throw ConfigError("problem needs an 'exponent'");
  ExponentField exponent = parse_exponent(jp.at("exponent"));
  double kappa = get_or<double>(jp, "problem", "kappa", 0.0);

  PhiFamily fam = [&] {
    try {
      return PhiFamily(exponent, kappa, PhiVariant::Integral);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("invalid problem: ") + e.what());
    }
  }();

  bool manufactured = true;
  double constant_rhs = 0.0;
  std::string field_name = "sinsin";
  if (jp.contains("rhs")) {
    const auto& jr = jp.at("rhs");
    check_keys(jr, "rhs", {"kind", "field", "value"});
    std::string kind = get_as<std::string>(jr, "rhs", "kind");
    if (kind == "manufactured") {
      field_name = get_or<std::string>(jr, "rhs", "field", "sinsin");
    } else if (kind == "constant") {
      manufactured = false;
      constant_rhs = get_as<double>(jr, "rhs", "value");
    } else {
      throw ConfigError("unknown rhs kind '" + kind +
                        "' (manufactured | constant)");
    }
  }

  SolverOptions solver;
  bool unreachable = false;
  if (j.contains("solver")) {
    const auto& js = j.at("solver");
    check_keys(js, "solver", {"tol", "max_iter", "kappa_solve",
                              "quad_degree"});
    solver.tol = get_or<double>(js, "solver", "tol", solver.tol);
    solver.max_iter = get_or<int>(js, "solver", "max_iter", solver.max_iter);
    solver.kappa_solve =
        get_or<double>(js, "solver", "kappa_solve", solver.kappa_solve);
    solver.quad_degree =
        get_or<int>(js, "solver", "quad_degree", solver.quad_degree);
    if (solver.tol < 0.0) throw ConfigError("solver tol must be >= 0");
    if (solver.tol == 0.0) {
      unreachable = true;
      solver.tol = std::numeric_limits<double>::denorm_min();
    }
    if (solver.max_iter < 1) throw ConfigError("solver max_iter must be >= 1");
    if (solver.kappa_solve < 0.0)
      throw ConfigError("solver kappa_solve must be >= 0");
    if (solver.quad_degree < 1)
      throw ConfigError("solver quad_degree must be >= 1");
  }

  int n0 = 4, levels = 0;
  if (j.contains("mesh")) {
    const auto& jm = j.at("mesh");
    check_keys(jm, "mesh", {"n0", "levels"});
    n0 = get_or<int>(jm, "mesh", "n0", 4);
    levels = get_or<int>(jm, "mesh", "levels", 0);
    if (n0 < 1) throw ConfigError("mesh n0 must be >= 1");
    if (levels < 0) throw ConfigError("mesh levels must be >= 0");
  }

  bool frozen = false;
  double alpha = 1.0;
  std::optional<double> assert_eoc;
  bool svg = true;
  std::string label;
  if (j.contains("study")) {
    const auto& js = j.at("study");
    check_keys(js, "study", {"frozen", "alpha", "assert_eoc", "svg",
                             "label"});
    frozen = get_or<bool>(js, "study", "frozen", false);
    alpha = get_or<double>(js, "study", "alpha", 1.0);
    svg = get_or<bool>(js, "study", "svg", true);
    label = get_or<std::string>(js, "study", "label", "");
    if (js.contains("assert_eoc"))
      assert_eoc = get_as<double>(js, "study", "assert_eoc");
  }

  RunSpec spec{StudyConfig{std::move(fam),
                           manufactured ? parse_manufactured(field_name)
                                        : ScalarField{},
                           solver, domain, n0, levels, frozen,
                           label.empty() ? field_name : label, alpha},
               manufactured,
               constant_rhs,
               manufactured ? field_name : "constant",
               assert_eoc,
               svg,
               unreachable};
  return spec;
}

// Probe protocol knobs.  The probes themselves are deterministic in the
// seed handed to the driver.
struct ProbeSpec {
  ExponentField exponent;
  double kappa = 1e-3;
  int draws = 2000;
  int lattice = 32;
  int dyadic_levels = 4;
  int reps = 2;
  double m = 2.0;
  double delta = 0.25;
  int young_grid = 12;
  std::vector<std::string> kinds;
};

inline ProbeSpec parse_probe_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_or;

  check_keys(j, "config", {"probe"});
  if (!j.contains("probe")) throw ConfigError("config needs 'probe'");
  const auto& jp = j.at("probe");
  check_keys(jp, "probe",
             {"exponent", "kappa", "draws", "lattice", "dyadic_levels",
              "reps", "m", "delta", "young_grid", "kinds"});
  if (!jp.contains("exponent")) throw ConfigError("probe needs 'exponent'");

  static const std::vector<std::string> all_kinds = {"flux", "young", "shift",
                                                     "key", "poincare"};
  ProbeSpec spec{parse_exponent(jp.at("exponent")),
                 get_or<double>(jp, "probe", "kappa", 1e-3),
                 get_or<int>(jp, "probe", "draws", 2000),
                 get_or<int>(jp, "probe", "lattice", 32),
                 get_or<int>(jp, "probe", "dyadic_levels", 4),
                 get_or<int>(jp, "probe", "reps", 2),
                 get_or<double>(jp, "probe", "m", 2.0),
                 get_or<double>(jp, "probe", "delta", 0.25),
                 get_or<int>(jp, "probe", "young_grid", 12),
                 get_or<std::vector<std::string>>(jp, "probe", "kinds",
                                                  all_kinds)};
  if (spec.draws < 1 || spec.lattice < 2 || spec.dyadic_levels < 1 ||
      spec.reps < 1 || spec.young_grid < 2)
    throw ConfigError("probe sizes must be positive");
  if (!(spec.m > 0.0)) throw ConfigError("probe m must be > 0");
  if (!(spec.delta > 0.0 && spec.delta < 1.0))
    throw ConfigError("probe delta must lie in (0,1)");
  if (!(spec.kappa >= 0.0 && spec.kappa <= 1.0))
    throw ConfigError("probe kappa must lie in [0,1]");
  for (const auto& k : spec.kinds) {
    bool ok = false;
    for (const auto& a : all_kinds) ok = ok || k == a;
    if (!ok)
      throw ConfigError("unknown probe kind '" + k +
                        "' (flux | young | shift | key | poincare)");
  }
  return spec;
}

// Mesh tool configuration: either generate (+ refine + write) or validate
// an existing file.
struct MeshSpec {
  bool validate = false;
  std::string validate_path;
  Domain domain = Domain::UnitSquare;
  int n = 4;
  int refine = 0;
  std::string write_name = "mesh.pxmesh";
};

inline MeshSpec parse_mesh_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_or;

  check_keys(j, "config", {"mesh"});
  if (!j.contains("mesh")) throw ConfigError("config needs 'mesh'");
  const auto& jm = j.at("mesh");
  check_keys(jm, "mesh", {"domain", "n", "refine", "write", "validate"});

  MeshSpec spec;
  if (jm.contains("validate")) {
    spec.validate = true;
    spec.validate_path = detail::get_as<std::string>(jm, "mesh", "validate");
    return spec;
  }
  spec.domain =
      parse_domain(get_or<std::string>(jm, "mesh", "domain", "square"));
  spec.n = get_or<int>(jm, "mesh", "n", 4);
  spec.refine = get_or<int>(jm, "mesh", "refine", 0);
  spec.write_name = get_or<std::string>(jm, "mesh", "write", "mesh.pxmesh");
  if (spec.n < 1) throw ConfigError("mesh n must be >= 1");
  if (spec.refine < 0) throw ConfigError("mesh refine must be >= 0");
  return spec;
}

}  // namespace pxfem
