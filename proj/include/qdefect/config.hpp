#pragma once

// JSON run configuration. Every key is optional and has a default; unknown
// keys are rejected with the offending path in the message.
//
// {
//   "grid":     {"N": 33},
//   "boundary": {"type": "hedgehog" | "uniform", "init": "radial" | "random_tangent",
//                "noise": 0.1, "seed": 1, "core_director": [0,0,1],
//                "director": [0,0,1], "min_beta_margin": 0.1},
//   "synthetic":{"case": "half_degree" | "exchange" | "vortex" | "x1x2" | "bent_line" | "uniform",
//                "axis": [0,0,1], "amplitude": 0.1, "lambda": 1.0, "k": 2, "kappa": 0.5},
//   "solver":   {"max_iters", "step0", "armijo_c", "shrink", "grad_tol", "energy_tol",
//                "max_step", "mode": "constrained" | "penalty", "lambda", "mu", "seed",
//                "checkpoint_every": 0, "resume": false},
//   "analysis": {"beta_threshold", "frame_tol", "s_min", "max_radius", "radii", "k_max",
//                "k_band", "k_residual_tol", "fit_radius", "lattice_spacing", "fit_tol",
//                "tol_parallel", "gram_tol", "jet_tol", "winding_points"},
//   "output":   {"dir": ".", "snapshot": "field.qfld", "trace": "trace.csv",
//                "report": "solver_report.json", "defects": "defects.json",
//                "beta_vtk": "beta.vtk", "s_vtk": "s.vtk", "checkpoint": "checkpoint.qfld"},
//   "threads": 1
// }

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "qdefect/defects.hpp"
#include "qdefect/minimize.hpp"

namespace qdefect {

struct BoundaryConfig {
  std::string type = "hedgehog";
  std::string init = "radial";
  double noise = 0.1;
  std::uint64_t seed = 1;
  Vec3 core_director = Vec3::UnitZ();
  Vec3 director = Vec3::UnitZ();
  double min_beta_margin = 0.1;
};

struct SyntheticConfig {
  std::string kind = "half_degree";
  Vec3 axis = Vec3::UnitZ();
  double amplitude = 0.1;
  double lambda = 1.0;
  int k = 2;
  double kappa = 0.5;
};

struct OutputConfig {
  std::string dir = ".";
  std::string snapshot = "field.qfld";
  std::string trace = "trace.csv";
  std::string report = "solver_report.json";
  std::string defects = "defects.json";
  std::string beta_vtk = "beta.vtk";
  std::string s_vtk = "s.vtk";
  std::string checkpoint = "checkpoint.qfld";

  std::string path(const std::string& name) const { return (std::filesystem::path(dir) / name).string(); }
};

struct RunConfig {
  int N = 33;
  BoundaryConfig boundary;
  SyntheticConfig synthetic;
  SolverConfig solver;
  int checkpoint_every = 0;
  bool resume = false;
  AnalysisConfig analysis;
  OutputConfig output;
  int threads = 1;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <class T>
void get(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad value for key '" + where + "." + key + "'");
  }
}

inline void get_vec(const json& j, const std::string& where, const char* key, Vec3& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
    throw Error(ErrorCode::InvalidConfig, "bad value for key '" + where + "." + key + "': expected 3 numbers");
  }
  out = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  if (out.norm() == 0.0) throw Error(ErrorCode::InvalidConfig, "key '" + where + "." + key + "' must be nonzero");
  out.normalize();
}

inline json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get;
  RunConfig c;
  check_keys(j, "", {"grid", "boundary", "synthetic", "solver", "analysis", "output", "threads"});
  if (j.contains("grid")) {
    check_keys(j["grid"], "grid", {"N"});
    get(j["grid"], "grid", "N", c.N);
  }
  if (j.contains("boundary")) {
    const auto& b = j["boundary"];
    check_keys(b, "boundary", {"type", "init", "noise", "seed", "core_director", "director", "min_beta_margin"});
    get(b, "boundary", "type", c.boundary.type);
    get(b, "boundary", "init", c.boundary.init);
    get(b, "boundary", "noise", c.boundary.noise);
    get(b, "boundary", "seed", c.boundary.seed);
    detail::get_vec(b, "boundary", "core_director", c.boundary.core_director);
    detail::get_vec(b, "boundary", "director", c.boundary.director);
    get(b, "boundary", "min_beta_margin", c.boundary.min_beta_margin);
  }
  if (j.contains("synthetic")) {
    const auto& s = j["synthetic"];
    check_keys(s, "synthetic", {"case", "axis", "amplitude", "lambda", "k", "kappa"});
    get(s, "synthetic", "case", c.synthetic.kind);
    detail::get_vec(s, "synthetic", "axis", c.synthetic.axis);
    get(s, "synthetic", "amplitude", c.synthetic.amplitude);
    get(s, "synthetic", "lambda", c.synthetic.lambda);
    get(s, "synthetic", "k", c.synthetic.k);
    get(s, "synthetic", "kappa", c.synthetic.kappa);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "solver", {"max_iters", "step0", "armijo_c", "shrink", "grad_tol", "energy_tol", "max_step", "mode",
                             "lambda", "mu", "seed", "checkpoint_every", "resume"});
    get(s, "solver", "max_iters", c.solver.max_iters);
    get(s, "solver", "step0", c.solver.step0);
    get(s, "solver", "armijo_c", c.solver.armijo_c);
    get(s, "solver", "shrink", c.solver.shrink);
    get(s, "solver", "grad_tol", c.solver.grad_tol);
    get(s, "solver", "energy_tol", c.solver.energy_tol);
    get(s, "solver", "max_step", c.solver.max_step);
    std::string mode = "constrained";
    get(s, "solver", "mode", mode);
    if (mode == "constrained") {
      c.solver.mode = SolverMode::constrained;
    } else if (mode == "penalty") {
      c.solver.mode = SolverMode::penalty;
    } else {
      throw Error(ErrorCode::InvalidConfig, "bad value for key 'solver.mode'");
    }
    get(s, "solver", "lambda", c.solver.lambda);
    get(s, "solver", "mu", c.solver.mu);
    get(s, "solver", "seed", c.solver.seed);
    get(s, "solver", "checkpoint_every", c.checkpoint_every);
    get(s, "solver", "resume", c.resume);
  }
  if (j.contains("analysis")) {
    const auto& a = j["analysis"];
    check_keys(a, "analysis", {"beta_threshold", "frame_tol", "s_min", "max_radius", "radii", "k_max", "k_band",
                               "k_residual_tol", "fit_radius", "lattice_spacing", "fit_tol", "tol_parallel",
                               "gram_tol", "jet_tol", "winding_points"});
    auto& A = c.analysis;
    get(a, "analysis", "beta_threshold", A.beta_threshold);
    get(a, "analysis", "frame_tol", A.frame_tol);
    get(a, "analysis", "s_min", A.s_min);
    get(a, "analysis", "max_radius", A.max_radius);
    get(a, "analysis", "radii", A.radii);
    get(a, "analysis", "k_max", A.k_max);
    get(a, "analysis", "k_band", A.k_band);
    get(a, "analysis", "k_residual_tol", A.k_residual_tol);
    get(a, "analysis", "fit_radius", A.fit_radius);
    get(a, "analysis", "lattice_spacing", A.lattice_spacing);
    get(a, "analysis", "fit_tol", A.fit_tol);
    get(a, "analysis", "tol_parallel", A.tol_parallel);
    get(a, "analysis", "gram_tol", A.gram_tol);
    get(a, "analysis", "jet_tol", A.jet_tol);
    get(a, "analysis", "winding_points", A.winding_points);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, "output", {"dir", "snapshot", "trace", "report", "defects", "beta_vtk", "s_vtk", "checkpoint"});
    get(o, "output", "dir", c.output.dir);
    get(o, "output", "snapshot", c.output.snapshot);
    get(o, "output", "trace", c.output.trace);
    get(o, "output", "report", c.output.report);
    get(o, "output", "defects", c.output.defects);
    get(o, "output", "beta_vtk", c.output.beta_vtk);
    get(o, "output", "s_vtk", c.output.s_vtk);
    get(o, "output", "checkpoint", c.output.checkpoint);
  }
  get(j, "", "threads", c.threads);

  if (c.N < 9 || c.N % 2 == 0) throw Error(ErrorCode::InvalidConfig, "bad value for key 'grid.N': must be odd and >= 9");
  if (c.boundary.type != "hedgehog" && c.boundary.type != "uniform") {
    throw Error(ErrorCode::InvalidConfig, "bad value for key 'boundary.type'");
  }
  if (c.boundary.init != "radial" && c.boundary.init != "random_tangent") {
    throw Error(ErrorCode::InvalidConfig, "bad value for key 'boundary.init'");
  }
  static const std::set<std::string> cases{"half_degree", "exchange", "vortex", "x1x2", "bent_line", "uniform"};
  if (!cases.count(c.synthetic.kind)) throw Error(ErrorCode::InvalidConfig, "bad value for key 'synthetic.case'");
  if (c.analysis.radii.size() < 2) throw Error(ErrorCode::InvalidConfig, "key 'analysis.radii' needs >= 2 entries");
  if (c.threads < 1) throw Error(ErrorCode::InvalidConfig, "bad value for key 'threads'");
  if (c.checkpoint_every < 0) throw Error(ErrorCode::InvalidConfig, "bad value for key 'solver.checkpoint_every'");
  c.solver.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Fully expanded configuration (defaults filled in).
inline nlohmann::json config_json(const RunConfig& c) {
  using detail::vec_json;
  const auto& A = c.analysis;
  const auto& S = c.solver;
  return {
      {"grid", {{"N", c.N}}},
      {"boundary",
       {{"type", c.boundary.type}, {"init", c.boundary.init}, {"noise", c.boundary.noise}, {"seed", c.boundary.seed},
        {"core_director", vec_json(c.boundary.core_director)}, {"director", vec_json(c.boundary.director)},
        {"min_beta_margin", c.boundary.min_beta_margin}}},
      {"synthetic",
       {{"case", c.synthetic.kind}, {"axis", vec_json(c.synthetic.axis)}, {"amplitude", c.synthetic.amplitude},
        {"lambda", c.synthetic.lambda}, {"k", c.synthetic.k}, {"kappa", c.synthetic.kappa}}},
      {"solver",
       {{"max_iters", S.max_iters}, {"step0", S.step0}, {"armijo_c", S.armijo_c}, {"shrink", S.shrink},
        {"grad_tol", S.grad_tol}, {"energy_tol", S.energy_tol}, {"max_step", S.max_step},
        {"mode", S.mode == SolverMode::constrained ? "constrained" : "penalty"}, {"lambda", S.lambda}, {"mu", S.mu},
        {"seed", S.seed}, {"checkpoint_every", c.checkpoint_every}, {"resume", c.resume}}},
      {"analysis",
       {{"beta_threshold", A.beta_threshold}, {"frame_tol", A.frame_tol}, {"s_min", A.s_min},
        {"max_radius", A.max_radius}, {"radii", A.radii}, {"k_max", A.k_max}, {"k_band", A.k_band},
        {"k_residual_tol", A.k_residual_tol}, {"fit_radius", A.fit_radius}, {"lattice_spacing", A.lattice_spacing},
        {"fit_tol", A.fit_tol}, {"tol_parallel", A.tol_parallel}, {"gram_tol", A.gram_tol}, {"jet_tol", A.jet_tol},
        {"winding_points", A.winding_points}}},
      {"output",
       {{"dir", c.output.dir}, {"snapshot", c.output.snapshot}, {"trace", c.output.trace},
        {"report", c.output.report}, {"defects", c.output.defects}, {"beta_vtk", c.output.beta_vtk},
        {"s_vtk", c.output.s_vtk}, {"checkpoint", c.output.checkpoint}}},
      {"threads", c.threads}};
}

/// FNV-1a 64 of the canonical (sorted-key) dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t hsh = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_json(c).dump()) {
    hsh ^= ch;
    hsh *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hsh));
  return buf;
}

}  // namespace qdefect
