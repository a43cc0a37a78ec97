#pragma once

// Projected gradient descent on the product of unit spheres (one S^4 per
// interior node), or plain descent on the penalty energy. Trial steps come
// from the Barzilai-Borwein formula and are accepted by Armijo backtracking,
// so the recorded energy never increases.

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdefect/energy.hpp"
#include "qdefect/field_io.hpp"

namespace qdefect {

enum class SolverMode { constrained, penalty };

struct SolverConfig {
  int max_iters = 5000;
  double step0 = 0.5;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double grad_tol = 1e-5;
  double energy_tol = 1e-15;
  double max_step = 1e3;
  SolverMode mode = SolverMode::constrained;
  double lambda = 1.0;  // penalty mode only
  double mu = 1e3;      // penalty mode only
  std::uint64_t seed = 1;

  void validate() const {
    if (max_iters < 0) throw Error(ErrorCode::InvalidConfig, "solver.max_iters must be >= 0");
    if (!(step0 > 0.0) || !(grad_tol > 0.0) || !(energy_tol > 0.0) || !(max_step > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "solver steps and tolerances must be > 0");
    }
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw Error(ErrorCode::InvalidConfig, "solver.armijo_c must lie in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::InvalidConfig, "solver.shrink must lie in (0, 1)");
    if (mode == SolverMode::penalty && !(mu > 0.0 && lambda > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "penalty mode needs lambda, mu > 0");
    }
  }
};

struct TraceEntry {
  int iter = 0;
  double dirichlet = 0.0;
  double potential = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
};

/// Everything besides the field needed to continue a run bit-exactly.
struct SolverState {
  int iteration = 0;
  double next_step = 0.0;  // 0 means cfg.step0
};

enum class StopReason { grad_tol, energy_tol, max_iters };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::grad_tol: return "grad_tol";
    case StopReason::energy_tol: return "energy_tol";
    case StopReason::max_iters: return "max_iters";
  }
  return "unknown";
}

struct SolverReport {
  int iterations = 0;
  EnergyBreakdown energy;
  double grad_sup = 0.0;
  bool monotone = true;
  bool converged = false;
  StopReason reason = StopReason::max_iters;
  double max_norm_deviation = 0.0;
  double wall_seconds = 0.0;
  SolverState state;
  std::vector<TraceEntry> trace;
};

using CheckpointHook = std::function<void(const QField&, const SolverState&)>;

namespace detail {

inline EnergyBreakdown solver_energy(const QField& f, const SolverConfig& cfg) {
  if (cfg.mode == SolverMode::constrained) return constrained_energy_unchecked(f);
  EnergyBreakdown e;
  e.dirichlet = dirichlet_energy(f);
  e.total = full_energy(f, cfg.lambda, cfg.mu);
  e.potential = e.total - e.dirichlet;
  return e;
}

inline std::vector<Vec5> solver_gradient(const QField& f, const SolverConfig& cfg) {
  return cfg.mode == SolverMode::constrained ? energy_gradient(f) : full_energy_gradient(f, cfg.lambda, cfg.mu);
}

inline void take_step(const QField& from, const std::vector<Vec5>& g, double alpha, SolverMode mode, QField& to) {
  const GridSpec& spec = from.spec();
  for_each_slab(spec.N, [&](int i) {
    for (int j = 0; j < spec.N; ++j)
      for (int k = 0; k < spec.N; ++k) {
        const std::size_t a = spec.index(i, j, k);
        if (from.role(a) != NodeRole::interior) continue;
        Vec5 c = from[a].coeffs() - alpha * g[a];
        if (mode == SolverMode::constrained) c /= c.norm();
        to[a] = QTensor(c);
      }
  });
}

inline double dot_all(const std::vector<Vec5>& a, const std::vector<Vec5>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

inline double sup_norm(const std::vector<Vec5>& g) {
  double m = 0.0;
  for (const auto& v : g) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace detail

/// Minimizes in place. `state` resumes a previous run; `hook` is called with
/// the accepted iterate every `checkpoint_every` iterations (0 disables).
inline SolverReport minimize(QField& field, const SolverConfig& cfg, SolverState state = {},
                             const CheckpointHook& hook = {}, int checkpoint_every = 0) {
  cfg.validate();
  if (cfg.mode == SolverMode::constrained) detail::require_unit_field(field);
  const auto t0 = std::chrono::steady_clock::now();
  SolverReport rep;
  if (state.next_step <= 0.0) state.next_step = cfg.step0;

  EnergyBreakdown e = detail::solver_energy(field, cfg);
  if (!std::isfinite(e.total)) throw Error(ErrorCode::NonFiniteEnergy, "initial energy is not finite");
  std::vector<Vec5> g = detail::solver_gradient(field, cfg);
  QField trial = field;

  while (true) {
    const double gsup = detail::sup_norm(g);
    rep.trace.push_back({state.iteration, e.dirichlet, e.potential, e.total, gsup});
    if (gsup <= cfg.grad_tol) {
      rep.converged = true;
      rep.reason = StopReason::grad_tol;
      break;
    }
    if (state.iteration >= cfg.max_iters) {
      rep.reason = StopReason::max_iters;
      break;
    }
    const double g2 = detail::dot_all(g, g);
    double alpha = state.next_step;
    EnergyBreakdown e_new;
    while (true) {
      detail::take_step(field, g, alpha, cfg.mode, trial);
      e_new = detail::solver_energy(trial, cfg);
      if (!std::isfinite(e_new.total)) throw Error(ErrorCode::NonFiniteEnergy, "energy became non-finite");
      if (e_new.total <= e.total - cfg.armijo_c * alpha * g2) break;
      alpha *= cfg.shrink;
      if (alpha < 1e-14) throw Error(ErrorCode::LineSearchStall, "step size underflow in line search");
    }
    std::vector<Vec5> g_new = detail::solver_gradient(trial, cfg);

    // Barzilai-Borwein step from the displacement and gradient change.
    double ss = 0.0, sy = 0.0;
    for (std::size_t a = 0; a < field.size(); ++a) {
      if (field.role(a) != NodeRole::interior) continue;
      const Vec5 s = trial[a].coeffs() - field[a].coeffs();
      ss += s.squaredNorm();
      sy += s.dot(g_new[a] - g[a]);
    }
    state.next_step = sy > 0.0 ? std::min(ss / sy, cfg.max_step) : std::min(alpha / cfg.shrink, cfg.max_step);

    if (e_new.total > e.total) rep.monotone = false;
    const double de = e.total - e_new.total;
    std::swap(field.values(), trial.values());
    g = std::move(g_new);
    e = e_new;
    ++state.iteration;
    if (hook && checkpoint_every > 0 && state.iteration % checkpoint_every == 0) hook(field, state);
    if (de <= cfg.energy_tol * std::max(1.0, std::abs(e.total))) {
      rep.trace.push_back({state.iteration, e.dirichlet, e.potential, e.total, detail::sup_norm(g)});
      rep.converged = detail::sup_norm(g) <= cfg.grad_tol;
      rep.reason = StopReason::energy_tol;
      break;
    }
  }
  rep.iterations = state.iteration;
  rep.energy = e;
  rep.grad_sup = detail::sup_norm(g);
  rep.state = state;
  rep.max_norm_deviation = field.max_norm_deviation();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline void write_trace_csv(const std::vector<TraceEntry>& trace, std::ostream& out) {
  out << "iter,dirichlet,potential,total,grad_norm\n";
  out.precision(17);
  for (const auto& t : trace) {
    out << t.iter << ',' << t.dirichlet << ',' << t.potential << ',' << t.total << ',' << t.grad_norm << '\n';
  }
}

inline nlohmann::json report_json(const SolverReport& r) {
  return {{"status", "critical point"},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"stop_reason", to_string(r.reason)},
          {"energy", {{"dirichlet", r.energy.dirichlet}, {"potential", r.energy.potential}, {"total", r.energy.total}}},
          {"grad_sup", r.grad_sup},
          {"monotone", r.monotone},
          {"max_norm_deviation", r.max_norm_deviation},
          {"wall_seconds", r.wall_seconds}};
}

inline nlohmann::json state_json(const SolverState& s) {
  return {{"iteration", s.iteration}, {"next_step", s.next_step}};
}

inline SolverState state_from_json(const nlohmann::json& j) {
  SolverState s;
  s.iteration = j.at("iteration").get<int>();
  s.next_step = j.at("next_step").get<double>();
  return s;
}

/// Snapshot with a trailer holding the solver state and the run config.
inline void checkpoint(const QField& f, const std::string& path, const SolverState& state,
                       const nlohmann::json& cfg = nlohmann::json::object()) {
  save_snapshot(f, path, nlohmann::json{{"state", state_json(state)}, {"config", cfg}});
}

struct Resumed {
  QField field;
  SolverState state;
  nlohmann::json config;
};

inline Resumed resume(const std::string& path) {
  Snapshot snap = load_snapshot(path);
  Resumed r{std::move(snap.field), {}, nlohmann::json::object()};
  if (snap.checkpoint) {
    try {
      r.state = state_from_json(snap.checkpoint->at("state"));
      r.config = snap.checkpoint->value("config", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CorruptSnapshot, std::string("checkpoint state: ") + e.what());
    }
  }
  return r;
}

}  // namespace qdefect
