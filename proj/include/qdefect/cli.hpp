#pragma once

// Subcommands behind tools/qdefect. Each returns the process exit code:
// 0 success, 1 usage/config/IO error, 2 solver did not converge.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qdefect/config.hpp"

namespace qdefect {

struct CliOptions {
  std::string config;
  std::string snapshot;
  std::string out_dir;
  int threads = 0;  // 0 keeps the config value
  double tau_scale = 1.0;
};

namespace detail {

inline RunConfig cli_config(const CliOptions& o) {
  RunConfig c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
  if (!o.out_dir.empty()) c.output.dir = o.out_dir;
  if (o.threads > 0) c.threads = o.threads;
  set_thread_count(c.threads);
  return c;
}

inline void ensure_dir(const OutputConfig& o) {
  std::error_code ec;
  std::filesystem::create_directories(o.dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + o.dir);
}

inline void write_json(const nlohmann::json& j, const std::string& path) { write_file(path, j.dump(2) + "\n"); }

inline QField boundary_field(const RunConfig& c) {
  const GridSpec g(c.N);
  if (c.boundary.type == "uniform") return uniform_field(g, c.boundary.director);
  HedgehogInit init;
  init.rule = c.boundary.init == "random_tangent" ? InitRule::random_tangent : InitRule::radial;
  init.noise = c.boundary.noise;
  init.seed = c.boundary.seed;
  init.core_director = c.boundary.core_director;
  return hedgehog_boundary(g, init);
}

inline void check_boundary_margin(const QField& f, double margin) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.role(i) == NodeRole::shell && biaxiality(f[i]) < -1.0 + margin) {
      throw Error(ErrorCode::InvalidConfig, "boundary data violates min beta >= -1 + boundary.min_beta_margin");
    }
  }
}

inline QField synthetic_from_config(const RunConfig& c) {
  const GridSpec g(c.N);
  const SyntheticConfig& s = c.synthetic;
  if (s.kind == "half_degree") return synthetic_disclination(g, s.axis, s.amplitude, DisclinationCase::half());
  if (s.kind == "exchange") return synthetic_disclination(g, s.axis, s.amplitude, DisclinationCase::exch(s.lambda));
  if (s.kind == "vortex") return synthetic_vortex(g, s.axis, s.amplitude, s.k);
  if (s.kind == "x1x2") return synthetic_x1x2(g, s.amplitude);
  if (s.kind == "bent_line") return synthetic_bent_line(g, s.amplitude, s.kappa);
  return uniform_field(g, s.axis);
}

template <class Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace detail

inline int cmd_minimize(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunConfig c = detail::cli_config(o);
    detail::ensure_dir(c.output);
    const std::string ckpt = c.output.path(c.output.checkpoint);
    QField field;
    SolverState state;
    if (c.resume && std::filesystem::exists(ckpt)) {
      Resumed r = resume(ckpt);
      field = std::move(r.field);
      state = r.state;
      if (field.spec().N != c.N) throw Error(ErrorCode::InvalidConfig, "checkpoint grid does not match grid.N");
    } else {
      field = detail::boundary_field(c);
    }
    detail::check_boundary_margin(field, c.boundary.min_beta_margin);
    const nlohmann::json cj = config_json(c);
    auto hook = [&](const QField& f, const SolverState& s) { checkpoint(f, ckpt, s, cj); };

    SolverReport rep;
    int code = 0;
    try {
      rep = minimize(field, c.solver, state, hook, c.checkpoint_every);
      code = rep.converged ? 0 : 2;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LineSearchStall) throw;
      err << "error: " << e.what() << "\n";
      return 2;
    }
    checkpoint(field, c.output.path(c.output.snapshot), rep.state, cj);
    {
      std::ofstream csv(c.output.path(c.output.trace));
      if (!csv) throw Error(ErrorCode::Io, "cannot write " + c.output.path(c.output.trace));
      write_trace_csv(rep.trace, csv);
    }
    nlohmann::json rj = report_json(rep);
    rj["config_hash"] = config_hash(c);
    detail::write_json(rj, c.output.path(c.output.report));
    out << "minimize: " << to_string(rep.reason) << " after " << rep.iterations << " iterations, energy "
        << std::setprecision(12) << rep.energy.total << ", grad sup " << rep.grad_sup << "\n";
    return code;
  });
}

inline int cmd_analyze(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (o.snapshot.empty()) throw Error(ErrorCode::InvalidArgument, "analyze needs --snapshot");
    const RunConfig c = detail::cli_config(o);
    const QField field = load_snapshot(o.snapshot).field;
    detail::ensure_dir(c.output);
    const auto cands = analyze(field, c.analysis);
    detail::write_json(report_json(cands, config_hash(c)), c.output.path(c.output.defects));
    write_vtk(beta_field(field), "beta", c.output.path(c.output.beta_vtk));
    write_vtk(s_field(field), "s", c.output.path(c.output.s_vtk));
    out << "analyze: " << cands.size() << " candidate(s)\n";
    return 0;
  });
}

inline int cmd_synthesize(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunConfig c = detail::cli_config(o);
    std::string path = o.snapshot;
    if (path.empty()) {
      detail::ensure_dir(c.output);
      path = c.output.path(c.output.snapshot);
    }
    save_snapshot(detail::synthetic_from_config(c), path);
    out << "synthesize: wrote " << path << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// verify

namespace detail {

struct Check {
  std::string name;
  bool pass = false;
};

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

inline QTensor random_qtensor(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return QTensor(n(rng), n(rng), n(rng), n(rng), n(rng));
}

/// Roots of det(Q - tI) by bisection on the three separated brackets.
inline Vec3 bisection_eigenvalues(const Mat3& q) {
  const double nq = q.norm();
  if (nq < 1e-300) return Vec3::Zero();
  const double c = q.determinant(), b = 0.5 * q.squaredNorm();
  auto f = [&](double t) { return -t * t * t + b * t + c; };
  auto root = [&](double lo, double hi) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  const double a = nq / std::sqrt(6.0);
  return Vec3(root(a, nq), root(-a, a), root(-nq, -a));
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

inline std::vector<Check> run_verify(double tau_scale) {
  std::vector<Check> out;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  {
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 n = random_unit(rng);
      ok &= std::abs(biaxiality(make_uniaxial(n, Uniaxial::positive)) - 1.0) <= 1e-12;
      ok &= std::abs(biaxiality(make_uniaxial(n, Uniaxial::negative)) + 1.0) <= 1e-12;
    }
    out.push_back({"biaxiality_extremes", ok});
  }
  {
    bool ok = true;
    for (int i = 0; i < 2000; ++i) {
      const QTensor q = random_qtensor(rng);
      const EigenSystem es = eigen_decompose(q);
      ok &= (es.values - bisection_eigenvalues(q.matrix())).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, q.norm());
      ok &= (es.reconstruct() - q.matrix()).norm() <= 1e-10 * std::max(1.0, q.norm());
    }
    out.push_back({"spectral_oracle", ok});
  }
  {
    bool ok = true;
    for (int i = 0; i <= 10000; ++i) {
      const double d = kSqrt6 / 6.0 * i / 10000.0;
      const SplitEigenvalues sp = split_from_delta(d);
      ok &= std::abs(sp.s + sp.r + sp.delta) <= 1e-13;
      ok &= std::abs(sp.s * sp.s + sp.r * sp.r + sp.delta * sp.delta + kSqrt6 / 3.0 * (sp.s + sp.r - 2 * sp.delta)) <= 1e-12;
    }
    out.push_back({"split_identities", ok});
  }
  {
    bool ok = true;
    for (int i = 0; i <= 1000; ++i) {
      const double s = kSMax * i / 1000.0;
      ok &= std::abs(split_from_delta(delta_from_s(s)).s - s) <= 1e-12;
    }
    out.push_back({"delta_roundtrip", ok});
  }
  {
    bool ok = true;
    for (int i = 1; i <= 100; ++i) {
      const double s = 0.05 + 0.35 * i / 100.0;
      const double direct = delta_from_s(s) - kSqrt6 / 3.0 * s * s;
      ok &= std::abs(tau_scale * tau(s) - direct) <= 1e-10 * std::abs(direct);
    }
    std::vector<double> xs{1e-3, 2e-3, 4e-3}, ys;
    for (double s : xs) ys.push_back(std::abs(tau_scale * tau(s)));
    ok &= loglog_slope(xs, ys) >= 2.9;
    out.push_back({"tau_closed_form", ok});
  }
  {
    bool ok = true;
    for (int i = 0; i < 2000; ++i) {
      const Vec3 p = random_unit(rng);
      const Mat3 v = random_qtensor(rng).matrix() + unif(rng) * Mat3::Identity();
      const Mat3 y = project_to_Up_matrix(v, p);
      const PlaneFrame fr = PlaneFrame::complete(p);
      ok &= (y * p).norm() <= 1e-12 && std::abs(y.trace()) <= 1e-12;
      ok &= (project_to_Up_matrix(y, p) - y).norm() <= 1e-12;
      ok &= std::abs((v - y).cwiseProduct(fr.E1()).sum()) <= 1e-12 && std::abs((v - y).cwiseProduct(fr.E2()).sum()) <= 1e-12;
    }
    out.push_back({"projection_contract", ok});
  }
  {
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 p = random_unit(rng);
      const PlaneFrame fr = PlaneFrame::complete(p);
      const double phi = 2 * std::numbers::pi * unif(rng);
      const Vec3 n = std::cos(phi) * fr.e1 + std::sin(phi) * fr.e2;
      const double s = 0.01 + 0.2 * unif(rng);
      const Decomposition d = decompose(reconstruct(p, s, n));
      ok &= std::abs(d.s - s) <= 1e-9 && 1.0 - std::abs(d.p.dot(p)) <= 1e-9 && 1.0 - std::abs(d.n.dot(n)) <= 1e-9;
      ok &= d.R.norm() <= 3.0 * s * s;
    }
    out.push_back({"decompose_roundtrip", ok});
  }
  {
    bool ok = true;
    for (double s : {1e-3, 1e-2, 0.05, 0.1, 0.2}) {
      const double beta = biaxiality(reconstruct(Vec3::UnitZ(), s, Vec3::UnitX()));
      ok &= std::abs(beta - (-1.0 + 9.0 * s * s)) <= 10.0 * s * s * s;
    }
    out.push_back({"beta_expansion", ok});
  }
  {
    const GridSpec g(9);
    QField f = hedgehog_boundary(g, {InitRule::random_tangent, Vec3::UnitZ(), 0.3, 7});
    const auto grad = energy_gradient(f);
    bool ok = true;
    for (int t = 0; t < 5; ++t) {
      std::vector<Vec5> v(f.size(), Vec5::Zero());
      std::normal_distribution<double> n(0.0, 1.0);
      for (std::size_t a = 0; a < f.size(); ++a) {
        if (!f.is_interior(a)) continue;
        for (int c = 0; c < 5; ++c) v[a][c] = n(rng);
        v[a] -= v[a].dot(f[a].coeffs()) * f[a].coeffs();
      }
      const double eps = 1e-6;
      QField fp = f, fm = f;
      for (std::size_t a = 0; a < f.size(); ++a) {
        fp[a] = QTensor(f[a].coeffs() + eps * v[a]);
        fm[a] = QTensor(f[a].coeffs() - eps * v[a]);
      }
      const double fd = (constrained_energy_unchecked(fp).total - constrained_energy_unchecked(fm).total) / (2 * eps);
      double an = 0.0;
      for (std::size_t a = 0; a < f.size(); ++a) an += grad[a].dot(v[a]);
      ok &= std::abs(fd - an) <= 1e-6 * std::abs(an);
    }
    out.push_back({"gradient_fidelity", ok});
  }
  {
    const GridSpec g(17);
    std::vector<double> amps{0.02, 0.04, 0.08}, res;
    for (double a : amps) {
      const QField f = synthetic_disclination(g, Vec3::UnitZ(), a, DisclinationCase::half());
      double worst = 0.0;
      const int c = (g.N - 1) / 2;
      for (int i = c - 4; i <= c + 4; ++i)
        for (int j = c - 4; j <= c + 4; ++j)
          for (int k = c - 4; k <= c + 4; ++k) worst = std::max(worst, expansion_defect(f, i, j, k));
      res.push_back(worst);
    }
    out.push_back({"energy_expansion_order", loglog_slope(amps, res) >= 2.7});
  }
  return out;
}

}  // namespace detail

inline int cmd_verify(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto checks = detail::run_verify(o.tau_scale);
    bool all = true;
    for (const auto& c : checks) {
      out << (c.pass ? "PASS " : "FAIL ") << c.name << "\n";
      all &= c.pass;
    }
    out << (all ? "verify: all properties hold\n" : "verify: failures present\n");
    return all ? 0 : 1;
  });
}

}  // namespace qdefect
