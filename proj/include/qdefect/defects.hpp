#pragma once

// Defect analysis: biaxiality scan, candidate detection, winding numbers,
// vanishing order, blow-up sampling, tangent-map fits and classification,
// the V_m / Y_m construction and the tangent-line (cone angle) profile.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdefect/energy.hpp"
#include "qdefect/field.hpp"
#include "qdefect/polynomial.hpp"

namespace qdefect {

struct AnalysisConfig {
  double beta_threshold = 0.05;
  double frame_tol = 0.2;
  double s_min = 1e-3;
  double max_radius = 0.9;
  std::vector<double> radii{0.4, 0.28, 0.2, 0.14, 0.1};
  int k_max = 4;
  double k_band = 0.2;
  double k_residual_tol = 0.1;
  double fit_radius = 0.25;
  double lattice_spacing = 0.125;
  double fit_tol = 0.15;
  double tol_parallel = 0.05;
  double gram_tol = 0.05;
  double jet_tol = 0.1;
  int winding_points = 64;
};

// ---------------------------------------------------------------------------
// Scalar scans

inline ScalarField beta_field(const QField& f) {
  ScalarField out{f.spec(), std::vector<double>(f.size(), 0.0), f.roles()};
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.role(i) != NodeRole::exterior && f[i].norm() > 1e-12) out.values[i] = biaxiality(f[i]);
  }
  return out;
}

/// s = lambda1 - sqrt6/6 at every non-exterior node.
inline ScalarField s_field(const QField& f) {
  ScalarField out{f.spec(), std::vector<double>(f.size(), 0.0), f.roles()};
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.role(i) != NodeRole::exterior) out.values[i] = eigen_decompose(f[i]).values[0] - kSqrt6 / 6.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection

struct Cluster {
  std::vector<std::size_t> nodes;
  std::size_t representative = 0;
  bool has_representative = false;
};

struct DefectCandidate {
  Vec3 position = Vec3::Zero();
  double beta_min = -1.0;
  std::size_t cluster_size = 0;
  bool is_defect = false;
  double frame_jump = 0.0;
  double k_hat = 0.0;
  std::optional<int> k;
  double regression_residual = 0.0;
  std::string classification = "unresolved";
  std::optional<Vec3> axis;
  std::optional<double> winding;
  std::optional<double> fit_residual;
  std::optional<double> ek_residual;
  std::string note;
};

/// 6-connected clusters of interior nodes with beta < -1 + threshold.
inline std::vector<Cluster> find_clusters(const QField& f, const ScalarField& beta, const AnalysisConfig& cfg) {
  const GridSpec& g = f.spec();
  std::vector<char> mark(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    mark[i] = f.role(i) == NodeRole::interior && beta[i] < -1.0 + cfg.beta_threshold;
  }
  std::vector<Cluster> out;
  const double tie = 1e-2 * cfg.beta_threshold;
  for (std::size_t seed = 0; seed < f.size(); ++seed) {
    if (mark[seed] != 1) continue;
    Cluster c;
    std::queue<std::size_t> todo;
    todo.push(seed);
    mark[seed] = 2;
    while (!todo.empty()) {
      const std::size_t a = todo.front();
      todo.pop();
      c.nodes.push_back(a);
      const auto [i, j, k] = g.ijk(a);
      const int nb[6][3] = {{i + 1, j, k}, {i - 1, j, k}, {i, j + 1, k}, {i, j - 1, k}, {i, j, k + 1}, {i, j, k - 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= g.N || n[1] >= g.N || n[2] >= g.N) continue;
        const std::size_t b = g.index(n[0], n[1], n[2]);
        if (mark[b] == 1) {
          mark[b] = 2;
          todo.push(b);
        }
      }
    }
    std::sort(c.nodes.begin(), c.nodes.end());
    double best = 2.0;
    for (std::size_t a : c.nodes) {
      if (g.position(a).norm() <= cfg.max_radius + 1e-12) best = std::min(best, beta[a]);
    }
    double best_r = 1e300;
    for (std::size_t a : c.nodes) {
      const double r = g.position(a).norm();
      if (r > cfg.max_radius + 1e-12 || beta[a] > best + tie) continue;
      if (r < best_r) {
        best_r = r;
        c.representative = a;
        c.has_representative = true;
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace detail {

inline Eigen::Vector3d clamp_step(Eigen::Vector3d step, double h) {
  const double n = step.norm();
  if (n > h) step *= h / n;
  return step;
}

/// Newton step from a pseudo-inverse of the positive part of H.
template <int D>
Eigen::Matrix<double, D, 1> pinv_step(const Eigen::Matrix<double, D, D>& H, const Eigen::Matrix<double, D, 1>& gr) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> es(H);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::Matrix<double, D, 1> step = Eigen::Matrix<double, D, 1>::Zero();
  for (int a = 0; a < D; ++a) {
    const double l = es.eigenvalues()[a];
    if (l > 1e-8 * top && l > 0.0) step -= es.eigenvectors().col(a) * (es.eigenvectors().col(a).dot(gr) / l);
  }
  return step;
}

}  // namespace detail

/// Quadratic model of beta around an interior node; returns (offset, value).
inline std::pair<Vec3, double> refine_minimum(const ScalarField& beta, int i, int j, int k) {
  const GridSpec& g = beta.spec;
  const double h = g.h();
  auto b = [&](int di, int dj, int dk) { return beta[g.index(i + di, j + dj, k + dk)]; };
  const double b0 = b(0, 0, 0);
  Vec3 gr;
  Mat3 H;
  const int e[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int a = 0; a < 3; ++a) {
    gr[a] = (b(e[a][0], e[a][1], e[a][2]) - b(-e[a][0], -e[a][1], -e[a][2])) / (2.0 * h);
    H(a, a) = (b(e[a][0], e[a][1], e[a][2]) - 2.0 * b0 + b(-e[a][0], -e[a][1], -e[a][2])) / (h * h);
    for (int c = a + 1; c < 3; ++c) {
      const int pp = 1, mm = -1;
      auto bb = [&](int sa, int sc) {
        return b(sa * e[a][0] + sc * e[c][0], sa * e[a][1] + sc * e[c][1], sa * e[a][2] + sc * e[c][2]);
      };
      H(a, c) = H(c, a) = (bb(pp, pp) - bb(pp, mm) - bb(mm, pp) + bb(mm, mm)) / (4.0 * h * h);
    }
  }
  const Vec3 step = detail::clamp_step(detail::pinv_step<3>(H, gr), h);
  const double value = std::max(-1.0, b0 + gr.dot(step) + 0.5 * step.dot(H * step));
  return {step, value};
}

/// Largest pairwise unordered frame distance in the 3x3x3 block around a node,
/// ignoring nodes with s < s_min where the frame is not determined.
inline double local_frame_jump(const QField& f, std::size_t node, double s_min) {
  const GridSpec& g = f.spec();
  const auto [i, j, k] = g.ijk(node);
  std::vector<EigenSystem> frames;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        const int a = i + di, b = j + dj, c = k + dk;
        if (a < 0 || b < 0 || c < 0 || a >= g.N || b >= g.N || c >= g.N) continue;
        const std::size_t idx = g.index(a, b, c);
        if (f.role(idx) == NodeRole::exterior) continue;
        const EigenSystem es = eigen_decompose(f[idx]);
        if (es.values[0] - kSqrt6 / 6.0 < s_min) continue;
        if (es.values[1] - es.values[2] < 1e-6) continue;
        frames.push_back(es);
      }
  double jump = 0.0;
  for (std::size_t a = 0; a < frames.size(); ++a)
    for (std::size_t b = a + 1; b < frames.size(); ++b) jump = std::max(jump, frame_distance_unordered(frames[a], frames[b]));
  return jump;
}

/// One candidate per cluster with a representative inside |x| <= max_radius.
inline std::vector<DefectCandidate> detect_candidates(const QField& f, const AnalysisConfig& cfg = {}) {
  const ScalarField beta = beta_field(f);
  std::vector<DefectCandidate> out;
  for (const Cluster& c : find_clusters(f, beta, cfg)) {
    if (!c.has_representative) continue;
    const auto [i, j, k] = f.spec().ijk(c.representative);
    const auto [step, value] = refine_minimum(beta, i, j, k);
    DefectCandidate d;
    d.position = f.spec().position(c.representative) + step;
    d.beta_min = value;
    d.cluster_size = c.nodes.size();
    d.frame_jump = local_frame_jump(f, c.representative, cfg.s_min);
    d.is_defect = d.frame_jump > cfg.frame_tol;
    out.push_back(d);
  }
  return out;
}

/// Principal direction of a node set.
inline Vec3 principal_direction(const GridSpec& g, const std::vector<std::size_t>& nodes) {
  Vec3 mean = Vec3::Zero();
  for (std::size_t a : nodes) mean += g.position(a);
  mean /= static_cast<double>(nodes.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t a : nodes) {
    const Vec3 d = g.position(a) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return es.eigenvectors().col(2);
}

/// Sub-grid core points of a line-like cluster: one refined beta minimum per
/// connected component of each grid slice transverse to the cluster.
inline std::vector<Vec3> core_points(const QField& f, const ScalarField& beta, const Cluster& c) {
  const GridSpec& g = f.spec();
  const double h = g.h();
  const Vec3 dir = principal_direction(g, c.nodes);
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (std::abs(dir[a]) > std::abs(dir[axis])) axis = a;
  }
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  std::map<int, std::vector<std::size_t>> slices;
  for (std::size_t a : c.nodes) slices[g.ijk(a)[axis]].push_back(a);

  std::vector<Vec3> out;
  for (auto& [slice, nodes] : slices) {
    std::map<std::size_t, char> in;
    for (std::size_t a : nodes) in[a] = 1;
    for (std::size_t seed : nodes) {
      if (in[seed] != 1) continue;
      std::vector<std::size_t> comp;
      std::queue<std::size_t> todo;
      todo.push(seed);
      in[seed] = 2;
      while (!todo.empty()) {
        const std::size_t a = todo.front();
        todo.pop();
        comp.push_back(a);
        const auto ijk = g.ijk(a);
        for (int t : {u, v})
          for (int sgn : {-1, 1}) {
            auto n = ijk;
            n[t] += sgn;
            if (n[t] < 0 || n[t] >= g.N) continue;
            const auto it = in.find(g.index(n[0], n[1], n[2]));
            if (it != in.end() && it->second == 1) {
              it->second = 2;
              todo.push(it->first);
            }
          }
      }
      std::size_t best = comp.front();
      for (std::size_t a : comp) {
        if (beta[a] < beta[best]) best = a;
      }
      auto ijk = g.ijk(best);
      auto bval = [&](int du, int dv) {
        auto n = ijk;
        n[u] += du;
        n[v] += dv;
        return beta[g.index(n[0], n[1], n[2])];
      };
      const double b0 = bval(0, 0);
      Eigen::Vector2d gr((bval(1, 0) - bval(-1, 0)) / (2 * h), (bval(0, 1) - bval(0, -1)) / (2 * h));
      Eigen::Matrix2d H;
      H(0, 0) = (bval(1, 0) - 2 * b0 + bval(-1, 0)) / (h * h);
      H(1, 1) = (bval(0, 1) - 2 * b0 + bval(0, -1)) / (h * h);
      H(0, 1) = H(1, 0) = (bval(1, 1) - bval(1, -1) - bval(-1, 1) + bval(-1, -1)) / (4 * h * h);
      Eigen::Vector2d step = detail::pinv_step<2>(H, gr);
      if (step.norm() > h) step *= h / step.norm();
      Vec3 x = g.position(best);
      x[u] += step[0];
      x[v] += step[1];
      out.push_back(x);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Winding number

struct WindingResult {
  double raw = 0.0;       // accumulated director rotation / 2 pi
  double value = 0.0;     // nearest half-integer
  bool resolved = false;  // |raw - value| < 0.1
};

/// Closed loop of n points on the circle of given radius about `axis`,
/// counterclockwise when viewed from the tip of `axis`.
inline std::vector<Vec3> circle_loop(const Vec3& center, const Vec3& axis, double radius, int n) {
  const PlaneFrame fr = PlaneFrame::complete(axis.normalized());
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    pts.push_back(center + radius * (std::cos(t) * fr.e1 + std::sin(t) * fr.e2));
  }
  return pts;
}

namespace detail {

/// Twice the director angle of the U-part of Q(x) in U_{p_ref}.
inline double doubled_angle(const QField& f, const Vec3& x, const PlaneFrame& fr, double s_min) {
  Decomposition d;
  try {
    d = decompose(sample(f, x));
  } catch (const Error& e) {
    throw Error(ErrorCode::DegenerateSample, e.what());
  }
  if (d.s <= s_min) throw Error(ErrorCode::DegenerateSample, "s <= s_min on the loop");
  const Mat3 u = project_to_Up_matrix(d.U.matrix(), fr.p);
  return std::atan2(u.cwiseProduct(fr.E2()).sum(), u.cwiseProduct(fr.E1()).sum());
}

inline double wrap_pi(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline double segment_turn(const QField& f, const Vec3& a, const Vec3& b, double ta, double tb,
                           const PlaneFrame& fr, double s_min, int depth) {
  const double d = wrap_pi(tb - ta);
  if (std::abs(d) < std::numbers::pi / 2.0) return d;
  if (depth == 0) throw Error(ErrorCode::UnderSampledLoop, "director turns too fast along the loop");
  const Vec3 m = 0.5 * (a + b);
  const double tm = doubled_angle(f, m, fr, s_min);
  return segment_turn(f, a, m, ta, tm, fr, s_min, depth - 1) + segment_turn(f, m, b, tm, tb, fr, s_min, depth - 1);
}

}  // namespace detail

/// Winding of the leading eigenvector (a line field) around the closed loop,
/// measured in the plane orthogonal to p_ref.
inline WindingResult winding_number(const QField& f, const std::vector<Vec3>& loop, const Vec3& p_ref,
                                    double s_min = 1e-3) {
  if (loop.size() < 3) throw Error(ErrorCode::InvalidArgument, "loop needs at least 3 points");
  const PlaneFrame fr = PlaneFrame::complete(p_ref.normalized());
  std::vector<double> t(loop.size());
  for (std::size_t i = 0; i < loop.size(); ++i) t[i] = detail::doubled_angle(f, loop[i], fr, s_min);
  double total = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const std::size_t j = (i + 1) % loop.size();
    total += detail::segment_turn(f, loop[i], loop[j], t[i], t[j], fr, s_min, 8);
  }
  WindingResult w;
  w.raw = total / (4.0 * std::numbers::pi);
  w.value = std::round(2.0 * w.raw) / 2.0;
  w.resolved = std::abs(w.raw - w.value) < 0.1;
  return w;
}

// ---------------------------------------------------------------------------
// Vanishing order and blow-up

struct VanishingOrder {
  double k_hat = 0.0;
  double residual = 0.0;
  std::vector<double> radii;
  std::vector<double> mean_s2;
};

/// Points of the cubic lattice of the given spacing inside the closed unit ball.
inline std::vector<Vec3> ball_lattice(double spacing) {
  const int m = static_cast<int>(std::floor(1.0 / spacing + 1e-9));
  std::vector<Vec3> pts;
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      for (int c = -m; c <= m; ++c) {
        const Vec3 y(a * spacing, b * spacing, c * spacing);
        if (y.norm() <= 1.0 + 1e-12) pts.push_back(y);
      }
  return pts;
}

/// k_hat = slope / 2 of ln(mean of s^2 over B_r(x0)) against ln r.
inline VanishingOrder vanishing_order(const QField& f, const Vec3& x0, std::vector<double> radii = {0.4, 0.28, 0.2, 0.14, 0.1}) {
  if (radii.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two radii");
  const double h = f.spec().h();
  for (double r : radii) {
    if (r < h - 1e-12) throw Error(ErrorCode::RadiiTooSmall, "radii must be >= h");
  }
  const std::vector<Vec3> lattice = ball_lattice(1.0 / 8.0);
  VanishingOrder out;
  out.radii = radii;
  Eigen::MatrixXd A(radii.size(), 2);
  Eigen::VectorXd y(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double sum = 0.0;
    for (const Vec3& p : lattice) {
      try {
        const double s = decompose(sample(f, x0 + radii[i] * p)).s;
        sum += s * s;
      } catch (const Error& e) {
        throw Error(ErrorCode::DecompositionFailure, e.what());
      }
    }
    const double mean = sum / lattice.size();
    if (!(mean > 0.0)) throw Error(ErrorCode::DecompositionFailure, "s vanishes on the whole ball");
    out.mean_s2.push_back(mean);
    A(i, 0) = std::log(radii[i]);
    A(i, 1) = 1.0;
    y[i] = std::log(mean);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  out.k_hat = coef[0] / 2.0;
  out.residual = (A * coef - y).cwiseAbs().maxCoeff();
  return out;
}

struct BlowUpSamples {
  double r = 0.0;
  int k = 1;
  double spacing = 0.125;
  Vec3 x0 = Vec3::Zero();
  Vec3 p0 = Vec3::UnitZ();
  std::vector<Vec3> y;
  std::vector<Mat3> U;
  std::vector<double> s;
  std::vector<Vec3> p;
};

/// U_r(y) = U(x0 + r y)/r^k, s_r likewise, p_r(y) = p(x0 + r y) aligned with p(x0).
inline BlowUpSamples blow_up(const QField& f, const Vec3& x0, double r, int k, double spacing = 0.125) {
  BlowUpSamples out;
  out.r = r;
  out.k = k;
  out.spacing = spacing;
  out.x0 = x0;
  try {
    out.p0 = decompose(sample(f, x0)).p;
  } catch (const Error& e) {
    throw Error(ErrorCode::DecompositionFailure, e.what());
  }
  const double rk = std::pow(r, k);
  const int m = static_cast<int>(std::floor(1.0 / spacing + 1e-9));
  const int w = 2 * m + 1;
  std::vector<int> slot(static_cast<std::size_t>(w) * w * w, -1);
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      for (int c = -m; c <= m; ++c) {
        const Vec3 y(a * spacing, b * spacing, c * spacing);
        if (y.norm() > 1.0 + 1e-12) continue;
        Decomposition d;
        try {
          d = decompose(sample(f, x0 + r * y));
        } catch (const Error& e) {
          throw Error(ErrorCode::DecompositionFailure, e.what());
        }
        slot[(static_cast<std::size_t>(a + m) * w + (b + m)) * w + (c + m)] = static_cast<int>(out.y.size());
        out.y.push_back(y);
        out.U.push_back(d.U.matrix() / rk);
        out.s.push_back(d.s / rk);
        out.p.push_back(d.p.dot(out.p0) < 0.0 ? Vec3(-d.p) : d.p);
      }
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      for (int c = -m; c <= m; ++c) {
        const int i0 = slot[(static_cast<std::size_t>(a + m) * w + (b + m)) * w + (c + m)];
        if (i0 < 0) continue;
        const int nb[3][3] = {{a + 1, b, c}, {a, b + 1, c}, {a, b, c + 1}};
        for (const auto& n : nb) {
          if (n[0] > m || n[1] > m || n[2] > m) continue;
          const int i1 = slot[(static_cast<std::size_t>(n[0] + m) * w + (n[1] + m)) * w + (n[2] + m)];
          if (i1 >= 0 && out.p[i0].dot(out.p[i1]) <= 0.0) {
            throw Error(ErrorCode::SignAlignmentFailure, "p rotates by more than pi/2 between adjacent samples");
          }
        }
      }
  return out;
}

// ---------------------------------------------------------------------------
// Tangent maps

struct TangentMapFit {
  int k = 1;
  Vec3 p0 = Vec3::UnitZ();
  TangentPolynomial poly;
  double residual = 0.0;
};

inline TangentMapFit fit_tangent_map(const BlowUpSamples& smp, int k, const Vec3& p0) {
  const int nm = monomial_count(k);
  const std::size_t n = smp.y.size();
  if (k < 1 || static_cast<int>(n) < 4 * nm) {
    throw Error(ErrorCode::RankDeficientFit, "not enough samples for a degree-k fit");
  }
  const PlaneFrame fr = PlaneFrame::complete(p0);
  const auto ms = monomials(k);
  Eigen::MatrixXd A(n, nm);
  Eigen::MatrixXd rhs(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < nm; ++c) A(i, c) = monomial_value(ms[c], smp.y[i]);
    const Mat3 u = project_to_Up_matrix(smp.U[i], fr.p);
    rhs(i, 0) = u.cwiseProduct(fr.E1()).sum();
    rhs(i, 1) = u.cwiseProduct(fr.E2()).sum();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < nm) throw Error(ErrorCode::RankDeficientFit, "design matrix is rank deficient");
  const Eigen::MatrixXd coef = qr.solve(rhs);
  TangentMapFit fit;
  fit.k = k;
  fit.p0 = p0;
  fit.poly.frame = fr;
  fit.poly.u1 = HomPoly(k, std::vector<double>(coef.col(0).data(), coef.col(0).data() + nm));
  fit.poly.u2 = HomPoly(k, std::vector<double>(coef.col(1).data(), coef.col(1).data() + nm));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (smp.U[i] - fit.poly(smp.y[i])).squaredNorm();
    den += smp.U[i].squaredNorm();
  }
  fit.residual = den > 0.0 ? std::min(1.0, std::sqrt(num / den)) : 0.0;
  return fit;
}

struct Classification {
  enum Kind { exchange_plane, half_degree_line, higher_order, unresolved } kind = unresolved;
  int k = 0;
  std::optional<Vec3> axis;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();

  std::string name() const {
    switch (kind) {
      case exchange_plane: return "exchange_plane";
      case half_degree_line: return "half_degree_line";
      case higher_order: return "higher_order(" + std::to_string(k) + ")";
      case unresolved: break;
    }
    return "unresolved";
  }
};

/// G_ij = int_B1 <d_i U, d_j U>, computed exactly.
inline Mat3 directional_gram(const TangentPolynomial& u) {
  Mat3 G;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      G(i, j) = G(j, i) = (u.u1.derivative(i) * u.u1.derivative(j)).ball_integral() +
                          (u.u2.derivative(i) * u.u2.derivative(j)).ball_integral();
    }
  return G;
}

inline Classification classify(const TangentMapFit& fit, const AnalysisConfig& cfg = {}) {
  if (fit.residual > cfg.fit_tol) throw Error(ErrorCode::ResidualTooLarge, "tangent-map fit residual above fit_tol");
  Classification c;
  c.k = fit.k;
  if (fit.k == 1) {
    // degree-1 monomials are ordered x, y, z
    const auto& u1 = fit.poly.u1.coeffs();
    const auto& u2 = fit.poly.u2.coeffs();
    c.a = Vec3(u1[0], u1[1], u1[2]);
    c.b = Vec3(u2[0], u2[1], u2[2]);
    const Vec3 axb = c.a.cross(c.b);
    if (axb.norm() <= cfg.tol_parallel * (c.a.norm() * c.b.norm() + 1e-15)) {
      c.kind = Classification::exchange_plane;
    } else {
      c.kind = Classification::half_degree_line;
      c.axis = axb.normalized();
    }
    return c;
  }
  c.kind = Classification::higher_order;
  Eigen::SelfAdjointEigenSolver<Mat3> es(directional_gram(fit.poly));
  if (es.eigenvalues()[0] <= cfg.gram_tol * es.eigenvalues()[2]) c.axis = canonical_sign(es.eigenvectors().col(0));
  return c;
}

// ---------------------------------------------------------------------------
// V_m and Y_m

namespace detail {

/// Central stencils (offset, weight) for derivative orders 0..3 at unit step.
inline std::vector<std::pair<int, double>> stencil(int order) {
  switch (order) {
    case 0: return {{0, 1.0}};
    case 1: return {{-1, -0.5}, {1, 0.5}};
    case 2: return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
    case 3: return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "derivative order per axis must be <= 3");
}

inline double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

inline Vec3 p_derivative(const QField& f, const Vec3& x0, const Exponent& g, double step, const Vec3& p0) {
  Vec3 d = Vec3::Zero();
  for (const auto& [ox, wx] : stencil(g[0]))
    for (const auto& [oy, wy] : stencil(g[1]))
      for (const auto& [oz, wz] : stencil(g[2])) {
        const Vec3 x = x0 + step * Vec3(ox, oy, oz);
        Vec3 p;
        try {
          p = decompose(sample(f, x)).p;
        } catch (const Error& e) {
          throw Error(ErrorCode::JetEstimationFailure, e.what());
        }
        if (p.dot(p0) < 0.0) p = -p;
        d += wx * wy * wz * p;
      }
  return d / std::pow(step, g[0] + g[1] + g[2]);
}

}  // namespace detail

/// Finite-difference jets D^g p(x0), 1 <= |g| <= m - 1, assembled into
/// V_m(x) = sum_i sum_{|a|+|b| = m-2} (D_i D^a p / a!) (x) (D_i D^b p / b!) x^(a+b).
inline VPoly compute_Vm(const QField& f, const Vec3& x0, int m, double jet_tol = 0.1, int k_max = 4,
                        double* jet_error = nullptr) {
  if (m < 2 || m > k_max) throw Error(ErrorCode::InvalidArgument, "m must lie in [2, K_MAX]");
  const double h = f.spec().h();
  Vec3 p0;
  try {
    p0 = decompose(sample(f, x0)).p;
  } catch (const Error& e) {
    throw Error(ErrorCode::JetEstimationFailure, e.what());
  }
  VPoly v;
  v.m = m;
  v.jets.resize(m);
  double worst = 0.0;
  for (int order = 1; order <= m - 1; ++order) {
    for (const Exponent& g : monomials(order)) {
      const Vec3 d1 = detail::p_derivative(f, x0, g, h, p0);
      const Vec3 d2 = detail::p_derivative(f, x0, g, 2.0 * h, p0);
      const Vec3 ext = (4.0 * d1 - d2) / 3.0;
      const double err = (d1 - d2).norm();
      worst = std::max(worst, err);
      if (err > jet_tol * (1.0 + ext.norm())) {
        throw Error(ErrorCode::JetEstimationFailure, "Richardson estimates disagree beyond jet_tol");
      }
      v.jets[order].push_back(ext);
    }
  }
  if (jet_error) *jet_error = worst;
  auto jet = [&](const Exponent& g) { return v.jets[g[0] + g[1] + g[2]][monomial_index(g[0] + g[1] + g[2], g)]; };
  const int d = m - 2;
  v.coeffs.assign(monomial_count(d), Mat3::Zero());
  for (int la = 0; la <= d; ++la) {
    for (const Exponent& a : monomials(la)) {
      for (const Exponent& b : monomials(d - la)) {
        const double fa = detail::factorial(a[0]) * detail::factorial(a[1]) * detail::factorial(a[2]);
        const double fb = detail::factorial(b[0]) * detail::factorial(b[1]) * detail::factorial(b[2]);
        const Exponent mu{a[0] + b[0], a[1] + b[1], a[2] + b[2]};
        for (int i = 0; i < 3; ++i) {
          Exponent ai = a, bi = b;
          ++ai[i];
          ++bi[i];
          v.coeffs[monomial_index(d, mu)] += jet(ai) * jet(bi).transpose() / (fa * fb);
        }
      }
    }
  }
  return v;
}

/// Coefficient-wise projection of V_m onto U_{p0}.
inline TangentPolynomial compute_Ym(const VPoly& v, const Vec3& p0) {
  TangentPolynomial y;
  y.frame = PlaneFrame::complete(p0);
  const int d = v.poly_degree();
  y.u1 = HomPoly(d);
  y.u2 = HomPoly(d);
  for (int i = 0; i < monomial_count(d); ++i) {
    const Mat3 sym = 0.5 * (v.coeffs[i] + v.coeffs[i].transpose());
    const TangentTensor t = TangentTensor::from_matrix(project_to_Up_matrix(sym, y.frame.p), y.frame.p);
    y.u1.coeffs()[i] = t.coeffs()[0];
    y.u2.coeffs()[i] = t.coeffs()[1];
  }
  return y;
}

/// Sup over the unit sphere (hence the ball) of a homogeneous tangent polynomial.
inline double sphere_sup(const TangentPolynomial& y) {
  double sup = 0.0;
  for (const Vec3& x : make_icosphere(3).vertices) sup = std::max(sup, y(x).norm());
  return sup;
}

/// sup_B1 |Y_m| for m = 2 .. k-1.
inline std::vector<double> check_Ym_vanishing(const QField& f, const Vec3& x0, int k, double jet_tol = 0.1, int k_max = 4) {
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "check_Ym_vanishing needs k >= 3");
  const Vec3 p0 = decompose(sample(f, x0)).p;
  std::vector<double> out;
  for (int m = 2; m < k; ++m) out.push_back(sphere_sup(compute_Ym(compute_Vm(f, x0, m, jet_tol, k_max), p0)));
  return out;
}

// ---------------------------------------------------------------------------
// Tangent line profile

struct ConeProfileEntry {
  double radius = 0.0;
  double ball_max = 0.0;     // max over B_r(x0)
  double annulus_max = 0.0;  // max over r/2 < |x - x0| <= r
  int annulus_count = 0;
};

struct ConeProfile {
  std::vector<ConeProfileEntry> entries;
  bool flagged = false;  // profile stays bounded away from zero
};

/// dist(x, x0 + R e)/|x - x0| over candidate points, for shrinking radii.
inline ConeProfile tangent_line_check(const std::vector<Vec3>& points, const Vec3& x0, const Vec3& axis,
                                      const std::vector<double>& radii = {0.4, 0.2, 0.1}, int min_per_annulus = 5,
                                      double flag_level = 0.2) {
  const Vec3 e = axis.normalized();
  ConeProfile prof;
  for (double r : radii) {
    ConeProfileEntry ent;
    ent.radius = r;
    for (const Vec3& x : points) {
      const Vec3 d = x - x0;
      const double dn = d.norm();
      if (dn <= 1e-12 || dn > r) continue;
      const double ratio = (d - d.dot(e) * e).norm() / dn;
      ent.ball_max = std::max(ent.ball_max, ratio);
      if (dn > 0.5 * r) {
        ent.annulus_max = std::max(ent.annulus_max, ratio);
        ++ent.annulus_count;
      }
    }
    if (ent.annulus_count < min_per_annulus) {
      throw Error(ErrorCode::InsufficientCandidates, "fewer than the required candidates in an annulus");
    }
    prof.entries.push_back(ent);
  }
  prof.flagged = !prof.entries.empty() && prof.entries.back().ball_max > flag_level;
  return prof;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace detail {

inline bool on_node(const GridSpec& g, const Vec3& x) {
  const auto n = g.nearest(x);
  return (g.position(n[0], n[1], n[2]) - x).norm() < 1e-9;
}

}  // namespace detail

/// Classifies one candidate in place. Failures leave it unresolved with a note.
inline void analyze_candidate(const QField& f, DefectCandidate& d, const AnalysisConfig& cfg) {
  const GridSpec& g = f.spec();
  const double h = g.h();
  const double reach = 1.0 - h - d.position.norm();
  std::vector<double> radii;
  for (double r : cfg.radii) {
    if (r <= reach) radii.push_back(r);
  }
  if (radii.size() < 3) {
    d.note = "too close to the boundary for the radius sweep";
    return;
  }
  Vec3 p0;
  try {
    p0 = decompose(sample(f, d.position)).p;
    const VanishingOrder vo = vanishing_order(f, d.position, radii);
    d.k_hat = vo.k_hat;
    d.regression_residual = vo.residual;
  } catch (const Error& e) {
    d.note = e.what();
    return;
  }
  const int k = static_cast<int>(std::lround(d.k_hat));
  if (k < 1 || k > cfg.k_max || std::abs(d.k_hat - k) > cfg.k_band || d.regression_residual > cfg.k_residual_tol) {
    d.note = "vanishing order outside the acceptance band";
    return;
  }
  d.k = k;
  const double r = std::min(cfg.fit_radius, reach);
  try {
    const double spacing = detail::on_node(g, d.position) ? h / r : cfg.lattice_spacing;
    const TangentMapFit fit = fit_tangent_map(blow_up(f, d.position, r, k, spacing), k, p0);
    d.fit_residual = fit.residual;
    const Classification c = classify(fit, cfg);
    d.classification = c.name();
    d.axis = c.axis;
    if (c.kind == Classification::half_degree_line) {
      d.winding = winding_number(f, circle_loop(d.position, *c.axis, r, cfg.winding_points), *c.axis, cfg.s_min).value;
    } else if (c.kind == Classification::exchange_plane) {
      // loop on one side of the exchange plane {a.x = 0}
      const Vec3 n = c.a.norm() > 0 ? c.a.normalized() : c.b.normalized();
      d.winding = winding_number(f, circle_loop(d.position + 0.5 * r * n, n, 0.25 * r, cfg.winding_points), p0, cfg.s_min).value;
      d.is_defect = false;
    } else if (c.kind == Classification::higher_order) {
      const TangentPolynomial yk = compute_Ym(compute_Vm(f, d.position, k, cfg.jet_tol, cfg.k_max), p0);
      TangentPolynomial res = Ek_residual_poly(fit.poly, yk);
      d.ek_residual = sphere_sup(res);
    }
  } catch (const Error& e) {
    d.note = e.what();
  }
}

inline std::vector<DefectCandidate> analyze(const QField& f, const AnalysisConfig& cfg = {}) {
  std::vector<DefectCandidate> cands = detect_candidates(f, cfg);
  for (auto& d : cands) analyze_candidate(f, d, cfg);
  return cands;
}

inline nlohmann::json candidate_json(const DefectCandidate& d) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); };
  nlohmann::json j{{"position", vec(d.position)},
                   {"beta_min", d.beta_min},
                   {"cluster_size", d.cluster_size},
                   {"is_defect", d.is_defect},
                   {"frame_jump", d.frame_jump},
                   {"k_hat", d.k_hat},
                   {"k", d.k ? nlohmann::json(*d.k) : nlohmann::json(nullptr)},
                   {"regression_residual", d.regression_residual},
                   {"classification", d.classification},
                   {"axis", d.axis ? vec(*d.axis) : nlohmann::json(nullptr)},
                   {"winding", d.winding ? nlohmann::json(*d.winding) : nlohmann::json(nullptr)},
                   {"fit_residual", d.fit_residual ? nlohmann::json(*d.fit_residual) : nlohmann::json(nullptr)},
                   {"ek_residual", d.ek_residual ? nlohmann::json(*d.ek_residual) : nlohmann::json(nullptr)}};
  if (!d.note.empty()) j["note"] = d.note;
  return j;
}

inline nlohmann::json report_json(const std::vector<DefectCandidate>& cands, const std::string& config_hash) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : cands) arr.push_back(candidate_json(d));
  return {{"schema", "defect-report/1"}, {"config_hash", config_hash}, {"candidates", arr}};
}

}  // namespace qdefect
