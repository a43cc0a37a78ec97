#pragma once

// Q-tensor fields on a cubic grid over [-1, 1]^3 masked to the unit ball.
// Nodes are stored with flat index (i N + j) N + k, x = coord(i), y = coord(j),
// z = coord(k). Interior nodes satisfy |x| < 1 - h; shell nodes are the other
// nodes with |x| < 1 + h sqrt3 and carry frozen Dirichlet data.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "qdefect/perturb.hpp"

namespace qdefect {

enum class NodeRole : std::uint8_t { interior = 0, shell = 1, exterior = 2 };

struct GridSpec {
  int N = 33;

  GridSpec() = default;
  explicit GridSpec(int n) : N(n) { validate(); }

  void validate() const {
    if (N < 9 || N % 2 == 0) throw Error(ErrorCode::InvalidGrid, "N must be odd and >= 9");
  }
  double h() const { return 2.0 / (N - 1); }
  double coord(int i) const { return static_cast<double>(2 * i - (N - 1)) / (N - 1); }
  std::size_t size() const { return static_cast<std::size_t>(N) * N * N; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * N + j) * N + k;
  }
  std::array<int, 3> ijk(std::size_t idx) const {
    const int k = static_cast<int>(idx % N);
    const int j = static_cast<int>((idx / N) % N);
    const int i = static_cast<int>(idx / (static_cast<std::size_t>(N) * N));
    return {i, j, k};
  }
  Vec3 position(int i, int j, int k) const { return Vec3(coord(i), coord(j), coord(k)); }
  Vec3 position(std::size_t idx) const {
    const auto [i, j, k] = ijk(idx);
    return position(i, j, k);
  }
  /// Integer-exact role test.
  NodeRole role(int i, int j, int k) const {
    const int c = (N - 1) / 2;
    const long d2 = static_cast<long>(i - c) * (i - c) + static_cast<long>(j - c) * (j - c) +
                    static_cast<long>(k - c) * (k - c);
    if (d2 < static_cast<long>(c - 1) * (c - 1)) return NodeRole::interior;
    const double outer = c + kSqrt3;
    if (static_cast<double>(d2) < outer * outer) return NodeRole::shell;
    return NodeRole::exterior;
  }
  /// Node index nearest to x (clamped into the grid).
  std::array<int, 3> nearest(const Vec3& x) const {
    std::array<int, 3> out{};
    for (int a = 0; a < 3; ++a) {
      out[a] = std::clamp(static_cast<int>(std::lround((x[a] + 1.0) / h())), 0, N - 1);
    }
    return out;
  }
};

struct ScalarField {
  GridSpec spec;
  std::vector<double> values;
  std::vector<NodeRole> roles;

  double operator[](std::size_t i) const { return values[i]; }
};

class QField {
 public:
  QField() = default;
  explicit QField(const GridSpec& spec) : spec_(spec), q_(spec.size()), roles_(spec.size()) {
    spec_.validate();
    for (int i = 0; i < spec_.N; ++i)
      for (int j = 0; j < spec_.N; ++j)
        for (int k = 0; k < spec_.N; ++k) roles_[spec_.index(i, j, k)] = spec_.role(i, j, k);
  }

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return q_.size(); }
  const QTensor& operator[](std::size_t i) const { return q_[i]; }
  QTensor& operator[](std::size_t i) { return q_[i]; }
  const QTensor& at(int i, int j, int k) const { return q_[spec_.index(i, j, k)]; }
  QTensor& at(int i, int j, int k) { return q_[spec_.index(i, j, k)]; }
  NodeRole role(std::size_t i) const { return roles_[i]; }
  const std::vector<NodeRole>& roles() const { return roles_; }
  const std::vector<QTensor>& values() const { return q_; }
  std::vector<QTensor>& values() { return q_; }
  bool is_interior(std::size_t i) const { return roles_[i] == NodeRole::interior; }

  /// Max over non-exterior nodes of ||Q| - 1|.
  double max_norm_deviation() const {
    double d = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) {
      if (roles_[i] != NodeRole::exterior) d = std::max(d, std::abs(q_[i].norm() - 1.0));
    }
    return d;
  }

 private:
  GridSpec spec_;
  std::vector<QTensor> q_;
  std::vector<NodeRole> roles_;
};

using Gradient = Eigen::Matrix<double, 3, 5>;

/// Central differences of the five coefficients; row a is d/dx_a.
inline Gradient gradient(const QField& f, int i, int j, int k) {
  const GridSpec& g = f.spec();
  if (i <= 0 || j <= 0 || k <= 0 || i >= g.N - 1 || j >= g.N - 1 || k >= g.N - 1 ||
      f.role(g.index(i, j, k)) != NodeRole::interior) {
    throw Error(ErrorCode::NotInterior, "gradient requires an interior node");
  }
  const double inv = 1.0 / (2.0 * g.h());
  Gradient d;
  d.row(0) = (f.at(i + 1, j, k).coeffs() - f.at(i - 1, j, k).coeffs()).transpose() * inv;
  d.row(1) = (f.at(i, j + 1, k).coeffs() - f.at(i, j - 1, k).coeffs()).transpose() * inv;
  d.row(2) = (f.at(i, j, k + 1).coeffs() - f.at(i, j, k - 1).coeffs()).transpose() * inv;
  return d;
}

inline Gradient gradient(const QField& f, std::size_t idx) {
  const auto [i, j, k] = f.spec().ijk(idx);
  return gradient(f, i, j, k);
}

/// Trilinear interpolation of coefficients, renormalized to |Q| = 1.
inline QTensor sample(const QField& f, const Vec3& x) {
  const GridSpec& g = f.spec();
  const double h = g.h();
  if (!(x.norm() <= 1.0 - h + 1e-12)) throw Error(ErrorCode::OutOfDomain, "sample point outside |x| <= 1 - h");
  std::array<int, 3> base{};
  Vec3 t;
  for (int a = 0; a < 3; ++a) {
    const double u = (x[a] + 1.0) / h;
    base[a] = std::clamp(static_cast<int>(std::floor(u)), 0, g.N - 2);
    t[a] = u - base[a];
  }
  Vec5 c = Vec5::Zero();
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double w = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
        if (w != 0.0) c += w * f.at(base[0] + di, base[1] + dj, base[2] + dk).coeffs();
      }
  const double n = c.norm();
  if (n <= 1e-12) throw Error(ErrorCode::ZeroTensor, "interpolated tensor vanishes");
  return QTensor(c / n);
}

// ---------------------------------------------------------------------------
// Boundary data

inline QTensor radial_uniaxial(const Vec3& x) {
  return make_uniaxial(x.normalized(), Uniaxial::positive);
}

enum class InitRule { radial, random_tangent };

struct HedgehogInit {
  InitRule rule = InitRule::radial;
  Vec3 core_director = Vec3::UnitZ();
  double noise = 0.1;
  std::uint64_t seed = 1;
};

/// Shell nodes hold the radial hedgehog; interior nodes interpolate smoothly
/// from a uniform uniaxial core to the boundary value.
inline QField hedgehog_boundary(const GridSpec& spec, const HedgehogInit& init = {}) {
  QField f(spec);
  const QTensor core = make_uniaxial(init.core_director.normalized(), Uniaxial::positive);
  std::mt19937_64 rng(init.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const NodeRole role = f.role(idx);
    if (role == NodeRole::exterior) continue;
    const Vec3 x = spec.position(idx);
    const double r = x.norm();
    if (role == NodeRole::shell) {
      f[idx] = radial_uniaxial(x);
      continue;
    }
    QTensor q = core;
    if (r > 0.0) {
      const double rc = std::min(r, 1.0);
      const double w = rc * rc * (3.0 - 2.0 * rc);
      q = ((1.0 - w) * core + w * radial_uniaxial(x)).normalized();
    }
    if (init.rule == InitRule::random_tangent) {
      Vec5 v;
      for (int a = 0; a < 5; ++a) v[a] = gauss(rng);
      v -= v.dot(q.coeffs()) * q.coeffs();
      q = QTensor(q.coeffs() + init.noise * v).normalized();
    }
    f[idx] = q;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Synthetic fields built from (p, U) through the exact reconstruction

struct TangentSpec {
  Vec3 p = Vec3::UnitZ();
  Mat3 U = Mat3::Zero();  // projected onto U_p before use
};

using TangentGenerator = std::function<TangentSpec(const Vec3&)>;

/// Tensor whose decomposition has direction p and U-part equal to the
/// projection of `u` onto U_p.
inline QTensor tensor_from_tangent(const Vec3& p_in, const Mat3& u) {
  const Vec3 p = p_in.normalized();
  const TangentTensor t = project_to_Up(0.5 * (u + u.transpose()), p);
  const double s = t.norm() / kSqrt2;
  if (s > kSMax) throw Error(ErrorCode::AmplitudeTooLarge, "tangent amplitude leaves the perturbative range");
  const double phi = 0.5 * std::atan2(t.coeffs()[1], t.coeffs()[0]);
  const Vec3 n = std::cos(phi) * t.frame().e1 + std::sin(phi) * t.frame().e2;
  return reconstruct(p, s, n.normalized());
}

inline QField synthetic_field(const GridSpec& spec, const TangentGenerator& gen) {
  QField f(spec);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    if (f.role(idx) == NodeRole::exterior) continue;
    const TangentSpec t = gen(spec.position(idx));
    f[idx] = tensor_from_tangent(t.p, t.U);
  }
  return f;
}

inline void check_amplitude(double amplitude) {
  if (!(amplitude >= 0.0) || amplitude > 0.2) {
    throw Error(ErrorCode::AmplitudeTooLarge, "amplitude must lie in [0, 0.2]");
  }
}

/// Tangent map u1 E1 + u2 E2 over PlaneFrame::complete(p).
inline TangentGenerator planar_tangent(const Vec3& p, std::function<Eigen::Vector2d(const Vec3&, const PlaneFrame&)> u) {
  const PlaneFrame frame = PlaneFrame::complete(p.normalized());
  return [frame, u](const Vec3& x) {
    const Eigen::Vector2d c = u(x, frame);
    return TangentSpec{frame.p, c[0] * frame.E1() + c[1] * frame.E2()};
  };
}

struct DisclinationCase {
  enum Kind { half_degree, exchange } kind = half_degree;
  double lambda = 1.0;

  static DisclinationCase half() { return {half_degree, 0.0}; }
  static DisclinationCase exch(double l) { return {exchange, l}; }
};

/// half_degree: s = amplitude * rho, n winds by 1/2 about the axis.
/// exchange(l): U = (a.x) E1 + l (a.x) E2 with a = amplitude e1.
inline QField synthetic_disclination(const GridSpec& spec, const Vec3& axis, double amplitude,
                                     DisclinationCase c) {
  check_amplitude(amplitude);
  detail::require_unit(axis, "axis", 1e-9);
  if (c.kind == DisclinationCase::half_degree) {
    return synthetic_field(spec, planar_tangent(axis, [amplitude](const Vec3& x, const PlaneFrame& f) {
      return Eigen::Vector2d(kSqrt2 * amplitude * x.dot(f.e1), kSqrt2 * amplitude * x.dot(f.e2));
    }));
  }
  const double l = c.lambda;
  return synthetic_field(spec, planar_tangent(axis, [amplitude, l](const Vec3& x, const PlaneFrame& f) {
    const double ax = amplitude * x.dot(f.e1);
    return Eigen::Vector2d(ax, l * ax);
  }));
}

/// (u1 + i u2) = sqrt2 amplitude (x' + i y')^k about the axis; s = amplitude rho^k.
inline QField synthetic_vortex(const GridSpec& spec, const Vec3& axis, double amplitude, int k) {
  check_amplitude(amplitude);
  return synthetic_field(spec, planar_tangent(axis, [amplitude, k](const Vec3& x, const PlaneFrame& f) {
    const std::complex<double> z(x.dot(f.e1), x.dot(f.e2));
    const std::complex<double> w = kSqrt2 * amplitude * std::pow(z, k);
    return Eigen::Vector2d(w.real(), w.imag());
  }));
}

/// U = amplitude x1 x2 E2 with p = e3 (harmonic, degree 2, invariant along e3).
inline QField synthetic_x1x2(const GridSpec& spec, double amplitude) {
  check_amplitude(amplitude);
  return synthetic_field(spec, planar_tangent(Vec3::UnitZ(), [amplitude](const Vec3& x, const PlaneFrame&) {
    return Eigen::Vector2d(0.0, amplitude * x[0] * x[1]);
  }));
}

/// Half-degree line along the parabola x = kappa z^2, y = 0 (p = e3).
inline QField synthetic_bent_line(const GridSpec& spec, double amplitude, double kappa) {
  check_amplitude(amplitude);
  return synthetic_field(spec, planar_tangent(Vec3::UnitZ(), [amplitude, kappa](const Vec3& x, const PlaneFrame& f) {
    const Vec3 d(x[0] - kappa * x[2] * x[2], x[1], 0.0);
    return Eigen::Vector2d(kSqrt2 * amplitude * d.dot(f.e1), kSqrt2 * amplitude * d.dot(f.e2));
  }));
}

/// Constant positive uniaxial field.
inline QField uniform_field(const GridSpec& spec, const Vec3& director) {
  QField f(spec);
  const QTensor q = make_uniaxial(director.normalized(), Uniaxial::positive);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.role(i) != NodeRole::exterior) f[i] = q;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Boundary degree

struct Icosphere {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;  // outward oriented
};

inline Icosphere make_icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere s;
  for (const auto& v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t),
                        Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1),
                        Vec3(-t, 0, -1), Vec3(-t, 0, 1)}) {
    s.vertices.push_back(v.normalized());
  }
  s.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      s.vertices.push_back((s.vertices[a] + s.vertices[b]).normalized());
      const int id = static_cast<int>(s.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& f : s.faces) {
      const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    s.faces = std::move(next);
  }
  for (auto& f : s.faces) {
    const Vec3 &a = s.vertices[f[0]], &b = s.vertices[f[1]], &c = s.vertices[f[2]];
    if ((b - a).cross(c - a).dot(a) < 0.0) std::swap(f[1], f[2]);
  }
  return s;
}

/// Signed solid angle of the spherical triangle (a, b, c).
inline double signed_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = a.dot(b.cross(c));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

/// Degree of the leading-eigenvector map on the sphere of radius 1 - h.
inline int boundary_degree(const QField& f, int level = 3) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.role(i) != NodeRole::shell) continue;
    if (f[i].norm() <= 1e-12 || biaxiality(f[i]) <= -1.0 + 1e-3) {
      throw Error(ErrorCode::DegenerateBoundary, "leading eigenvalue not simple on the shell");
    }
  }
  const Icosphere sphere = make_icosphere(level);
  const double radius = 1.0 - f.spec().h();
  const std::size_t nv = sphere.vertices.size();
  std::vector<Vec3> dir(nv);
  for (std::size_t v = 0; v < nv; ++v) dir[v] = eigen_decompose(sample(f, radius * sphere.vertices[v])).n;

  std::vector<std::vector<int>> adj(nv);
  for (const auto& t : sphere.faces) {
    for (int e = 0; e < 3; ++e) {
      adj[t[e]].push_back(t[(e + 1) % 3]);
      adj[t[(e + 1) % 3]].push_back(t[e]);
    }
  }
  std::vector<char> seen(nv, 0);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = 1;
  while (!todo.empty()) {
    const int v = todo.front();
    todo.pop();
    for (int w : adj[v]) {
      if (seen[w]) continue;
      if (dir[w].dot(dir[v]) < 0.0) dir[w] = -dir[w];
      seen[w] = 1;
      todo.push(w);
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    for (int w : adj[v]) {
      if (dir[v].dot(dir[w]) <= 0.0) {
        throw Error(ErrorCode::OrientationFailure, "leading eigenvector field is not orientable on the sphere");
      }
    }
  }
  double total = 0.0;
  for (const auto& t : sphere.faces) total += signed_solid_angle(dir[t[0]], dir[t[1]], dir[t[2]]);
  return static_cast<int>(std::lround(total / (4.0 * std::numbers::pi)));
}

}  // namespace qdefect
