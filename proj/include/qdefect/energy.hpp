#pragma once

// Discrete energies on QField.
//
// Dirichlet term: forward differences on grid edges,
//   (1/2) int |grad Q|^2  ~  (h/2) sum_{edges} |c_j - c_i|^2,
// summed over edges with at least one interior endpoint. Potential terms use
// the node-centred midpoint rule over interior nodes with cell volume h^3.

#include <cmath>
#include <vector>

#include "qdefect/field.hpp"
#include "qdefect/parallel.hpp"
#include "qdefect/polynomial.hpp"

namespace qdefect {

struct EnergyBreakdown {
  double dirichlet = 0.0;
  double potential = 0.0;
  double total = 0.0;
  // blow-up parts
  double E1 = 0.0;
  double E2 = 0.0;
  double E3 = 0.0;
  double Er = 0.0;
};

/// Bulk constants a^2, b^2, c^2 and elastic constant L.
struct LdGParameters {
  double a2 = 1.0;
  double b2 = 1.0;
  double c2 = 1.0;
  double L = 1.0;

  double s_plus() const { return (b2 + std::sqrt(b2 * b2 + 24.0 * a2 * c2)) / (4.0 * c2); }
  double lambda() const { return std::sqrt(2.0 / 3.0) * b2 * s_plus() / L; }
  double mu() const { return a2 / L; }
  /// Additive constant making f_b vanish on the uniaxial vacuum manifold.
  double bulk_constant() const {
    const double s = s_plus();
    return a2 / 3.0 * s * s + 2.0 * b2 / 27.0 * s * s * s - c2 / 9.0 * s * s * s * s;
  }
  /// f_b(Q) = -a^2/2 trQ^2 - b^2/3 trQ^3 + c^2/4 (trQ^2)^2 + C.
  double bulk(const Mat3& q) const {
    const double t2 = q.squaredNorm();
    return -0.5 * a2 * t2 - b2 / 3.0 * trace_cubed(q) + 0.25 * c2 * t2 * t2 + bulk_constant();
  }
};

/// W(Q) = |Q|^4/(4 sqrt6) - tr(Q^3)/3 + 1/(12 sqrt6); equals (1 - beta)/(3 sqrt6) on |Q| = 1.
inline double W_potential(const QTensor& q) {
  const double n2 = q.squared_norm();
  return n2 * n2 / (4.0 * kSqrt6) - trace_cubed(q.matrix()) / 3.0 + 1.0 / (12.0 * kSqrt6);
}

/// Coefficients of tr(Q^2 B_a); d tr(Q^3)/dc_a = 3 of these.
inline Vec5 square_coeffs(const QTensor& q) {
  const Mat3 m = q.matrix();
  return QTensor::from_matrix(m * m).coeffs();
}

/// (1 - sqrt6 trQ^3/|Q|^3)/(3 sqrt6), the constrained potential density.
inline double constrained_potential(const QTensor& q) {
  const double n = q.norm();
  return (1.0 - kSqrt6 * trace_cubed(q.matrix()) / (n * n * n)) / (3.0 * kSqrt6);
}

inline Vec5 constrained_potential_grad(const QTensor& q) {
  const double n2 = q.squared_norm(), n = std::sqrt(n2);
  const double beta = kSqrt6 * trace_cubed(q.matrix()) / (n2 * n);
  const Vec5 dbeta = kSqrt6 * 3.0 * square_coeffs(q) / (n2 * n) - 3.0 * beta * q.coeffs() / n2;
  return -dbeta / (3.0 * kSqrt6);
}

namespace detail {

inline void require_unit_field(const QField& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.role(i) != NodeRole::exterior && std::abs(f[i].norm() - 1.0) > 1e-8) {
      throw Error(ErrorCode::NotUnitNorm, "field violates |Q| = 1");
    }
  }
}

/// Edge Dirichlet energy of slab i.
inline double dirichlet_slab(const QField& f, int i) {
  const GridSpec& g = f.spec();
  double sum = 0.0;
  for (int j = 0; j < g.N; ++j)
    for (int k = 0; k < g.N; ++k) {
      const std::size_t a = g.index(i, j, k);
      if (f.role(a) == NodeRole::exterior) continue;
      const bool ia = f.role(a) == NodeRole::interior;
      const std::array<std::array<int, 3>, 3> nb{{{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}}};
      for (const auto& n : nb) {
        if (n[0] >= g.N || n[1] >= g.N || n[2] >= g.N) continue;
        const std::size_t b = g.index(n[0], n[1], n[2]);
        if (!ia && f.role(b) != NodeRole::interior) continue;
        sum += (f[b].coeffs() - f[a].coeffs()).squaredNorm();
      }
    }
  return 0.5 * g.h() * sum;
}

template <class Density>
double interior_sum(const QField& f, Density density) {
  const GridSpec& g = f.spec();
  const double vol = std::pow(g.h(), 3);
  return vol * slab_reduce(g.N, [&](int i) {
           double s = 0.0;
           for (int j = 0; j < g.N; ++j)
             for (int k = 0; k < g.N; ++k) {
               const std::size_t a = g.index(i, j, k);
               if (f.role(a) == NodeRole::interior) s += density(f[a]);
             }
           return s;
         });
}

/// Dirichlet gradient h sum_nbrs (c_i - c_j) plus h^3 times a nodal term.
template <class NodalGrad>
std::vector<Vec5> assemble_gradient(const QField& f, NodalGrad nodal, bool project) {
  const GridSpec& g = f.spec();
  const double h = g.h(), vol = h * h * h;
  std::vector<Vec5> out(f.size(), Vec5::Zero());
  for_each_slab(g.N, [&](int i) {
    for (int j = 0; j < g.N; ++j)
      for (int k = 0; k < g.N; ++k) {
        const std::size_t a = g.index(i, j, k);
        if (f.role(a) != NodeRole::interior) continue;
        const Vec5& c = f[a].coeffs();
        Vec5 gsum = 6.0 * c;
        gsum -= f.at(i + 1, j, k).coeffs() + f.at(i - 1, j, k).coeffs();
        gsum -= f.at(i, j + 1, k).coeffs() + f.at(i, j - 1, k).coeffs();
        gsum -= f.at(i, j, k + 1).coeffs() + f.at(i, j, k - 1).coeffs();
        Vec5 grad = h * gsum + vol * nodal(f[a]);
        if (project) {
          const Vec5 qhat = c / c.norm();
          grad -= grad.dot(qhat) * qhat;
        }
        out[a] = grad;
      }
  });
  return out;
}

}  // namespace detail

inline double dirichlet_energy(const QField& f) {
  return slab_reduce(f.spec().N, [&](int i) { return detail::dirichlet_slab(f, i); });
}

/// Unit-norm precondition skipped; used by line searches and FD checks.
inline EnergyBreakdown constrained_energy_unchecked(const QField& f) {
  EnergyBreakdown e;
  e.dirichlet = dirichlet_energy(f);
  e.potential = detail::interior_sum(f, [](const QTensor& q) { return constrained_potential(q); });
  e.total = e.dirichlet + e.potential;
  return e;
}

inline EnergyBreakdown constrained_energy(const QField& f) {
  detail::require_unit_field(f);
  return constrained_energy_unchecked(f);
}

/// Gradient of constrained_energy projected orthogonally to Q at each node.
inline std::vector<Vec5> energy_gradient(const QField& f) {
  return detail::assemble_gradient(f, [](const QTensor& q) { return constrained_potential_grad(q); }, true);
}

/// (1/2)|grad Q|^2 + lambda W(Q) + (mu/4)(1 - |Q|^2)^2 summed over the ball.
inline double full_energy(const QField& f, double lambda, double mu) {
  const double bulk = detail::interior_sum(f, [&](const QTensor& q) {
    const double d = 1.0 - q.squared_norm();
    return lambda * W_potential(q) + 0.25 * mu * d * d;
  });
  return dirichlet_energy(f) + bulk;
}

inline double full_energy(const QField& f, const LdGParameters& p) { return full_energy(f, p.lambda(), p.mu()); }

inline std::vector<Vec5> full_energy_gradient(const QField& f, double lambda, double mu) {
  return detail::assemble_gradient(
      f,
      [&](const QTensor& q) {
        const double n2 = q.squared_norm();
        return Vec5(lambda * (n2 * q.coeffs() / kSqrt6 - square_coeffs(q)) - mu * (1.0 - n2) * q.coeffs());
      },
      false);
}

/// Nodal density (1/2)|grad Q|^2 + (1 - beta)/(3 sqrt6) with central differences.
inline double energy_density(const QField& f, int i, int j, int k) {
  const Gradient d = gradient(f, i, j, k);
  return 0.5 * d.squaredNorm() + (1.0 - biaxiality(f.at(i, j, k))) / (3.0 * kSqrt6);
}

/// |e(Q) - e_lead| at an interior node, where e(Q) is the nodal density and
/// e_lead = (3/2)|grad p|^2 + (1/2)|grad U|^2 + sqrt6 sum d_i p_j d_i p_k U_jk
///          + (2 - (9/2)|U|^2)/(3 sqrt6).
/// Derivatives are central differences of the decomposed (p, U) fields.
inline double expansion_defect(const QField& f, int i, int j, int k) {
  const GridSpec& g = f.spec();
  const double h = g.h();
  const Decomposition c = decompose(f.at(i, j, k));
  const Mat3 u = c.U.matrix();
  const int e[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  double gp2 = 0.0, gu2 = 0.0, ppu = 0.0;
  for (int a = 0; a < 3; ++a) {
    const Decomposition dp = decompose(f.at(i + e[a][0], j + e[a][1], k + e[a][2]));
    const Decomposition dm = decompose(f.at(i - e[a][0], j - e[a][1], k - e[a][2]));
    const Vec3 pp = dp.p.dot(c.p) < 0 ? Vec3(-dp.p) : dp.p;
    const Vec3 pm = dm.p.dot(c.p) < 0 ? Vec3(-dm.p) : dm.p;
    const Vec3 dpa = (pp - pm) / (2.0 * h);
    const Mat3 dua = (dp.U.matrix() - dm.U.matrix()) / (2.0 * h);
    gp2 += dpa.squaredNorm();
    gu2 += dua.squaredNorm();
    ppu += dpa.dot(u * dpa);
  }
  const double lead = 1.5 * gp2 + 0.5 * gu2 + kSqrt6 * ppu + (2.0 - 4.5 * u.squaredNorm()) / (3.0 * kSqrt6);
  return std::abs(energy_density(f, i, j, k) - lead);
}

// ---------------------------------------------------------------------------
// Blow-up decomposition

struct BlowupOptions {
  double spacing = 0.0;  // lattice spacing in rescaled coordinates; 0 means h / r
};

/// E1, E2 and E3 = E_r - E1 - E2 of the rescaled field U_r(y) = U(x0 + r y)/r^k.
inline EnergyBreakdown blowup_energy_parts(const QField& f, const Vec3& x0, double r, int k,
                                           const BlowupOptions& opt = {}) {
  const double h = f.spec().h();
  if (r < 4.0 * h - 1e-12) throw Error(ErrorCode::ScaleTooSmall, "blow-up scale r must be >= 4h");
  const double eta = opt.spacing > 0.0 ? opt.spacing : h / r;
  const int m = static_cast<int>(std::floor(1.0 / eta + 1e-9)) + 1;
  const int w = 2 * m + 1;
  auto lid = [&](int a, int b, int c) { return (static_cast<std::size_t>(a + m) * w + (b + m)) * w + (c + m); };

  struct Sample {
    bool valid = false;
    Mat3 q, u;
    Vec3 p;
  };
  std::vector<Sample> s(static_cast<std::size_t>(w) * w * w);
  Vec3 p0 = Vec3::Zero();
  try {
    p0 = decompose(sample(f, x0)).p;
  } catch (const Error& e) {
    throw Error(ErrorCode::DecompositionFailure, std::string("at blow-up centre: ") + e.what());
  }
  const double rk = std::pow(r, k);
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      for (int c = -m; c <= m; ++c) {
        const Vec3 y(a * eta, b * eta, c * eta);
        if (y.norm() > 1.0 + std::sqrt(3.0) * eta + 1e-12) continue;
        Sample& smp = s[lid(a, b, c)];
        try {
          const QTensor q = sample(f, x0 + r * y);
          const Decomposition d = decompose(q);
          smp.q = q.matrix();
          smp.p = d.p.dot(p0) < 0.0 ? Vec3(-d.p) : d.p;
          smp.u = d.U.matrix() / rk;
        } catch (const Error& e) {
          throw Error(ErrorCode::DecompositionFailure, e.what());
        }
        smp.valid = true;
      }

  double e1 = 0.0, e2 = 0.0, er = 0.0;
  const double vol = eta * eta * eta;
  for (int a = -m + 1; a < m; ++a)
    for (int b = -m + 1; b < m; ++b)
      for (int c = -m + 1; c < m; ++c) {
        const Vec3 y(a * eta, b * eta, c * eta);
        if (y.norm() > 1.0 + 1e-12) continue;
        const Sample& o = s[lid(a, b, c)];
        std::array<Mat3, 3> du, dq;
        std::array<Vec3, 3> dp;
        const std::array<std::array<int, 3>, 3> ax{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        for (int i = 0; i < 3; ++i) {
          const Sample& sp = s[lid(a + ax[i][0], b + ax[i][1], c + ax[i][2])];
          const Sample& sm = s[lid(a - ax[i][0], b - ax[i][1], c - ax[i][2])];
          if (!sp.valid || !sm.valid) throw Error(ErrorCode::DecompositionFailure, "incomplete blow-up stencil");
          du[i] = (sp.u - sm.u) / (2.0 * eta);
          dq[i] = (sp.q - sm.q) / (2.0 * eta * r);
          dp[i] = (sp.p - sm.p) / (2.0 * eta);
        }
        double grad_u2 = 0.0, ppu = 0.0, grad_q2 = 0.0, grad_p2 = 0.0;
        for (int i = 0; i < 3; ++i) {
          grad_u2 += du[i].squaredNorm();
          ppu += dp[i].dot(o.u * dp[i]);
          grad_q2 += dq[i].squaredNorm();
          grad_p2 += dp[i].squaredNorm() / (r * r);
        }
        const double beta = kSqrt6 * trace_cubed(o.q) / std::pow(o.q.norm(), 3);
        const double density = 0.5 * grad_q2 + (1.0 - beta) / (3.0 * kSqrt6);
        e1 += 0.5 * grad_u2;
        e2 += kSqrt6 / rk * ppu;
        er += density - 1.5 * grad_p2 - 2.0 / (3.0 * kSqrt6);
      }
  EnergyBreakdown out;
  out.E1 = vol * e1;
  out.E2 = vol * e2;
  out.Er = std::pow(r, 2.0 - 2.0 * k) * vol * er;
  out.E3 = out.Er - out.E1 - out.E2;
  return out;
}

// ---------------------------------------------------------------------------
// Tangent-map functional

/// int_B1 (1/2)|grad U|^2 + sqrt6 V_k : U, evaluated exactly.
inline double Ek_energy(const TangentPolynomial& u, const VPoly& vk) {
  if (vk.m != u.degree()) throw Error(ErrorCode::DegreeMismatch, "V_k degree does not match the tangent map");
  const int d = vk.poly_degree();
  HomPoly v1(d), v2(d);
  const Mat3 E1 = u.frame.E1(), E2 = u.frame.E2();
  for (int i = 0; i < monomial_count(d); ++i) {
    v1.coeffs()[i] = vk.coeffs[i].cwiseProduct(E1).sum();
    v2.coeffs()[i] = vk.coeffs[i].cwiseProduct(E2).sum();
  }
  return 0.5 * u.dirichlet_integral() + kSqrt6 * (v1 * u.u1 + v2 * u.u2).ball_integral();
}

/// Laplacian(U) - sqrt6 Y_k as an exact polynomial in U's frame.
inline TangentPolynomial Ek_residual_poly(const TangentPolynomial& u, const TangentPolynomial& yk) {
  if (yk.degree() != u.degree() - 2 || (yk.frame.p - u.frame.p).norm() > 1e-12) {
    throw Error(ErrorCode::DegreeMismatch, "Y_k must have degree k - 2 and the same p");
  }
  const TangentPolynomial y = yk.in_frame(u.frame);
  return {u.frame, u.u1.laplacian() + (-kSqrt6) * y.u1, u.u2.laplacian() + (-kSqrt6) * y.u2};
}

/// |Laplacian(U) - sqrt6 Y_k| at every non-exterior node with |x| <= 1.
inline ScalarField Ek_residual(const TangentPolynomial& u, const TangentPolynomial& yk, const GridSpec& g) {
  const TangentPolynomial res = Ek_residual_poly(u, yk);
  ScalarField out{g, std::vector<double>(g.size(), 0.0), std::vector<NodeRole>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto [a, b, c] = g.ijk(i);
    out.roles[i] = g.role(a, b, c);
    if (out.roles[i] == NodeRole::exterior) continue;
    out.values[i] = res(g.position(i)).norm();
  }
  return out;
}

}  // namespace qdefect
