#pragma once

// Eigenvalue splitting near negative-uniaxial states and the decomposition
//   Q = -(sqrt6/2)(p p - Id/3) + U + R,   U in U_p,   |R| = O(s^2).
// Closed forms below are written without cancellation so they stay accurate
// for tiny s and delta.

#include <cmath>

#include "qdefect/qcore.hpp"

namespace qdefect {

/// delta = lambda3 + sqrt6/3, s = lambda1 - sqrt6/6, r = lambda2 - sqrt6/6.
struct SplitEigenvalues {
  double delta = 0.0;
  double s = 0.0;
  double r = 0.0;
};

inline constexpr double kSMax = kSqrt6 / 6.0;

inline SplitEigenvalues split_from_delta(double delta) {
  const double disc = 2.0 * kSqrt6 * delta - 3.0 * delta * delta;
  if (!(delta >= 0.0) || delta > kSqrt6 / 6.0 + 1e-15 || disc < 0.0) {
    throw Error(ErrorCode::OutOfRange, "delta must lie in [0, sqrt6/6]");
  }
  SplitEigenvalues out;
  out.delta = delta;
  if (delta == 0.0) return out;
  out.s = delta * (kSqrt6 - 2.0 * delta) / (delta + std::sqrt(disc));
  out.r = -out.s - delta;
  return out;
}

namespace detail {

inline double s_root(double s) {
  const double disc = 6.0 - 4.0 * kSqrt6 * s - 12.0 * s * s;
  if (!(s >= 0.0) || disc < -1e-14) {
    throw Error(ErrorCode::OutOfRange, "s must lie in [0, sqrt6/6]");
  }
  return std::sqrt(std::max(disc, 0.0));
}

}  // namespace detail

inline double delta_from_s(double s) {
  const double root = detail::s_root(s);
  return 4.0 * s * s / ((kSqrt6 - 2.0 * s) + root);
}

/// delta_from_s(s) - (sqrt6/3) s^2, evaluated without subtraction.
inline double tau(double s) {
  const double root = detail::s_root(s);
  const double d = (kSqrt6 - 2.0 * s) + root;
  return s * s * s * (48.0 * kSqrt6 + 96.0 * s) /
         (3.0 * d * (6.0 + 2.0 * kSqrt6 * s + kSqrt6 * root));
}

struct Decomposition {
  Vec3 p = Vec3::UnitZ();
  Vec3 n = Vec3::UnitX();
  double s = 0.0;
  TangentTensor U;
  QTensor R;
};

/// Flip v so its first component with |v_i| > 1e-12 is positive.
inline Vec3 canonical_sign(const Vec3& v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) return v[i] > 0.0 ? v : Vec3(-v);
  }
  return v;
}

inline Mat3 negative_uniaxial_part(const Vec3& p) {
  return -0.5 * kSqrt6 * (p * p.transpose() - Mat3::Identity() / 3.0);
}

inline Decomposition decompose(const QTensor& q) {
  if (std::abs(q.norm() - 1.0) > 1e-8) {
    throw Error(ErrorCode::NotUnitNorm, "decompose requires |Q| = 1");
  }
  const EigenSystem es = eigen_decompose(q);
  if (es.values[1] - es.values[2] < 1e-6) {
    throw Error(ErrorCode::EigenvalueGapTooSmall, "lambda3 is not isolated");
  }
  Decomposition d;
  d.p = canonical_sign(es.p);
  d.n = es.n;
  d.s = std::max(es.values[0] - kSqrt6 / 6.0, 0.0);
  const Mat3 u = d.s * (es.n * es.n.transpose() - es.m * es.m.transpose());
  d.U = TangentTensor::from_matrix(u, d.p);
  d.R = QTensor::from_matrix(q.matrix() - negative_uniaxial_part(d.p) - u);
  return d;
}

/// Unit-norm Q with eigenframe (n, p x n, p) and first eigenvalue sqrt6/6 + s.
inline QTensor reconstruct(const Vec3& p, double s, const Vec3& n) {
  detail::require_unit(p, "p");
  detail::require_unit(n, "n");
  if (std::abs(n.dot(p)) > 1e-12) throw Error(ErrorCode::NonOrthogonal, "n must be orthogonal to p");
  const double delta = delta_from_s(s);
  const Vec3 m = p.cross(n);
  const double l1 = kSqrt6 / 6.0 + s;
  const double l2 = kSqrt6 / 6.0 - s - delta;
  const double l3 = -kSqrt6 / 3.0 + delta;
  return QTensor::from_matrix(l1 * n * n.transpose() + l2 * m * m.transpose() + l3 * p * p.transpose());
}

}  // namespace qdefect
