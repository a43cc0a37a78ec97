#pragma once

// Q-tensor algebra: the 5-coefficient parametrization of symmetric traceless
// 3x3 matrices, biaxiality, closed-form spectral decomposition, uniaxial
// constructors and the projection onto the tangent plane U_p.
//
// Coefficient basis (orthonormal in the Frobenius inner product):
//   B1 = (e1e1 - e2e2)/sqrt2
//   B2 = (2 e3e3 - e1e1 - e2e2)/sqrt6
//   B3 = (e1e2 + e2e1)/sqrt2
//   B4 = (e1e3 + e3e1)/sqrt2
//   B5 = (e2e3 + e3e2)/sqrt2
// All file formats store these five coefficients.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qdefect/error.hpp"

namespace qdefect {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kSqrt3 = std::numbers::sqrt3;
inline constexpr double kSqrt6 = 2.44948974278317809819728407470589;
/// Eigenvalue pairs closer than this are treated as degenerate.
inline constexpr double kDegenerateTol = 1e-9;
inline constexpr double kBetaClampTol = 1e-10;

namespace detail {

inline void require_unit(const Vec3& v, const char* what, double tol = 1e-12) {
  if (!(std::abs(v.norm() - 1.0) <= tol)) {
    throw Error(ErrorCode::NonUnitVector, std::string(what) + " must be a unit vector");
  }
}

}  // namespace detail

class QTensor {
 public:
  QTensor() : c_(Vec5::Zero()) {}
  explicit QTensor(const Vec5& c) : c_(c) {}
  QTensor(double c1, double c2, double c3, double c4, double c5) { c_ << c1, c2, c3, c4, c5; }

  /// Coefficients of the symmetric traceless part of `m`.
  static QTensor from_matrix(const Mat3& m) {
    const double q12 = 0.5 * (m(0, 1) + m(1, 0));
    const double q13 = 0.5 * (m(0, 2) + m(2, 0));
    const double q23 = 0.5 * (m(1, 2) + m(2, 1));
    return QTensor((m(0, 0) - m(1, 1)) / kSqrt2, (2.0 * m(2, 2) - m(0, 0) - m(1, 1)) / kSqrt6,
                   kSqrt2 * q12, kSqrt2 * q13, kSqrt2 * q23);
  }

  Mat3 matrix() const {
    const double d2 = c_[1] / kSqrt6;
    const double d1 = c_[0] / kSqrt2;
    Mat3 m;
    m(0, 0) = d1 - d2;
    m(1, 1) = -d1 - d2;
    m(2, 2) = 2.0 * d2;
    m(0, 1) = m(1, 0) = c_[2] / kSqrt2;
    m(0, 2) = m(2, 0) = c_[3] / kSqrt2;
    m(1, 2) = m(2, 1) = c_[4] / kSqrt2;
    return m;
  }

  const Vec5& coeffs() const { return c_; }
  Vec5& coeffs() { return c_; }
  double operator[](int i) const { return c_[i]; }
  double& operator[](int i) { return c_[i]; }

  double norm() const { return c_.norm(); }
  double squared_norm() const { return c_.squaredNorm(); }
  QTensor normalized() const { return QTensor(c_ / c_.norm()); }
  double dot(const QTensor& o) const { return c_.dot(o.c_); }

  QTensor& operator+=(const QTensor& o) { c_ += o.c_; return *this; }
  QTensor& operator-=(const QTensor& o) { c_ -= o.c_; return *this; }
  QTensor& operator*=(double a) { c_ *= a; return *this; }
  friend QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
  friend QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
  friend QTensor operator*(double s, QTensor a) { return a *= s; }
  friend QTensor operator*(QTensor a, double s) { return a *= s; }
  friend bool operator==(const QTensor& a, const QTensor& b) { return a.c_ == b.c_; }

 private:
  Vec5 c_;
};

/// The basis element B_{a+1}, a in [0, 5).
inline Mat3 basis_element(int a) {
  Vec5 c = Vec5::Zero();
  c[a] = 1.0;
  return QTensor(c).matrix();
}

/// tr(M^3) for a symmetric matrix.
inline double trace_cubed(const Mat3& m) { return (m * m).cwiseProduct(m).sum(); }

/// sqrt6 tr(Q^3) / |Q|^3, clamped to [-1, 1] within rounding.
inline double biaxiality(const QTensor& q) {
  const double n = q.norm();
  if (n <= 1e-12) throw Error(ErrorCode::ZeroTensor, "biaxiality of |Q| <= 1e-12");
  double beta = kSqrt6 * trace_cubed(q.matrix()) / (n * n * n);
  if (std::abs(beta) > 1.0) {
    if (std::abs(beta) > 1.0 + kBetaClampTol) {
      throw Error(ErrorCode::BiaxialityOvershoot, "beta outside [-1, 1] beyond rounding");
    }
    beta = std::clamp(beta, -1.0, 1.0);
  }
  return beta;
}

struct EigenSystem {
  Vec3 values = Vec3::Zero();  // descending
  Vec3 n = Vec3::UnitX();
  Vec3 m = Vec3::UnitY();
  Vec3 p = Vec3::UnitZ();

  Mat3 reconstruct() const {
    return values[0] * n * n.transpose() + values[1] * m * m.transpose() +
           values[2] * p * p.transpose();
  }
  const Vec3& axis(int i) const { return i == 0 ? n : (i == 1 ? m : p); }
};

namespace detail {

/// Trigonometric closed form; returns eigenvalues in descending order.
inline Vec3 symmetric_eigenvalues(const Mat3& a) {
  const double mean = a.trace() / 3.0;
  const Mat3 b = a - mean * Mat3::Identity();
  const double p2 = b.squaredNorm() / 6.0;
  if (p2 < 1e-300) return Vec3::Constant(mean);
  const double p = std::sqrt(p2);
  const double r = std::clamp((b / p).determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double l1 = mean + 2.0 * p * std::cos(phi);
  const double l3 = mean + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double l2 = 3.0 * mean - l1 - l3;
  Vec3 out(l1, l2, l3);
  std::sort(out.data(), out.data() + 3, std::greater<>());
  return out;
}

/// Null vector of (a - lambda I) from the best-conditioned row cross product.
inline Vec3 isolated_eigenvector(const Mat3& a, double lambda) {
  const Mat3 m = a - lambda * Mat3::Identity();
  const Vec3 r0 = m.row(0), r1 = m.row(1), r2 = m.row(2);
  const std::array<Vec3, 3> cand{r0.cross(r1), r0.cross(r2), r1.cross(r2)};
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (cand[i].squaredNorm() > cand[best].squaredNorm()) best = i;
  }
  return cand[best].normalized();
}

/// Orthonormal basis of the plane orthogonal to `normal`: canonical axes are
/// projected and Gram-Schmidt orthonormalized in index order.
inline std::array<Vec3, 2> plane_basis(const Vec3& normal) {
  std::array<Vec3, 2> out{Vec3::Zero(), Vec3::Zero()};
  int found = 0;
  for (int i = 0; i < 3 && found < 2; ++i) {
    Vec3 v = Vec3::Unit(i) - normal * normal[i];
    for (int j = 0; j < found; ++j) v -= out[j] * out[j].dot(v);
    const double len = v.norm();
    if (len > 1e-3) out[found++] = v / len;
  }
  return out;
}

}  // namespace detail

/// Ordered eigenvalues and an orthonormal eigenframe of a symmetric matrix.
/// Degenerate eigenspaces get the projected-canonical-axes basis, so the
/// output is a deterministic function of the entries.
inline EigenSystem eigen_decompose(const Mat3& a) {
  EigenSystem es;
  es.values = detail::symmetric_eigenvalues(a);
  const double gap12 = es.values[0] - es.values[1];
  const double gap23 = es.values[1] - es.values[2];
  if (gap12 < kDegenerateTol && gap23 < kDegenerateTol) return es;

  const bool first_isolated = gap12 >= gap23;
  const Vec3 iso = detail::isolated_eigenvector(a, es.values[first_isolated ? 0 : 2]);
  const auto [u, w] = detail::plane_basis(iso);
  const double other_gap = first_isolated ? gap23 : gap12;

  // The close pair is recomputed from the 2x2 block orthogonal to the
  // isolated eigenvector; the closed form loses half the digits there.
  const double a11 = u.dot(a * u), a12 = u.dot(a * w), a22 = w.dot(a * w);
  const double mid = 0.5 * (a11 + a22), rad = std::hypot(0.5 * (a11 - a22), a12);
  Vec3 hi = u, lo = w;
  if (other_gap >= kDegenerateTol) {
    const double theta = 0.5 * std::atan2(2.0 * a12, a11 - a22);
    const double c = std::cos(theta), s = std::sin(theta);
    hi = c * u + s * w;
    lo = -s * u + c * w;
  }
  const double iso_value = iso.dot(a * iso);
  if (first_isolated) {
    es.n = iso;
    es.m = hi;
    es.p = lo;
    es.values = Vec3(iso_value, mid + rad, mid - rad);
  } else {
    es.n = hi;
    es.m = lo;
    es.p = iso;
    es.values = Vec3(mid + rad, mid - rad, iso_value);
  }
  return es;
}

inline EigenSystem eigen_decompose(const QTensor& q) { return eigen_decompose(q.matrix()); }

enum class Uniaxial { positive, negative };

/// +-sqrt(3/2)(n n - Id/3); unit norm, beta = +-1.
inline QTensor make_uniaxial(const Vec3& n, Uniaxial sign) {
  detail::require_unit(n, "director");
  const double scale = (sign == Uniaxial::positive ? 1.0 : -1.0) * std::sqrt(1.5);
  return QTensor::from_matrix(scale * (n * n.transpose() - Mat3::Identity() / 3.0));
}

/// Orthonormal completion {e1, e2} of a unit vector p with e1 x e2 = p.
struct PlaneFrame {
  Vec3 p = Vec3::UnitZ();
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();

  static PlaneFrame complete(const Vec3& p) {
    int axis = 0;
    for (int i = 1; i < 3; ++i) {
      if (std::abs(p[i]) < std::abs(p[axis])) axis = i;
    }
    PlaneFrame f;
    f.p = p;
    f.e1 = (Vec3::Unit(axis) - p[axis] * p).normalized();
    f.e2 = p.cross(f.e1);
    return f;
  }

  Mat3 E1() const { return (e1 * e1.transpose() - e2 * e2.transpose()) / kSqrt2; }
  Mat3 E2() const { return (e1 * e2.transpose() + e2 * e1.transpose()) / kSqrt2; }
};

/// Element of U_p = {U in Q0 : U p = 0}, stored as coordinates over {E1, E2}.
class TangentTensor {
 public:
  TangentTensor() = default;
  TangentTensor(const Vec3& p, double u1, double u2)
      : frame_(PlaneFrame::complete(p)), u_(u1, u2) {}
  TangentTensor(const PlaneFrame& frame, double u1, double u2) : frame_(frame), u_(u1, u2) {}

  /// Coordinates of the component of `v` lying in U_p (Frobenius projection).
  static TangentTensor from_matrix(const Mat3& v, const Vec3& p) {
    const PlaneFrame f = PlaneFrame::complete(p);
    return TangentTensor(f, v.cwiseProduct(f.E1()).sum(), v.cwiseProduct(f.E2()).sum());
  }

  Mat3 matrix() const { return u_[0] * frame_.E1() + u_[1] * frame_.E2(); }
  QTensor qtensor() const { return QTensor::from_matrix(matrix()); }
  const Eigen::Vector2d& coeffs() const { return u_; }
  const Vec3& direction() const { return frame_.p; }
  const PlaneFrame& frame() const { return frame_; }
  double norm() const { return u_.norm(); }

 private:
  PlaneFrame frame_;
  Eigen::Vector2d u_ = Eigen::Vector2d::Zero();
};

/// Orthogonal projection of a symmetric matrix onto U_p:
///   Y = V - V pp - pp V + (V:pp) pp - (V:(Id - pp))/2 (Id - pp).
inline Mat3 project_to_Up_matrix(const Mat3& v, const Vec3& p) {
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorCode::NonSymmetric, "project_to_Up requires a symmetric matrix");
  }
  detail::require_unit(p, "p");
  const Mat3 pp = p * p.transpose();
  const Mat3 perp = Mat3::Identity() - pp;
  return v - v * pp - pp * v + v.cwiseProduct(pp).sum() * pp - 0.5 * v.cwiseProduct(perp).sum() * perp;
}

inline TangentTensor project_to_Up(const Mat3& v, const Vec3& p) {
  return TangentTensor::from_matrix(project_to_Up_matrix(v, p), p);
}

/// max over axes of 1 - |<a_i, b_i>|; insensitive to per-axis sign.
inline double frame_distance(const EigenSystem& a, const EigenSystem& b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d = std::max(d, 1.0 - std::abs(a.axis(i).dot(b.axis(i))));
  return d;
}

/// frame_distance minimized over relabelings of the axes. Eigenvalue
/// exchanges swap labels without moving the frame as a set of lines.
inline double frame_distance_unordered(const EigenSystem& a, const EigenSystem& b) {
  std::array<int, 3> perm{0, 1, 2};
  double best = 1.0;
  do {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d = std::max(d, 1.0 - std::abs(a.axis(i).dot(b.axis(perm[i]))));
    best = std::min(best, d);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace qdefect
