#pragma once

// Homogeneous polynomials in three variables with exact calculus and exact
// integration over the unit ball.
//
// Monomials x^a y^b z^c of degree k are ordered by a descending, then b
// descending; index(a, b) = (k-a)(k-a+1)/2 + (k-a-b).

#include <array>
#include <cmath>
#include <vector>

#include "qdefect/qcore.hpp"

namespace qdefect {

using Exponent = std::array<int, 3>;

inline int monomial_count(int k) { return (k + 1) * (k + 2) / 2; }

inline int monomial_index(int k, const Exponent& e) {
  const int t = k - e[0];
  return t * (t + 1) / 2 + (t - e[1]);
}

inline std::vector<Exponent> monomials(int k) {
  std::vector<Exponent> out;
  out.reserve(monomial_count(k));
  for (int a = k; a >= 0; --a) {
    for (int b = k - a; b >= 0; --b) out.push_back({a, b, k - a - b});
  }
  return out;
}

inline double monomial_value(const Exponent& e, const Vec3& x) {
  return std::pow(x[0], e[0]) * std::pow(x[1], e[1]) * std::pow(x[2], e[2]);
}

/// Integral of x^a y^b z^c over the unit ball.
inline double ball_monomial_integral(const Exponent& e) {
  if (e[0] % 2 || e[1] % 2 || e[2] % 2) return 0.0;
  const int n = e[0] + e[1] + e[2];
  const double sphere = 2.0 * std::tgamma((e[0] + 1) / 2.0) * std::tgamma((e[1] + 1) / 2.0) *
                        std::tgamma((e[2] + 1) / 2.0) / std::tgamma((n + 3) / 2.0);
  return sphere / (n + 3);
}

class HomPoly {
 public:
  HomPoly() : HomPoly(0) {}
  explicit HomPoly(int degree) : k_(degree), c_(std::max(monomial_count(std::max(degree, 0)), 0), 0.0) {
    if (degree < 0) c_.clear();
  }
  HomPoly(int degree, std::vector<double> coeffs) : k_(degree), c_(std::move(coeffs)) {}

  int degree() const { return k_; }
  bool is_zero_space() const { return c_.empty(); }
  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }
  double& operator[](const Exponent& e) { return c_[monomial_index(k_, e)]; }
  double operator[](const Exponent& e) const { return c_[monomial_index(k_, e)]; }

  double operator()(const Vec3& x) const {
    if (c_.empty()) return 0.0;
    double v = 0.0;
    const auto ms = monomials(k_);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (c_[i] != 0.0) v += c_[i] * monomial_value(ms[i], x);
    }
    return v;
  }

  /// d/dx_axis; degree k-1 (empty for k = 0).
  HomPoly derivative(int axis) const {
    HomPoly out(k_ - 1);
    if (k_ == 0) return out;
    const auto ms = monomials(k_);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      Exponent e = ms[i];
      if (e[axis] == 0 || c_[i] == 0.0) continue;
      const double f = e[axis];
      --e[axis];
      out[e] += f * c_[i];
    }
    return out;
  }

  HomPoly laplacian() const {
    HomPoly out(k_ - 2);
    if (k_ < 2) return out;
    for (int i = 0; i < 3; ++i) out += derivative(i).derivative(i);
    return out;
  }

  HomPoly& operator+=(const HomPoly& o) {
    if (o.c_.empty()) return *this;
    if (c_.empty()) return *this = o;
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  HomPoly& operator*=(double a) {
    for (double& v : c_) v *= a;
    return *this;
  }
  friend HomPoly operator+(HomPoly a, const HomPoly& b) { return a += b; }
  friend HomPoly operator*(double a, HomPoly p) { return p *= a; }

  friend HomPoly operator*(const HomPoly& a, const HomPoly& b) {
    if (a.c_.empty() || b.c_.empty()) return HomPoly(-1);
    HomPoly out(a.k_ + b.k_);
    const auto ma = monomials(a.k_), mb = monomials(b.k_);
    for (std::size_t i = 0; i < ma.size(); ++i) {
      if (a.c_[i] == 0.0) continue;
      for (std::size_t j = 0; j < mb.size(); ++j) {
        if (b.c_[j] == 0.0) continue;
        out[{ma[i][0] + mb[j][0], ma[i][1] + mb[j][1], ma[i][2] + mb[j][2]}] += a.c_[i] * b.c_[j];
      }
    }
    return out;
  }

  double ball_integral() const {
    if (c_.empty()) return 0.0;
    const auto ms = monomials(k_);
    double v = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (c_[i] != 0.0) v += c_[i] * ball_monomial_integral(ms[i]);
    }
    return v;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int k_;
  std::vector<double> c_;
};

/// Sum over i of the ball integral of (d_i a)(d_i b).
inline double ball_gradient_inner(const HomPoly& a, const HomPoly& b) {
  double v = 0.0;
  for (int i = 0; i < 3; ++i) v += (a.derivative(i) * b.derivative(i)).ball_integral();
  return v;
}

/// U(x) = u1(x) E1 + u2(x) E2 with {E1, E2} the basis of U_p0.
struct TangentPolynomial {
  PlaneFrame frame;
  HomPoly u1;
  HomPoly u2;

  int degree() const { return u1.degree(); }
  Mat3 operator()(const Vec3& x) const { return u1(x) * frame.E1() + u2(x) * frame.E2(); }

  /// The same tensor polynomial expressed over the E-basis of another frame
  /// with the same p (a rotation of the coefficient pair by twice the angle).
  TangentPolynomial in_frame(const PlaneFrame& other) const {
    const double c11 = frame.E1().cwiseProduct(other.E1()).sum();
    const double c12 = frame.E1().cwiseProduct(other.E2()).sum();
    const double c21 = frame.E2().cwiseProduct(other.E1()).sum();
    const double c22 = frame.E2().cwiseProduct(other.E2()).sum();
    return {other, c11 * u1 + c21 * u2, c12 * u1 + c22 * u2};
  }

  /// Ball integral of |grad U|^2 (the E-basis is orthonormal).
  double dirichlet_integral() const { return ball_gradient_inner(u1, u1) + ball_gradient_inner(u2, u2); }
};

/// Symmetric-matrix-valued homogeneous polynomial: one Mat3 per monomial.
struct VPoly {
  int m = 2;  // V_m has polynomial degree m - 2
  std::vector<Mat3> coeffs;
  std::vector<std::vector<Vec3>> jets;  // jets[order][monomial index] = D^g p(x0)

  int poly_degree() const { return m - 2; }
  Mat3 operator()(const Vec3& x) const {
    Mat3 v = Mat3::Zero();
    const auto ms = monomials(poly_degree());
    for (std::size_t i = 0; i < ms.size(); ++i) v += coeffs[i] * monomial_value(ms[i], x);
    return v;
  }
};

}  // namespace qdefect
