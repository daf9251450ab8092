#pragma once

// SU(2) as unit quaternions.
//
// A quaternion (q0, q1, q2, q3) stands for the 2x2 matrix
//     U = q0*I + i*(q1*sx + q2*sy + q3*sz),
// so Re Tr U = 2*q0 and U^-1 is the conjugate. The Lie algebra basis is
// t_a = s_a / sqrt(2), normalized by Tr t_a t_b = delta_ab, with
// [t_a, t_b] = i*sqrt(2)*eps_abc*t_c.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace orbitgauge {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec3 = Eigen::Vector3d;
using So3Matrix = Eigen::Matrix3d;
using Mat2c = Eigen::Matrix2cd;

struct UnitQuaternion {
  double q0 = 1.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;

  static constexpr UnitQuaternion identity() { return {}; }

  Vec3 vec() const { return {q1, q2, q3}; }
  double norm() const { return std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3); }

  UnitQuaternion normalized() const {
    const double n = norm();
    return {q0 / n, q1 / n, q2 / n, q3 / n};
  }

  constexpr UnitQuaternion inverse() const { return {q0, -q1, -q2, -q3}; }
  constexpr UnitQuaternion operator-() const { return {-q0, -q1, -q2, -q3}; }

  constexpr bool operator==(const UnitQuaternion&) const = default;
};

inline UnitQuaternion from_parts(double s, const Vec3& v) { return {s, v.x(), v.y(), v.z()}; }

// Product of the represented 2x2 matrices, without renormalization.
inline UnitQuaternion mul_raw(const UnitQuaternion& a, const UnitQuaternion& b) {
  // (a0 + i a.s)(b0 + i b.s) = a0 b0 - a.b + i (a0 b + b0 a - a x b).s
  const Vec3 av = a.vec();
  const Vec3 bv = b.vec();
  return from_parts(a.q0 * b.q0 - av.dot(bv), a.q0 * bv + b.q0 * av - av.cross(bv));
}

inline UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  return mul_raw(a, b).normalized();
}

inline UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return quat_mul(a, b);
}

// 4-vector dot product; Re Tr(A^-1 B) = 2 * dot4(A, B).
inline double dot4(const UnitQuaternion& a, const UnitQuaternion& b) {
  return a.q0 * b.q0 + a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3;
}

inline double re_trace(const UnitQuaternion& u) { return 2.0 * u.q0; }

// |a - b|^2 = 2 - 2 dot4(a, b) for unit quaternions, without the cancellation.
inline double chord_sq(const UnitQuaternion& a, const UnitQuaternion& b) {
  const double d0 = a.q0 - b.q0, d1 = a.q1 - b.q1, d2 = a.q2 - b.q2, d3 = a.q3 - b.q3;
  return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
}

inline double max_abs_diff(const UnitQuaternion& a, const UnitQuaternion& b) {
  return std::max({std::abs(a.q0 - b.q0), std::abs(a.q1 - b.q1), std::abs(a.q2 - b.q2),
                   std::abs(a.q3 - b.q3)});
}

// Distance up to the center: min over the sign of -U.
inline double max_abs_diff_mod_sign(const UnitQuaternion& a, const UnitQuaternion& b) {
  return std::min(max_abs_diff(a, b), max_abs_diff(a, -b));
}

inline Mat2c to_matrix(const UnitQuaternion& u) {
  using C = std::complex<double>;
  Mat2c m;
  m << C(u.q0, u.q3), C(u.q2, u.q1), C(-u.q2, u.q1), C(u.q0, -u.q3);
  return m;
}

// Pauli matrices and the normalized basis t_a = s_a / sqrt(2).
inline Mat2c pauli(int a) {
  using C = std::complex<double>;
  Mat2c m;
  switch (a) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, C(0, -1), C(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

struct SuBasis {
  static Mat2c t(int a) { return pauli(a) / kSqrt2; }
  static constexpr double structure_constant = kSqrt2;
};

// exp(i * w.t) for a real coefficient vector w.
inline UnitQuaternion su2_exp(const Vec3& w) {
  const double s = w.norm() / kSqrt2;
  if (s == 0.0) return UnitQuaternion::identity();
  return from_parts(std::cos(s), std::sin(s) * w.normalized());
}

// Inverse of su2_exp on the principal branch (rotation angle in [0, pi]).
inline Vec3 su2_log(const UnitQuaternion& u) {
  const Vec3 v = u.vec();
  const double vn = v.norm();
  if (vn == 0.0) return Vec3::Zero();
  const double s = std::atan2(vn, u.q0);
  return (kSqrt2 * s / vn) * v;
}

// U^t along the one-parameter subgroup through U.
inline UnitQuaternion su2_pow(const UnitQuaternion& u, double t) { return su2_exp(t * su2_log(u)); }

// exp(i * angle * s_axis) for axis 0,1,2 = x,y,z.
inline UnitQuaternion pauli_exp(int axis, double angle) {
  Vec3 v = Vec3::Zero();
  v[axis] = std::sin(angle);
  return from_parts(std::cos(angle), v);
}

// Adjoint representation: U t_b U^-1 = R_ab t_a.
inline So3Matrix adjoint(const UnitQuaternion& u) {
  So3Matrix r;
  const UnitQuaternion inv = u.inverse();
  for (int b = 0; b < 3; ++b) {
    Vec3 e = Vec3::Zero();
    e[b] = 1.0;
    r.col(b) = mul_raw(mul_raw(u, from_parts(0.0, e)), inv).vec();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Euler angles. Chart coordinates (alpha, beta, theta) are the rescaled angles:
//     U = exp(i alpha/2 sz) exp(i beta/2 sx) exp(i theta/2 sz).
// Canonical ranges alpha, theta in [0, 2pi), beta in [0, pi]; the pair
// (alpha, theta) -> (alpha + 2pi, theta) maps U to -U, so decomposition
// recovers U only up to the center and reports the sign separately.

struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;
};

struct EulerDecomposition {
  EulerAngles angles;
  int sign = 1;  // euler_compose(angles) * sign == U
};

inline UnitQuaternion euler_compose(const EulerAngles& e) {
  const double a = 0.5 * e.alpha;
  const double b = 0.5 * e.beta;
  const double c = 0.5 * e.theta;
  const double cb = std::cos(b);
  const double sb = std::sin(b);
  return {cb * std::cos(a + c), sb * std::cos(a - c), -sb * std::sin(a - c), cb * std::sin(a + c)};
}

inline double wrap_two_pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// Wraps an angle difference into (-pi, pi].
inline double wrap_pi(double x) {
  double r = wrap_two_pi(x + kPi) - kPi;
  if (r == -kPi) r = kPi;
  return r;
}

inline constexpr double kEulerPoleEps = 1e-12;

inline EulerDecomposition euler_decompose(const UnitQuaternion& u) {
  const double cb = std::hypot(u.q0, u.q3);
  const double sb = std::hypot(u.q1, u.q2);
  EulerAngles e;
  e.beta = 2.0 * std::atan2(sb, cb);
  if (sb < kEulerPoleEps) {
    e.beta = 0.0;
    e.alpha = wrap_two_pi(2.0 * std::atan2(u.q3, u.q0));
    e.theta = 0.0;
  } else if (cb < kEulerPoleEps) {
    e.beta = kPi;
    e.alpha = wrap_two_pi(2.0 * std::atan2(-u.q2, u.q1));
    e.theta = 0.0;
  } else {
    const double p = std::atan2(u.q3, u.q0);   // (alpha + theta) / 2
    const double m = std::atan2(-u.q2, u.q1);  // (alpha - theta) / 2
    e.alpha = wrap_two_pi(p + m);
    e.theta = wrap_two_pi(p - m);
  }
  const int sign = dot4(euler_compose(e), u) >= 0.0 ? 1 : -1;
  return {e, sign};
}

// ---------------------------------------------------------------------------
// Haar measure on SU(2) = uniform measure on S^3.

template <class Rng>
UnitQuaternion haar_sample(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (;;) {
    UnitQuaternion q{n01(rng), n01(rng), n01(rng), n01(rng)};
    if (q.norm() > 1e-8) return q.normalized();
  }
}

inline UnitQuaternion haar_sample(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return haar_sample(rng);
}

}  // namespace orbitgauge
