#pragma once

#include <array>
#include <cmath>

namespace mjpde {

// Fixed-size helpers for the 3-dimensional blocks of the plant. Row vectors
// and column vectors share Vec3; the context fixes the orientation.
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // row-major

inline constexpr Vec3 kVec3Zero{0.0, 0.0, 0.0};
inline constexpr Mat3 kMat3Zero{Vec3{0.0, 0.0, 0.0}, Vec3{0.0, 0.0, 0.0},
                                Vec3{0.0, 0.0, 0.0}};

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm2(const Vec3& v) { return std::sqrt(dot(v, v)); }

// m * v with v a column vector.
inline Vec3 matvec(const Mat3& m, const Vec3& v) {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

// r * m with r a row vector; result is a row vector.
inline Vec3 rowmat(const Vec3& r, const Mat3& m) {
  Vec3 out{};
  for (int c = 0; c < 3; ++c)
    out[c] = r[0] * m[0][c] + r[1] * m[1][c] + r[2] * m[2][c];
  return out;
}

inline Vec3 add(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Mat3 add(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) out[r] = add(a[r], b[r]);
  return out;
}

inline Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Mat3 sub(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) out[r] = sub(a[r], b[r]);
  return out;
}

inline Vec3 scale(const Vec3& a, double s) {
  return {a[0] * s, a[1] * s, a[2] * s};
}

inline Mat3 scale(const Mat3& a, double s) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) out[r] = scale(a[r], s);
  return out;
}

inline bool all_finite(double v) { return std::isfinite(v); }

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

inline bool all_finite(const Mat3& m) {
  return all_finite(m[0]) && all_finite(m[1]) && all_finite(m[2]);
}

template <class M>
M zero_value();

template <>
inline double zero_value<double>() {
  return 0.0;
}

template <>
inline Vec3 zero_value<Vec3>() {
  return kVec3Zero;
}

template <>
inline Mat3 zero_value<Mat3>() {
  return kMat3Zero;
}

// Largest eigenvalue of a symmetric 3x3 matrix (trigonometric closed form).
double sym_eig_max(const Mat3& a);

// Spectral norm sqrt(lambda_max(m^T m)) of a general 3x3 matrix.
double spectral_norm(const Mat3& m);

}  // namespace mjpde
