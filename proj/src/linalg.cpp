#include "mjpde/linalg.hpp"

#include <algorithm>

namespace mjpde {

namespace {

double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

double sym_eig_max(const Mat3& a) {
  const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  if (p1 == 0.0) return std::max({a[0][0], a[1][1], a[2][2]});

  const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
  const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) +
                    (a[2][2] - q) * (a[2][2] - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);

  Mat3 b = a;
  for (int i = 0; i < 3; ++i) b[i][i] -= q;
  b = scale(b, 1.0 / p);

  double r = det3(b) / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi);
}

double spectral_norm(const Mat3& m) {
  Mat3 mtm{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m[k][i] * m[k][j];
      mtm[i][j] = s;
    }
  return std::sqrt(std::max(0.0, sym_eig_max(mtm)));
}

}  // namespace mjpde
