#pragma once

#include "geotrack/spd.hpp"

#include <Eigen/Dense>
#include <random>

namespace geotrack::testing {

inline Mat random_rotation(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = n(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

// Random SPD tensor with eigenvalues in [lo, hi].
inline SpdTensor random_spd(std::mt19937_64& rng, int dim, double lo = 0.1, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec l(dim);
  for (int i = 0; i < dim; ++i) l[i] = u(rng);
  const Mat r = random_rotation(rng, dim);
  return SpdTensor(Mat(r * l.asDiagonal() * r.transpose()));
}

inline double rel_frobenius(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

}  // namespace geotrack::testing
