#include "doctest.h"
#include "geotrack/tensor_field.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace geotrack;
using geotrack::testing::random_rotation;
using geotrack::testing::random_spd;
using geotrack::testing::rel_frobenius;

namespace {

constexpr InterpolationMethod kMethods[] = {InterpolationMethod::Euclidean, InterpolationMethod::LogEuclidean,
                                           InterpolationMethod::SpectralQuaternion};

TensorField random_field(std::mt19937_64& rng, int dim, Index3 dims) {
  auto geom = GridGeometry::make(dim, dims, {0.5, 1.0, 2.0}, {-1.0, 2.0, 0.5});
  std::vector<SpdTensor> data;
  for (std::size_t i = 0; i < geom.voxel_count(); ++i) data.push_back(random_spd(rng, dim, 0.1, 2.0));
  return TensorField(geom, std::move(data));
}

TensorField constant_field(int dim, Index3 dims, const SpdTensor& t) {
  auto geom = GridGeometry::make(dim, dims);
  return TensorField(geom, std::vector<SpdTensor>(geom.voxel_count(), t));
}

SpdTensor rotated(const SpdTensor& t, double angle_rad) {
  Mat r = Mat::Identity(t.dim(), t.dim());
  r(0, 0) = std::cos(angle_rad);
  r(0, 1) = -std::sin(angle_rad);
  r(1, 0) = std::sin(angle_rad);
  r(1, 1) = std::cos(angle_rad);
  return SpdTensor(Mat(r * t.matrix() * r.transpose()));
}

}  // namespace

TEST_CASE("grid geometry and in_bounds") {
  const auto field = constant_field(3, {4, 5, 6}, SpdTensor::identity(3));
  const auto& g = field.geometry();
  CHECK(g.voxel_count() == 120);
  CHECK(g.index({1, 2, 3}) == (1 * 5 + 2) * 6 + 3);
  CHECK(g.unravel(g.index({3, 4, 5})) == Index3{3, 4, 5});
  CHECK(in_bounds(field, Vec::Zero(3)));
  CHECK_FALSE(in_bounds(field, Vec{{-1e-12, 0.0, 0.0}}));
  CHECK(in_bounds(field, Vec{{3.0, 4.0, 5.0}}));
  CHECK_FALSE(in_bounds(field, Vec{{3.0, 4.0, 5.0 + 1e-9}}));

  CHECK_THROWS_AS(GridGeometry::make(3, {2, 2, 2}, {1.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TensorField(GridGeometry::make(2, {2, 2, 1}), std::vector<SpdTensor>(3, SpdTensor::identity(2))),
                  std::invalid_argument);
  CHECK_THROWS_AS(TensorField(GridGeometry::make(2, {2, 1, 1}), std::vector<SpdTensor>(2, SpdTensor::identity(3))),
                  std::invalid_argument);
}

TEST_CASE("interpolation method names") {
  for (auto m : kMethods) CHECK(parse_interpolation(to_string(m)) == m);
  CHECK_THROWS_AS(parse_interpolation("cubic"), std::invalid_argument);
}

TEST_CASE("loge_geodesic") {
  const double e = std::numbers::e;
  const auto t1 = SpdTensor::diagonal({e * e, 1.0, 1.0});
  const auto t2 = SpdTensor::identity(3);
  CHECK(rel_frobenius(loge_geodesic(t1, t2, 1.0).matrix(), t1.matrix()) < 1e-14);
  CHECK(rel_frobenius(loge_geodesic(t1, t2, 0.0).matrix(), t2.matrix()) < 1e-14);
  const auto mid = loge_geodesic(t1, t2, 0.5);
  CHECK(mid(0, 0) == doctest::Approx(e).epsilon(1e-13));
  CHECK(mid(1, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(mid(0, 1)) < 1e-14);

  std::mt19937_64 rng(23);
  const auto t = random_spd(rng, 3);
  for (double s : {0.0, 0.3, 0.9}) CHECK(rel_frobenius(loge_geodesic(t, t, s).matrix(), t.matrix()) < 1e-12);
}

TEST_CASE("sq_geodesic") {
  const auto t1 = SpdTensor::diagonal({3.0, 1.0, 1.0});
  const auto t2 = rotated(t1, std::numbers::pi / 2);
  CHECK(rel_frobenius(sq_geodesic(t1, t2, 0.0).matrix(), t1.matrix()) < 1e-12);
  CHECK(rel_frobenius(sq_geodesic(t1, t2, 1.0).matrix(), t2.matrix()) < 1e-12);

  const auto mid = eig_sym(sq_geodesic(t1, t2, 0.5));
  CHECK(mid.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(mid.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mid.values[2] == doctest::Approx(1.0).epsilon(1e-12));
  const Vec diag45 = Vec{{1.0, 1.0, 0.0}}.normalized();
  CHECK(std::abs(mid.vectors.col(0).dot(diag45)) == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(29);
  for (int dim : {2, 3}) {
    const auto t = random_spd(rng, dim);
    for (double s : {0.0, 0.25, 0.5, 1.0}) CHECK(rel_frobenius(sq_geodesic(t, t, s).matrix(), t.matrix()) < 1e-12);
  }
}

TEST_CASE("SQ keeps anisotropy between equal-shape tensors, LogE swells") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat r1 = random_rotation(rng, 3);
    const Mat r2 = random_rotation(rng, 3);
    const Mat lam = Vec{{2.0, 0.6, 0.2}}.asDiagonal();
    const SpdTensor a(Mat(r1 * lam * r1.transpose()));
    const SpdTensor b(Mat(r2 * lam * r2.transpose()));
    const double ha = hilbert_anisotropy(a);
    for (int k = 0; k <= 20; ++k) {
      CHECK(std::abs(hilbert_anisotropy(sq_geodesic(a, b, k / 20.0)) - ha) < 1e-9);
    }
  }
  const auto a = SpdTensor::diagonal({3.0, 0.5, 0.5});
  const auto b = rotated(a, std::numbers::pi / 2);
  CHECK(hilbert_anisotropy(loge_geodesic(a, b, 0.5)) < hilbert_anisotropy(a) - 0.1);
}

TEST_CASE("interpolation reproduces nodes for every method") {
  std::mt19937_64 rng(37);
  for (int dim : {2, 3}) {
    const auto field = random_field(rng, dim, dim == 3 ? Index3{3, 4, 3} : Index3{4, 5, 1});
    const auto& g = field.geometry();
    for (std::size_t i = 0; i < field.size(); ++i) {
      const Vec p = g.voxel_position(g.unravel(i));
      for (auto m : kMethods) {
        CHECK(rel_frobenius(interpolate(field, p, m).matrix(), field.at(i).matrix()) < 1e-12);
      }
    }
  }
}

TEST_CASE("interpolation midpoints") {
  const double e = std::numbers::e;
  auto geom = GridGeometry::make(2, {2, 1, 1});
  const TensorField equal(geom, {SpdTensor::diagonal({2.0, 0.5}), SpdTensor::diagonal({2.0, 0.5})});
  for (auto m : kMethods) {
    CHECK(rel_frobenius(interpolate(equal, Vec{{0.5, 0.0}}, m).matrix(), equal.at(0).matrix()) < 1e-12);
  }
  const TensorField pair(geom, {SpdTensor::diagonal({e * e, 1.0}), SpdTensor::identity(2)});
  const auto mid = interpolate(pair, Vec{{0.5, 0.0}}, InterpolationMethod::LogEuclidean);
  CHECK(mid(0, 0) == doctest::Approx(e).epsilon(1e-13));
  const auto lin = interpolate(pair, Vec{{0.25, 0.0}}, InterpolationMethod::Euclidean);
  CHECK(lin(0, 0) == doctest::Approx(0.75 * e * e + 0.25).epsilon(1e-13));
}

TEST_CASE("interpolation stays SPD at random positions") {
  std::mt19937_64 rng(41);
  const auto field = random_field(rng, 3, {4, 4, 4});
  const Vec lo = field.geometry().lower();
  const Vec hi = field.geometry().upper();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec p(3);
    for (int a = 0; a < 3; ++a) p[a] = lo[a] + u(rng) * (hi[a] - lo[a]);
    for (auto m : kMethods) {
      const auto t = interpolate(field, p, m);
      CHECK(eig_sym(t).values[2] > 0.0);
    }
  }
  CHECK_THROWS_AS(interpolate(field, Vec{{lo[0] - 0.1, lo[1], lo[2]}}, InterpolationMethod::Euclidean), OutOfBounds);
}

TEST_CASE("metric derivatives") {
  SUBCASE("constant field") {
    const auto field = constant_field(3, {4, 4, 4}, SpdTensor::diagonal({1.5, 0.4, 0.2}));
    const auto dg = metric_derivatives(field, Vec{{1.3, 2.2, 0.7}}, MetricScheme::beta_scaled(), InterpolationMethod::Euclidean, 0.1);
    REQUIRE(dg.size() == 3);
    for (const auto& d : dg) CHECK(d.norm() < 1e-9);
  }
  SUBCASE("linear metric entry is differentiated exactly") {
    // 2D adjugate of diag(d1, d2) is diag(d2, d1): a linear D_yy gives a linear g_xx.
    auto geom = GridGeometry::make(2, {5, 3, 1});
    std::vector<SpdTensor> data;
    for (std::size_t i = 0; i < geom.voxel_count(); ++i) {
      const double x = geom.voxel_position(geom.unravel(i))[0];
      data.push_back(SpdTensor::diagonal({1.0, 2.0 + 0.5 * x}));
    }
    const TensorField field(geom, std::move(data));
    for (double x : {0.0, 0.05, 1.5, 2.3, 4.0}) {
      const auto dg = metric_derivatives(field, Vec{{x, 1.0}}, MetricScheme::adjugate(), InterpolationMethod::Euclidean, 0.1);
      CHECK(std::abs(dg[0](0, 0) - 0.5) < 1e-8);
      CHECK(std::abs(dg[1](0, 0)) < 1e-8);
      CHECK(std::abs(dg[0](1, 1)) < 1e-8);
    }
  }
  SUBCASE("symmetric output on random fields") {
    std::mt19937_64 rng(43);
    const auto field = random_field(rng, 3, {3, 3, 3});
    for (auto m : kMethods) {
      const auto dg = metric_derivatives(field, Vec{{-0.3, 3.1, 1.7}}, MetricScheme::beta_scaled(), m, 0.05);
      for (const auto& d : dg) CHECK((d - d.transpose()).norm() <= 1e-12 * (1.0 + d.norm()));
    }
  }
  SUBCASE("second-order convergence") {
    // Inside one cell D_xx is linear, so g_xx = 1/D_xx under the inverse metric.
    auto geom = GridGeometry::make(2, {2, 2, 1});
    const TensorField field(geom, {SpdTensor::diagonal({1.0, 1.0}), SpdTensor::diagonal({1.0, 1.0}),
                                   SpdTensor::diagonal({3.0, 1.0}), SpdTensor::diagonal({3.0, 1.0})});
    const double x = 0.4;
    const double exact = -2.0 / ((1.0 + 2.0 * x) * (1.0 + 2.0 * x));
    auto err = [&](double h) {
      return std::abs(metric_derivatives(field, Vec{{x, 0.5}}, MetricScheme::inverse(), InterpolationMethod::Euclidean, h)[0](0, 0) - exact);
    };
    const double ratio = err(0.1) / err(0.05);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }
  SUBCASE("flat axes and bad input") {
    const auto field = constant_field(3, {4, 4, 1}, SpdTensor::identity(3));
    const auto dg = metric_derivatives(field, Vec{{1.0, 1.0, 0.0}}, MetricScheme::inverse(), InterpolationMethod::Euclidean, 0.1);
    CHECK(dg[2].norm() == 0.0);
    CHECK_THROWS_AS(metric_derivatives(field, Vec{{1.0, 1.0, 0.0}}, MetricScheme::inverse(), InterpolationMethod::Euclidean, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(metric_derivatives(field, Vec{{-1.0, 1.0, 0.0}}, MetricScheme::inverse(), InterpolationMethod::Euclidean, 0.1),
                    OutOfBounds);
  }
}
