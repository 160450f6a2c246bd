#include "doctest.h"
#include "geotrack/phantom.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace geotrack;
using geotrack::testing::random_spd;
using geotrack::testing::rel_frobenius;

namespace {

double axis_angle_deg(const Vec& a, const Vec& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0)) * 180.0 / std::numbers::pi;
}

Vec unit_at(double deg) {
  const double a = deg * std::numbers::pi / 180.0;
  return Vec{{std::cos(a), std::sin(a)}};
}

}  // namespace

TEST_CASE("gradient scheme") {
  const auto s = gradient_scheme(81, 1500.0, 1.0);
  REQUIRE(s.gradients.size() == 81);
  CHECK(s.b == 1500.0);
  CHECK(s.S0 == 1.0);
  double min_angle = 180.0;
  for (std::size_t i = 0; i < 81; ++i) {
    CHECK(std::abs(s.gradients[i].norm() - 1.0) < 1e-12);
    for (std::size_t j = 0; j < i; ++j) min_angle = std::min(min_angle, axis_angle_deg(s.gradients[i], s.gradients[j]));
  }
  CHECK(min_angle > 10.0);
  CHECK_NOTHROW(s.validate());

  const auto planar = gradient_scheme(12, 1000.0, 2.0, 2);
  CHECK(planar.dim() == 2);
  CHECK(axis_angle_deg(planar.gradients[1], planar.gradients[0]) == doctest::Approx(15.0));
  CHECK(gradient_scheme(81, 1500.0, 1.0).gradients[40] == s.gradients[40]);

  CHECK_THROWS_AS(gradient_scheme(5, 1500.0, 1.0), std::invalid_argument);
  AcquisitionScheme bad = s;
  bad.gradients[3] *= 1.01;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("fiber curves") {
  FiberSpec line;
  line.start = {0.0, 0.0};
  line.end = {3.0, 4.0};
  const auto ls = sample_curve(line);
  CHECK(ls.front().pos == std::array<double, 2>{0.0, 0.0});
  CHECK(ls.back().pos[0] == doctest::Approx(3.0));
  CHECK(ls.back().pos[1] == doctest::Approx(4.0));
  CHECK(ls[5].tangent[0] == doctest::Approx(0.6));

  FiberSpec u;
  u.shape = FiberShape::UShape;
  u.center = {10.0, 10.0};
  u.radius = 5.0;
  u.leg_length = 6.0;
  const auto us = sample_curve(u);
  CHECK(us.front().pos[0] == doctest::Approx(5.0));
  CHECK(us.front().pos[1] == doctest::Approx(4.0));
  CHECK(us.back().pos[0] == doctest::Approx(15.0));
  CHECK(us.back().pos[1] == doctest::Approx(4.0));
  for (std::size_t i = 1; i < us.size(); ++i) {
    const double dot = us[i].tangent[0] * us[i - 1].tangent[0] + us[i].tangent[1] * us[i - 1].tangent[1];
    CHECK(dot > 0.99);
  }

  FiberSpec s;
  s.shape = FiberShape::SShape;
  s.center = {0.0, 0.0};
  s.radius = 2.0;
  const auto ss = sample_curve(s);
  CHECK(ss.front().pos[1] == doctest::Approx(-4.0));
  CHECK(ss.back().pos[1] == doctest::Approx(4.0));

  for (auto shape : {FiberShape::Line, FiberShape::UShape, FiberShape::SShape, FiberShape::Sine, FiberShape::Arc}) {
    CHECK(parse_fiber_shape(to_string(shape)) == shape);
  }

  FiberSpec degenerate;
  degenerate.end = degenerate.start;
  CHECK_THROWS_AS(degenerate.validate(), std::invalid_argument);
  FiberSpec thin;
  thin.thickness = 0.5;
  CHECK_THROWS_AS(thin.validate(), std::invalid_argument);
  FiberSpec unordered;
  unordered.eigenvalues = {0.2e-3, 1.7e-3, 0.2e-3};
  CHECK_THROWS_AS(unordered.validate(), std::invalid_argument);
}

TEST_CASE("rasterize") {
  SUBCASE("straight fiber along x") {
    FiberSpec line;
    line.start = {0.0, 5.0};
    line.end = {20.0, 5.0};
    const auto grid = GridGeometry::make(3, {21, 11, 3}, {1.0, 1.0, 1.0}, {0.0, 0.0, -1.0});
    const auto ph = rasterize(std::span<const FiberSpec>(&line, 1), grid);
    const auto& on = ph.dt_field.at(Index3{10, 5, 1});
    CHECK(axis_angle_deg(principal_direction(on), Vec{{1.0, 0.0, 0.0}}) < 1e-9);
    CHECK(eig_sym(on).values[0] == doctest::Approx(1.7e-3));
    CHECK(ph.masks[0][grid.index({10, 5, 1})] == 1);
    CHECK(ph.masks[0][grid.index({10, 0, 1})] == 0);
    CHECK(ph.tangents[grid.index({10, 5, 1})].size() == 1);
    const auto& bg = ph.dt_field.at(Index3{10, 0, 1});
    CHECK(anisotropy_scalar(bg, Anisotropy::FA) == doctest::Approx(0.0));
    CHECK(bg(0, 0) == doctest::Approx(kDefaultBackgroundDiffusivity));
    REQUIRE(ph.t4_field);
    CHECK(ph.t4_field->geometry() == grid);
  }
  SUBCASE("U-shape apex tangent is horizontal") {
    FiberSpec u;
    u.shape = FiberShape::UShape;
    u.center = {20.0, 20.0};
    u.radius = 10.0;
    u.leg_length = 12.0;
    u.thickness = 3.0;
    const auto grid = GridGeometry::make(2, {41, 34, 1});
    const auto ph = rasterize(std::span<const FiberSpec>(&u, 1), grid, kDefaultBackgroundDiffusivity, false);
    CHECK(axis_angle_deg(principal_direction(ph.dt_field.at(Index3{20, 30, 0})), Vec{{1.0, 0.0}}) < 0.5);
    CHECK(axis_angle_deg(principal_direction(ph.dt_field.at(Index3{10, 12, 0})), Vec{{0.0, 1.0}}) < 1e-6);
    CHECK_FALSE(ph.t4_field);
  }
  SUBCASE("crossing voxels average the 2nd-order tensors") {
    FiberSpec a, b;
    a.start = {0.0, 10.0};
    a.end = {20.0, 10.0};
    b.start = {10.0, 0.0};
    b.end = {10.0, 20.0};
    const std::vector<FiberSpec> specs{a, b};
    const auto grid = GridGeometry::make(2, {21, 21, 1});
    const auto ph = rasterize(specs, grid);
    const auto idx = grid.index({10, 10, 0});
    CHECK(ph.tangents[idx].size() == 2);
    const auto e = eig_sym(ph.dt_field.at(idx));
    CHECK(e.values[0] == doctest::Approx(e.values[1]));
    CHECK(ph.masks[0][idx] == 1);
    CHECK(ph.masks[1][idx] == 1);
  }
  SUBCASE("errors") {
    const auto grid = GridGeometry::make(2, {5, 5, 1});
    CHECK_THROWS_AS(rasterize(std::span<const FiberSpec>(), grid), std::invalid_argument);
    FiberSpec far;
    far.start = {100.0, 100.0};
    far.end = {120.0, 100.0};
    CHECK_THROWS_AS(rasterize(std::span<const FiberSpec>(&far, 1), grid), std::invalid_argument);
  }
}

TEST_CASE("signal synthesis") {
  const double e255 = 0.07808166600115317;  // exp(-2.55)
  const auto fiber = SpdTensor::diagonal({1.7e-3, 0.2e-3, 0.2e-3});
  CHECK(signal_from_tensor(fiber, Vec{{1.0, 0.0, 0.0}}, 1500.0, 1.0) == doctest::Approx(e255).epsilon(1e-14));

  const auto iso = SpdTensor::diagonal({0.7e-3, 0.7e-3, 0.7e-3});
  const auto scheme = gradient_scheme(30, 1500.0, 1.0);
  for (const auto& g : scheme.gradients) {
    CHECK(signal_from_tensor(iso, g, 1500.0, 1.0) == doctest::Approx(std::exp(-1.05)).epsilon(1e-13));
  }
  double prev = 1.0;
  for (double b : {500.0, 1000.0, 1500.0, 3000.0}) {
    const double s = signal_from_tensor(fiber, scheme.gradients[7], b, 1.0);
    CHECK(s < prev);
    prev = s;
  }

  FiberSpec line;
  line.start = {0.0, 2.0};
  line.end = {6.0, 2.0};
  const auto grid = GridGeometry::make(2, {7, 5, 1});
  const auto ph = rasterize(std::span<const FiberSpec>(&line, 1), grid);
  const auto planar = gradient_scheme(16, 1500.0, 1.0, 2);
  const auto s2 = simulate_signal(ph, planar, 2);
  const auto s4 = simulate_signal(ph, planar, 4);
  CHECK(s2.values.size() == grid.voxel_count() * 16);
  // Along the fiber axis both models give exp(-b·λ1).
  const auto v2 = s2.voxel(grid.index({3, 2, 0}));
  const auto v4 = s4.voxel(grid.index({3, 2, 0}));
  CHECK(v2[0] == doctest::Approx(e255).epsilon(1e-13));
  CHECK(v4[0] == doctest::Approx(e255).epsilon(1e-13));
  CHECK_THROWS_AS(simulate_signal(ph, planar, 3), std::invalid_argument);
  CHECK_THROWS_AS(simulate_signal(ph, scheme, 2), std::invalid_argument);
}

TEST_CASE("rician noise") {
  const auto grid = GridGeometry::make(2, {100, 100, 1});
  SignalVolume zero{grid, 10, std::vector<double>(grid.voxel_count() * 10, 0.0)};
  const auto noisy = add_rician(zero, 0.25, 42);
  double mean = 0.0;
  for (double v : noisy.values) {
    CHECK(v >= 0.0);
    mean += v;
  }
  mean /= static_cast<double>(noisy.values.size());
  CHECK(mean == doctest::Approx(0.31332853432887503).epsilon(0.02));

  const auto again = add_rician(zero, 0.25, 42);
  CHECK(again.values == noisy.values);
  CHECK(add_rician(zero, 0.25, 43).values != noisy.values);

  SignalVolume ones{grid, 10, std::vector<double>(grid.voxel_count() * 10, 0.5)};
  CHECK(add_rician(ones, 0.0, 7).values == ones.values);
  CHECK_THROWS_AS(add_rician(ones, -0.1, 7), std::invalid_argument);
}

TEST_CASE("dti fitting") {
  const auto scheme = gradient_scheme(81, 1500.0, 1.0);
  std::mt19937_64 rng(73);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_spd(rng, 3, 0.1e-3, 2.5e-3);
    std::vector<double> s;
    for (const auto& g : scheme.gradients) s.push_back(signal_from_tensor(d, g, scheme.b, scheme.S0));
    const auto fit = fit_dti(s, scheme);
    worst = std::max(worst, (fit.matrix() - d.matrix()).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);

  const std::vector<double> iso(81, std::exp(-1.5));
  const auto fi = fit_dti(iso, scheme);
  CHECK(rel_frobenius(fi.matrix(), Mat(1e-3 * Mat::Identity(3, 3))) < 1e-10);

  std::vector<double> scaled(81);
  for (std::size_t i = 0; i < 81; ++i) scaled[i] = 4.0 * iso[i];
  AcquisitionScheme s4 = scheme;
  s4.S0 = 4.0;
  CHECK(rel_frobenius(fit_dti(scaled, s4).matrix(), fi.matrix()) < 1e-12);

  // Heavy noise can push eigenvalues negative; the fit clamps them.
  std::vector<double> wild(81);
  for (std::size_t i = 0; i < 81; ++i) wild[i] = (i % 2) ? 1.4 : 0.05;
  CHECK(eig_sym(fit_dti(wild, scheme)).values[2] > 0.0);

  AcquisitionScheme few;
  few.gradients = {Vec{{1.0, 0.0, 0.0}}, Vec{{0.0, 1.0, 0.0}}, Vec{{0.0, 0.0, 1.0}}};
  CHECK_THROWS_AS(DtiFitter{few}, std::invalid_argument);
}

TEST_CASE("phantom round trip: rasterize, simulate, fit") {
  FiberSpec arc;
  arc.shape = FiberShape::Arc;
  arc.center = {8.0, 0.0};
  arc.radius = 6.0;
  arc.angle0_deg = 10.0;
  arc.angle1_deg = 170.0;
  const auto grid = GridGeometry::make(3, {17, 9, 3}, {1.0, 1.0, 1.0}, {0.0, 0.0, -1.0});
  const auto ph = rasterize(std::span<const FiberSpec>(&arc, 1), grid);
  const auto scheme = gradient_scheme(81, 1500.0, 1.0);
  const auto fitted = fit_dti_field(simulate_signal(ph, scheme, 2), scheme);
  int on_fiber = 0;
  for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
    if (!ph.masks[0][i]) continue;
    ++on_fiber;
    CHECK(axis_angle_deg(principal_direction(fitted.at(i)), principal_direction(ph.dt_field.at(i))) < 1.0);
    const auto a = eig_sym(fitted.at(i)).values;
    const auto b = eig_sym(ph.dt_field.at(i)).values;
    for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-6 * b[k]);
  }
  CHECK(on_fiber > 20);

  const auto f4 = fit_tensor4_field(simulate_signal(ph, scheme, 4), scheme);
  for (std::size_t i = 0; i < grid.voxel_count(); i += 7) {
    for (int k = 0; k < 15; ++k) CHECK(std::abs(f4.at(i).coeffs()[k] - ph.t4_field->at(i).coeffs()[k]) < 1e-9);
  }
}

// A sum of two positive quartic lobes only shows two maxima once the fibers
// are more than about 62° apart with this profile; below that the ODF peak
// merges onto the bisector.
TEST_CASE("crossing voxels: DTI degenerates, the 4th-order fit separates") {
  for (double theta : {40.0, 70.0, 90.0}) {
    FiberSpec a, b;
    const double half = theta / 2.0;
    const Vec da = unit_at(45.0 - half), db = unit_at(45.0 + half);
    a.start = {10.0 - 10.0 * da[0], 10.0 - 10.0 * da[1]};
    a.end = {10.0 + 10.0 * da[0], 10.0 + 10.0 * da[1]};
    b.start = {10.0 - 10.0 * db[0], 10.0 - 10.0 * db[1]};
    b.end = {10.0 + 10.0 * db[0], 10.0 + 10.0 * db[1]};
    const std::vector<FiberSpec> specs{a, b};
    const auto grid = GridGeometry::make(2, {21, 21, 1});
    const auto ph = rasterize(specs, grid);
    const auto scheme = gradient_scheme(81, 1500.0, 1.0, 2);
    const auto idx = grid.index({10, 10, 0});

    const auto t4 = Tensor4Fitter(scheme).fit(simulate_signal(ph, scheme, 4).voxel(idx));
    const auto peaks = odf_maxima(t4);
    if (theta < 60.0) {
      REQUIRE(peaks.size() == 1);
      CHECK(axis_angle_deg(peaks[0], unit_at(45.0)) <= 1.0);
      continue;
    }
    REQUIRE(peaks.size() >= 2);
    const double err_a = std::min(axis_angle_deg(peaks[0], da), axis_angle_deg(peaks[1], da));
    const double err_b = std::min(axis_angle_deg(peaks[0], db), axis_angle_deg(peaks[1], db));
    CHECK(err_a < 10.0);
    CHECK(err_b < 10.0);

    if (theta == 90.0) {
      const auto dti = DtiFitter(scheme).fit(simulate_signal(ph, scheme, 2).voxel(idx));
      const auto e = eig_sym(dti).values;
      CHECK(e[0] == doctest::Approx(e[1]).epsilon(1e-9));
    }
  }
}
