#include "geotrack/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace geotrack {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec planar(double x, double y) { return Vec{{x, y}}; }

Box box_around(const Vec& c, double half) {
  return Box{Vec(c.array() - half), Vec(c.array() + half)};
}

// One seed just inside the start of the first fiber, aimed along it, and a
// target around its far end.
Setup along_first_fiber(GridGeometry grid, std::vector<FiberSpec> fibers) {
  const auto samples = sample_curve(fibers.front());
  const auto advance = std::min<std::size_t>(samples.size() - 1, 20);
  const auto& s = samples[advance];
  const auto& e = samples[samples.size() - 1 - advance];
  Setup out{std::move(grid), std::move(fibers), {}, {}};
  out.seeds.push_back({planar(s.pos[0], s.pos[1]), planar(s.tangent[0], s.tangent[1]), 1.0, 0.3, 5});
  out.target = box_around(planar(e.pos[0], e.pos[1]), 1.5);
  return out;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"line", "ushape", "sshape", "sine", "arc", "cross"};
  return names;
}

Setup preset(const std::string& name, double angle_deg) {
  if (name == "line") {
    FiberSpec f;
    f.start = {0.0, 5.0};
    f.end = {29.0, 5.0};
    return along_first_fiber(GridGeometry::make(2, {30, 11, 1}), {f});
  }
  if (name == "ushape") {
    FiberSpec f;
    f.shape = FiberShape::UShape;
    f.center = {20.0, 22.0};
    f.radius = 10.0;
    f.leg_length = 16.0;
    f.thickness = 4.0;
    Setup s{GridGeometry::make(2, {40, 40, 1}), {f}, {}, Box{planar(27.0, 5.0), planar(33.0, 9.0)}};
    for (double x : {9.25, 9.75, 10.25, 10.75}) s.seeds.push_back({planar(x, 7.0), planar(0.0, 1.0), 1.0, 0.5, 5});
    return s;
  }
  if (name == "sshape") {
    FiberSpec f;
    f.shape = FiberShape::SShape;
    f.center = {20.0, 22.0};
    f.radius = 8.0;
    f.thickness = 4.0;
    Setup s{GridGeometry::make(2, {40, 44, 1}), {f}, {}, Box{planar(15.0, 37.0), planar(19.0, 43.0)}};
    for (double dy : {-0.5, -0.165, 0.165, 0.5}) s.seeds.push_back({planar(19.0, 6.0 + dy), planar(1.0, 0.0), 1.0, 0.5, 5});
    return s;
  }
  if (name == "sine") {
    FiberSpec f;
    f.shape = FiberShape::Sine;
    f.start = {1.0, 10.0};
    f.end = {38.0, 10.0};
    f.amplitude = 4.0;
    return along_first_fiber(GridGeometry::make(2, {40, 21, 1}), {f});
  }
  if (name == "arc") {
    FiberSpec f;
    f.shape = FiberShape::Arc;
    f.center = {15.0, 2.0};
    f.radius = 12.0;
    f.angle0_deg = 5.0;
    f.angle1_deg = 175.0;
    return along_first_fiber(GridGeometry::make(2, {31, 17, 1}), {f});
  }
  if (name == "cross") {
    if (!(angle_deg > 0.0 && angle_deg < 180.0)) throw std::invalid_argument("crossing angle must lie in (0, 180)");
    const double c = 12.0;
    const double a1 = (45.0 - angle_deg / 2.0) * kDeg;
    const double a2 = (45.0 + angle_deg / 2.0) * kDeg;
    const Vec d1 = planar(std::cos(a1), std::sin(a1));
    const Vec d2 = planar(std::cos(a2), std::sin(a2));
    FiberSpec f1, f2;
    f1.start = {c - 14.0 * d1[0], c - 14.0 * d1[1]};
    f1.end = {c + 14.0 * d1[0], c + 14.0 * d1[1]};
    f2.start = {c - 14.0 * d2[0], c - 14.0 * d2[1]};
    f2.end = {c + 14.0 * d2[0], c + 14.0 * d2[1]};
    Setup s{GridGeometry::make(2, {25, 25, 1}), {f1, f2}, {}, box_around(planar(c, c) + 9.0 * d1, 1.5)};
    s.seeds.push_back({Vec(planar(c, c) - 9.0 * d1), d1, 1.0, 0.2, 5});
    return s;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

SpdTensor blend(const SpdTensor& a, const SpdTensor& b, double s, InterpolationMethod method) {
  switch (method) {
    case InterpolationMethod::Euclidean: return SpdTensor(Mat((1.0 - s) * a.matrix() + s * b.matrix()));
    case InterpolationMethod::LogEuclidean: return loge_geodesic(a, b, 1.0 - s);
    case InterpolationMethod::SpectralQuaternion: return sq_geodesic(a, b, s);
  }
  throw std::invalid_argument("unknown interpolation method");
}

double directional_cost(const SpdTensor& d, const MetricScheme& scheme, const Vec& direction) {
  const Vec v = direction.normalized();
  return v.dot(metric_from_tensor(d, scheme).matrix() * v);
}

std::string scheme_label(const MetricScheme& s) {
  if (s.variant != MetricScheme::Variant::BetaScaled) return to_string(s.variant);
  std::string label = "beta_p" + std::to_string(s.p) + "_n" + std::to_string(s.n);
  if (s.activation != Activation::S1) label += "_" + to_string(s.activation);
  if (s.anisotropy != Anisotropy::HA) label += "_" + to_string(s.anisotropy);
  return label;
}

namespace {

CostProfile profile_from(const std::vector<SpdTensor>& path, std::span<const MetricScheme> schemes) {
  CostProfile p;
  for (const auto& s : schemes) p.labels.push_back(scheme_label(s));
  p.cost.assign(schemes.size(), {});
  const std::size_t n = path.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = path[i];
    p.t.push_back(n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1));
    p.ha.push_back(anisotropy_scalar(d, Anisotropy::HA));
    p.fa.push_back(anisotropy_scalar(d, Anisotropy::FA));
    const Vec dir = principal_direction(d);
    for (std::size_t k = 0; k < schemes.size(); ++k) p.cost[k].push_back(directional_cost(d, schemes[k], dir));
  }
  return p;
}

void check_samples(int samples) {
  if (samples < 3) throw std::invalid_argument("cost profile needs at least 3 samples");
}

}  // namespace

CostProfile cost_profile(const SpdTensor& start, const SpdTensor& middle, const SpdTensor& end,
                         InterpolationMethod method, int samples, std::span<const MetricScheme> schemes) {
  check_samples(samples);
  if (start.dim() != middle.dim() || middle.dim() != end.dim()) throw std::invalid_argument("endpoint dimension mismatch");
  std::vector<SpdTensor> path;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    path.push_back(t <= 0.5 ? blend(start, middle, 2.0 * t, method) : blend(middle, end, 2.0 * t - 1.0, method));
  }
  return profile_from(path, schemes);
}

CostProfile cost_profile(const TensorField& field, const Vec& from, const Vec& to, InterpolationMethod method,
                         int samples, std::span<const MetricScheme> schemes) {
  check_samples(samples);
  std::vector<SpdTensor> path;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    path.push_back(interpolate(field, Vec((1.0 - t) * from + t * to), method));
  }
  return profile_from(path, schemes);
}

std::vector<double> gap_costs(double lambda, const Vec& direction, std::span<const MetricScheme> schemes) {
  const int d = static_cast<int>(direction.size());
  const SpdTensor gap(Mat(lambda * Mat::Identity(d, d)));
  std::vector<double> out;
  for (const auto& s : schemes) out.push_back(directional_cost(gap, s, direction));
  return out;
}

double axis_angle_deg(const Vec& a, const Vec& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(c, 1.0)) / kDeg;
}

SweepRow crossing_error(double theta_deg, const CrossingOptions& options) {
  if (options.grid < 5) throw std::invalid_argument("crossing grid must be at least 5 voxels wide");
  Setup s = preset("cross", theta_deg);
  // Re-center the preset on the requested grid size.
  const double shift = (options.grid - 1) / 2.0 - 12.0;
  s.grid = GridGeometry::make(2, {options.grid, options.grid, 1});
  for (auto& f : s.fibers) {
    f.thickness = options.thickness;
    for (auto* p : {&f.start, &f.end}) {
      (*p)[0] += shift;
      (*p)[1] += shift;
    }
  }
  const auto ph = rasterize(s.fibers, s.grid);
  const auto scheme = gradient_scheme(options.gradients, options.b, 1.0, 2);
  auto signals = simulate_signal(ph, scheme, 4);
  if (options.noise > 0.0) signals = add_rician(signals, options.noise, options.seed);
  const Tensor4Fitter fitter(scheme);

  const double a1 = (45.0 - theta_deg / 2.0) * kDeg;
  const double a2 = (45.0 + theta_deg / 2.0) * kDeg;
  const Vec d1 = planar(std::cos(a1), std::sin(a1));
  const Vec d2 = planar(std::cos(a2), std::sin(a2));

  SweepRow row;
  row.theta_deg = theta_deg;
  for (std::size_t i = 0; i < s.grid.voxel_count(); ++i) {
    if (!ph.masks[0][i] || !ph.masks[1][i]) continue;
    const auto blocks = diagonal_components(fitter.fit(signals.voxel(i)));
    row.err_layer1_deg += axis_angle_deg(principal_direction(blocks[0]), d1);
    row.err_layer2_deg += axis_angle_deg(principal_direction(blocks[1]), d2);
    ++row.crossing_voxels;
  }
  if (row.crossing_voxels == 0) throw std::runtime_error("crossing phantom has no shared voxels");
  row.err_layer1_deg /= static_cast<double>(row.crossing_voxels);
  row.err_layer2_deg /= static_cast<double>(row.crossing_voxels);
  return row;
}

double mean_angular_deviation(std::span<const GeodesicTrack> tracks, const GridGeometry& grid,
                              const std::vector<std::vector<Vec>>& tangents) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : tracks) {
    for (std::size_t v = 0; v < t.vertices.size(); ++v) {
      const Vec& x = t.vertices[v];
      if (!grid.contains(x)) continue;
      Index3 ijk{0, 0, 0};
      for (int a = 0; a < grid.dim; ++a) {
        const long r = std::lround((x[a] - grid.origin[a]) / grid.spacing[a]);
        ijk[a] = static_cast<int>(std::clamp<long>(r, 0, grid.dims[a] - 1));
      }
      const auto& list = tangents.at(grid.index(ijk));
      if (list.empty()) continue;
      double best = 90.0;
      for (const auto& tan : list) best = std::min(best, axis_angle_deg(t.directions[v], tan));
      sum += best;
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

}  // namespace geotrack
