#include "geotrack/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace geotrack {

AcquisitionScheme gradient_scheme(int n, double b, double S0, int dim) {
  if (n < 6) throw std::invalid_argument("gradient scheme needs at least 6 directions");
  AcquisitionScheme s;
  s.b = b;
  s.S0 = S0;
  s.gradients.reserve(n);
  if (dim == 2) {
    for (int k = 0; k < n; ++k) {
      const double a = std::numbers::pi * k / n;
      s.gradients.push_back(Vec{{std::cos(a), std::sin(a)}});
    }
  } else if (dim == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - (k + 0.5) / n;
      const double r = std::sqrt(1.0 - z * z);
      const double phi = golden * k;
      s.gradients.push_back(Vec(Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z).normalized()));
    }
  } else {
    throw std::invalid_argument("gradient scheme dimension must be 2 or 3");
  }
  s.validate();
  return s;
}

std::string to_string(FiberShape s) {
  switch (s) {
    case FiberShape::Line: return "line";
    case FiberShape::UShape: return "ushape";
    case FiberShape::SShape: return "sshape";
    case FiberShape::Sine: return "sine";
    case FiberShape::Arc: return "arc";
  }
  return "?";
}

FiberShape parse_fiber_shape(const std::string& s) {
  if (s == "line") return FiberShape::Line;
  if (s == "ushape") return FiberShape::UShape;
  if (s == "sshape") return FiberShape::SShape;
  if (s == "sine") return FiberShape::Sine;
  if (s == "arc") return FiberShape::Arc;
  throw std::invalid_argument("unknown fiber shape '" + s + "'");
}

void FiberSpec::validate() const {
  const auto& l = eigenvalues;
  if (!(l[0] >= l[1] && l[1] >= l[2] && l[2] > 0.0)) {
    throw std::invalid_argument("fiber eigenvalues must satisfy l1 >= l2 >= l3 > 0");
  }
  if (!(thickness >= 1.0)) throw std::invalid_argument("fiber thickness must be >= 1 voxel");
  const double seg = std::hypot(end[0] - start[0], end[1] - start[1]);
  switch (shape) {
    case FiberShape::Line:
    case FiberShape::Sine:
      if (!(seg > 0.0)) throw std::invalid_argument("degenerate fiber: zero-length segment");
      break;
    case FiberShape::Arc:
      if (!(radius > 0.0) || angle0_deg == angle1_deg) throw std::invalid_argument("degenerate fiber: empty arc");
      break;
    case FiberShape::UShape:
      if (!(radius > 0.0) || leg_length < 0.0) throw std::invalid_argument("degenerate fiber: bad U-shape geometry");
      break;
    case FiberShape::SShape:
      if (!(radius > 0.0)) throw std::invalid_argument("degenerate fiber: zero S-shape radius");
      break;
  }
}

namespace {

using P2 = std::array<double, 2>;

void append_line(std::vector<CurveSample>& out, P2 a, P2 b, double per_unit) {
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  const int n = std::max(2, static_cast<int>(std::ceil(len * per_unit)) + 1);
  const P2 t{(b[0] - a[0]) / len, (b[1] - a[1]) / len};
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    out.push_back({{a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])}, t});
  }
}

// Angles in radians; runs from a0 to a1 in either direction.
void append_arc(std::vector<CurveSample>& out, P2 c, double r, double a0, double a1, double per_unit) {
  const double len = r * std::abs(a1 - a0);
  const int n = std::max(2, static_cast<int>(std::ceil(len * per_unit)) + 1);
  const double dir = a1 > a0 ? 1.0 : -1.0;
  for (int i = 0; i < n; ++i) {
    const double a = a0 + (a1 - a0) * i / (n - 1);
    out.push_back({{c[0] + r * std::cos(a), c[1] + r * std::sin(a)}, {-dir * std::sin(a), dir * std::cos(a)}});
  }
}

}  // namespace

std::vector<CurveSample> sample_curve(const FiberSpec& spec, double per_unit) {
  spec.validate();
  constexpr double pi = std::numbers::pi;
  const double deg = pi / 180.0;
  std::vector<CurveSample> out;
  const auto& c = spec.center;
  const double r = spec.radius;
  switch (spec.shape) {
    case FiberShape::Line:
      append_line(out, spec.start, spec.end, per_unit);
      break;
    case FiberShape::Arc:
      append_arc(out, c, r, spec.angle0_deg * deg, spec.angle1_deg * deg, per_unit);
      break;
    case FiberShape::UShape:
      if (spec.leg_length > 0.0) append_line(out, {c[0] - r, c[1] - spec.leg_length}, {c[0] - r, c[1]}, per_unit);
      append_arc(out, c, r, pi, 0.0, per_unit);
      if (spec.leg_length > 0.0) append_line(out, {c[0] + r, c[1]}, {c[0] + r, c[1] - spec.leg_length}, per_unit);
      break;
    case FiberShape::SShape:
      append_arc(out, {c[0], c[1] - r}, r, -0.5 * pi, 0.5 * pi, per_unit);
      append_arc(out, {c[0], c[1] + r}, r, 1.5 * pi, 0.5 * pi, per_unit);
      break;
    case FiberShape::Sine: {
      const P2 a = spec.start;
      const P2 b = spec.end;
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      const P2 u{(b[0] - a[0]) / len, (b[1] - a[1]) / len};
      const P2 nrm{-u[1], u[0]};
      const double k = 2.0 * pi / len;
      const int n = std::max(2, static_cast<int>(std::ceil(len * per_unit * std::sqrt(1.0 + std::pow(spec.amplitude * k, 2)))) + 1);
      for (int i = 0; i < n; ++i) {
        const double s = len * i / (n - 1);
        const double off = spec.amplitude * std::sin(k * s);
        const double slope = spec.amplitude * k * std::cos(k * s);
        const double tn = std::hypot(1.0, slope);
        out.push_back({{a[0] + s * u[0] + off * nrm[0], a[1] + s * u[1] + off * nrm[1]},
                       {(u[0] + slope * nrm[0]) / tn, (u[1] + slope * nrm[1]) / tn}});
      }
      break;
    }
  }
  return out;
}

namespace {

SpdTensor fiber_tensor(const FiberSpec& spec, const P2& tangent, int dim) {
  const auto& l = spec.eigenvalues;
  Vec t = Vec::Zero(dim);
  Vec n = Vec::Zero(dim);
  t[0] = tangent[0];
  t[1] = tangent[1];
  n[0] = -tangent[1];
  n[1] = tangent[0];
  Mat m = l[0] * t * t.transpose() + l[1] * n * n.transpose();
  if (dim == 3) m(2, 2) += l[2];
  return SpdTensor(m);
}

}  // namespace

Phantom rasterize(std::span<const FiberSpec> specs, const GridGeometry& grid, double background, bool with_tensor4) {
  grid.validate();
  if (specs.empty()) throw std::invalid_argument("phantom needs at least one fiber");
  if (!(background > 0.0)) throw std::invalid_argument("background diffusivity must be positive");
  std::vector<std::vector<CurveSample>> curves;
  for (const auto& s : specs) curves.push_back(sample_curve(s));

  const int dim = grid.dim;
  const std::size_t n = grid.voxel_count();
  const double unit = *std::min_element(grid.spacing.begin(), grid.spacing.begin() + dim);
  std::vector<SpdTensor> dt;
  std::vector<Tensor4> t4;
  dt.reserve(n);
  if (with_tensor4) t4.reserve(n);
  std::vector<std::vector<Vec>> tangents(n);
  std::vector<std::vector<std::uint8_t>> masks(specs.size(), std::vector<std::uint8_t>(n, 0));
  bool any_hit = false;

  for (std::size_t v = 0; v < n; ++v) {
    const Vec p = grid.voxel_position(grid.unravel(v));
    Mat acc = Mat::Zero(dim, dim);
    Tensor4 acc4 = Tensor4::zero(dim);
    int fibers = 0;
    for (std::size_t f = 0; f < specs.size(); ++f) {
      const double half = 0.5 * specs[f].thickness * unit;
      if (dim == 3 && std::abs(p[2] - specs[f].plane_z) > half) continue;
      double best = std::numeric_limits<double>::infinity();
      const CurveSample* nearest = nullptr;
      for (const auto& s : curves[f]) {
        const double d2 = std::pow(p[0] - s.pos[0], 2) + std::pow(p[1] - s.pos[1], 2);
        if (d2 < best) {
          best = d2;
          nearest = &s;
        }
      }
      if (std::sqrt(best) > half) continue;
      const SpdTensor d = fiber_tensor(specs[f], nearest->tangent, dim);
      acc += d.matrix();
      if (with_tensor4) acc4 = acc4 + Tensor4::squared_quadratic(d, 1.0 / specs[f].eigenvalues[0]);
      Vec t = Vec::Zero(dim);
      t[0] = nearest->tangent[0];
      t[1] = nearest->tangent[1];
      tangents[v].push_back(t);
      masks[f][v] = 1;
      ++fibers;
    }
    any_hit = any_hit || fibers > 0;
    if (fibers == 0) {
      dt.push_back(SpdTensor(Mat(background * Mat::Identity(dim, dim))));
      if (with_tensor4) t4.push_back(Tensor4::isotropic(dim, background));
    } else {
      dt.push_back(SpdTensor(Mat(acc / fibers)));
      if (with_tensor4) t4.push_back(acc4 * (1.0 / fibers));
    }
  }
  if (!any_hit) throw std::invalid_argument("no fiber intersects the grid");

  Phantom out{TensorField(grid, std::move(dt)), std::nullopt, std::move(tangents), std::move(masks)};
  if (with_tensor4) out.t4_field.emplace(grid, std::move(t4));
  return out;
}

double signal_from_tensor(const SpdTensor& d, const Vec& g, double b, double S0) {
  return S0 * std::exp(-b * g.dot(d.matrix() * g));
}

namespace {

void check_grid_scheme(const GridGeometry& grid, const AcquisitionScheme& scheme) {
  scheme.validate();
  if (scheme.dim() != grid.dim) throw std::invalid_argument("gradient dimension does not match field dimension");
}

}  // namespace

SignalVolume simulate_signal(const TensorField& field, const AcquisitionScheme& scheme) {
  check_grid_scheme(field.geometry(), scheme);
  SignalVolume out{field.geometry(), scheme.gradients.size(), {}};
  out.values.reserve(field.size() * out.gradients);
  for (const auto& d : field.data())
    for (const auto& g : scheme.gradients) out.values.push_back(signal_from_tensor(d, g, scheme.b, scheme.S0));
  return out;
}

SignalVolume simulate_signal(const Tensor4Field& field, const AcquisitionScheme& scheme) {
  check_grid_scheme(field.geometry(), scheme);
  SignalVolume out{field.geometry(), scheme.gradients.size(), {}};
  out.values.reserve(field.size() * out.gradients);
  for (const auto& t : field.data())
    for (const auto& g : scheme.gradients) out.values.push_back(scheme.S0 * std::exp(-scheme.b * d_of_g(t, g)));
  return out;
}

SignalVolume simulate_signal(const Phantom& phantom, const AcquisitionScheme& scheme, int order) {
  if (order == 2) return simulate_signal(phantom.dt_field, scheme);
  if (order == 4) {
    if (!phantom.t4_field) throw std::invalid_argument("phantom has no 4th-order field");
    return simulate_signal(*phantom.t4_field, scheme);
  }
  throw std::invalid_argument("signal order must be 2 or 4");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SignalVolume add_rician(const SignalVolume& signals, double sigma, std::uint64_t rng_seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  SignalVolume out = signals;
  if (sigma == 0.0) return out;
  const std::size_t voxels = signals.gradients == 0 ? 0 : signals.values.size() / signals.gradients;
  for (std::size_t v = 0; v < voxels; ++v) {
    std::mt19937_64 rng(splitmix64(rng_seed ^ splitmix64(v)));
    std::normal_distribution<double> normal(0.0, sigma);
    for (std::size_t k = 0; k < signals.gradients; ++k) {
      double& s = out.values[v * signals.gradients + k];
      const double re = s + normal(rng);
      const double im = normal(rng);
      s = std::hypot(re, im);
    }
  }
  return out;
}

DtiFitter::DtiFitter(const AcquisitionScheme& scheme) : dim_(scheme.dim()), b_(scheme.b), s0_(scheme.S0) {
  scheme.validate();
  const int cols = SpdTensor::unique_count(dim_);
  const auto rows = static_cast<Eigen::Index>(scheme.gradients.size());
  if (rows < cols) throw std::invalid_argument("tensor fit needs at least " + std::to_string(cols) + " gradients");
  Eigen::MatrixXd design(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec& g = scheme.gradients[r];
    int c = 0;
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) design(r, c++) = (i == j ? 1.0 : 2.0) * g[i] * g[j];
  }
  qr_.compute(design);
  if (qr_.rank() < cols) throw std::invalid_argument("tensor design matrix is rank deficient");
}

SpdTensor DtiFitter::fit(std::span<const double> signals) const {
  if (static_cast<Eigen::Index>(signals.size()) != qr_.rows()) {
    throw std::invalid_argument("signal count does not match gradient count");
  }
  Eigen::VectorXd y(qr_.rows());
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    const double s = std::max(signals[r], 1e-6 * s0_);
    y[r] = (std::log(s0_) - std::log(s)) / b_;
  }
  const Eigen::VectorXd x = qr_.solve(y);
  Mat m(dim_, dim_);
  int c = 0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) m(i, j) = m(j, i) = x[c++];
  const auto e = eig_sym(m);
  const Vec clamped = e.values.cwiseMax(1e-12);
  return SpdTensor(Mat(e.vectors * clamped.asDiagonal() * e.vectors.transpose()));
}

SpdTensor fit_dti(std::span<const double> signals, const AcquisitionScheme& scheme) {
  return DtiFitter(scheme).fit(signals);
}

TensorField fit_dti_field(const SignalVolume& signals, const AcquisitionScheme& scheme) {
  check_grid_scheme(signals.geometry, scheme);
  if (signals.gradients != scheme.gradients.size()) throw std::invalid_argument("signal volume / scheme mismatch");
  const DtiFitter fitter(scheme);
  std::vector<SpdTensor> out;
  out.reserve(signals.geometry.voxel_count());
  for (std::size_t v = 0; v < signals.geometry.voxel_count(); ++v) out.push_back(fitter.fit(signals.voxel(v)));
  return TensorField(signals.geometry, std::move(out));
}

Tensor4Field fit_tensor4_field(const SignalVolume& signals, const AcquisitionScheme& scheme) {
  check_grid_scheme(signals.geometry, scheme);
  if (signals.gradients != scheme.gradients.size()) throw std::invalid_argument("signal volume / scheme mismatch");
  const Tensor4Fitter fitter(scheme);
  std::vector<Tensor4> out;
  out.reserve(signals.geometry.voxel_count());
  for (std::size_t v = 0; v < signals.geometry.voxel_count(); ++v) out.push_back(fitter.fit(signals.voxel(v)));
  return Tensor4Field(signals.geometry, std::move(out));
}

}  // namespace geotrack
