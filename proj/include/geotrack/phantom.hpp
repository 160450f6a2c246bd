#pragma once

// Synthetic ground truth: fiber curves rasterized into tensor fields, DWI
// signal synthesis, Rician noise and log-linear tensor re-fitting.

#include "geotrack/acquisition.hpp"
#include "geotrack/grid.hpp"
#include "geotrack/spd.hpp"
#include "geotrack/tensor4.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geotrack {

// n deterministic directions: a Fibonacci spiral over the upper hemisphere in
// 3D (evenly spaced half-circle angles in 2D), so no two are near-antipodal.
AcquisitionScheme gradient_scheme(int n, double b, double S0, int dim = 3);

enum class FiberShape { Line, UShape, SShape, Sine, Arc };

std::string to_string(FiberShape s);
FiberShape parse_fiber_shape(const std::string& s);

// Planar fiber curve. Coordinates are physical (x, y); 3D grids place the
// curve in the plane z = plane_z.
//   Line   start → end
//   Arc    center, radius, angle0_deg → angle1_deg (counter-clockwise if angle1 > angle0)
//   UShape inverted U: left leg up, half circle of `radius` around `center`, right leg down; legs of leg_length
//   SShape two opposed half circles of `radius` meeting at `center`
//   Sine   one period from start to end with peak offset `amplitude`
struct FiberSpec {
  FiberShape shape = FiberShape::Line;
  std::array<double, 2> start{0.0, 0.0};
  std::array<double, 2> end{1.0, 0.0};
  std::array<double, 2> center{0.0, 0.0};
  double radius = 1.0;
  double angle0_deg = 0.0;
  double angle1_deg = 180.0;
  double leg_length = 0.0;
  double amplitude = 0.0;
  double plane_z = 0.0;
  double thickness = 3.0;  // diameter, voxels
  std::array<double, 3> eigenvalues{1.7e-3, 0.2e-3, 0.2e-3};

  void validate() const;
};

struct CurveSample {
  std::array<double, 2> pos;
  std::array<double, 2> tangent;
};

// Dense arc-length sampling (about `per_unit` samples per unit length).
std::vector<CurveSample> sample_curve(const FiberSpec& spec, double per_unit = 20.0);

struct Phantom {
  TensorField dt_field;
  std::optional<Tensor4Field> t4_field;
  std::vector<std::vector<Vec>> tangents;      // per voxel, one per fiber through it
  std::vector<std::vector<std::uint8_t>> masks;  // per fiber, per voxel
};

constexpr double kDefaultBackgroundDiffusivity = 0.7e-3;

// Background voxels get λ_bg·I; fiber voxels a prolate tensor along the local
// tangent; voxels on several fibers the Euclidean mean of their tensors. The
// 4th-order field averages (gᵀD_f g)²/λ₁ per fiber instead, keeping the
// populations separate.
Phantom rasterize(std::span<const FiberSpec> specs, const GridGeometry& grid,
                  double background = kDefaultBackgroundDiffusivity, bool with_tensor4 = true);

// Voxel-major, gradient-minor signal volume.
struct SignalVolume {
  GridGeometry geometry;
  std::size_t gradients = 0;
  std::vector<double> values;

  std::span<const double> voxel(std::size_t i) const { return {values.data() + i * gradients, gradients}; }
};

double signal_from_tensor(const SpdTensor& d, const Vec& g, double b, double S0);

SignalVolume simulate_signal(const Phantom& phantom, const AcquisitionScheme& scheme, int order);
SignalVolume simulate_signal(const TensorField& field, const AcquisitionScheme& scheme);
SignalVolume simulate_signal(const Tensor4Field& field, const AcquisitionScheme& scheme);

// sqrt((S + n1)² + n2²) with n1, n2 ~ N(0, σ²). Each voxel draws from its own
// stream keyed by (rng_seed, voxel index).
SignalVolume add_rician(const SignalVolume& signals, double sigma, std::uint64_t rng_seed);

class DtiFitter {
 public:
  explicit DtiFitter(const AcquisitionScheme& scheme);
  // Signals are clamped to 1e-6·S0 before the log; eigenvalues to 1e-12.
  SpdTensor fit(std::span<const double> signals) const;

 private:
  int dim_;
  double b_;
  double s0_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

SpdTensor fit_dti(std::span<const double> signals, const AcquisitionScheme& scheme);
TensorField fit_dti_field(const SignalVolume& signals, const AcquisitionScheme& scheme);
Tensor4Field fit_tensor4_field(const SignalVolume& signals, const AcquisitionScheme& scheme);

}  // namespace geotrack
