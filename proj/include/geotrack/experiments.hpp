#pragma once

// Ready-made phantom setups and the measurements behind the batch commands:
// Riemannian cost along an interpolation path and crossing-angle recovery.

#include "geotrack/geodesic.hpp"
#include "geotrack/phantom.hpp"
#include "geotrack/tensor_field.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace geotrack {

// A phantom together with the seeds and target region used to score it.
struct Setup {
  GridGeometry grid;
  std::vector<FiberSpec> fibers;
  std::vector<ConeSeed> seeds;
  Box target;
};

// Presets: line, ushape, sshape, sine, arc, cross (two straight fibers at
// 45° ∓ angle/2 through the grid center).
Setup preset(const std::string& name, double angle_deg = 60.0);
const std::vector<std::string>& preset_names();

// s = 0 gives a, s = 1 gives b, for every method.
SpdTensor blend(const SpdTensor& a, const SpdTensor& b, double s, InterpolationMethod method);

// v̂ᵀ g v̂ with g = metric_from_tensor(d, scheme).
double directional_cost(const SpdTensor& d, const MetricScheme& scheme, const Vec& direction);

std::string scheme_label(const MetricScheme& s);

struct CostProfile {
  std::vector<double> t;
  std::vector<double> ha;
  std::vector<double> fa;
  std::vector<std::string> labels;          // one per scheme
  std::vector<std::vector<double>> cost;    // [scheme][sample]
};

// start → middle over t ∈ [0, ½], middle → end over [½, 1]; the cost is
// taken along the principal direction of the interpolated tensor.
CostProfile cost_profile(const SpdTensor& start, const SpdTensor& middle, const SpdTensor& end,
                         InterpolationMethod method, int samples, std::span<const MetricScheme> schemes);

// Samples interpolate(field, ·) on the straight segment from → to.
CostProfile cost_profile(const TensorField& field, const Vec& from, const Vec& to, InterpolationMethod method,
                         int samples, std::span<const MetricScheme> schemes);

// Cost of crossing an isotropic gap λ·I in direction `direction`, per scheme.
std::vector<double> gap_costs(double lambda, const Vec& direction, std::span<const MetricScheme> schemes);

struct CrossingOptions {
  int grid = 25;
  double thickness = 3.0;
  int gradients = 81;
  double b = 1500.0;
  double noise = 0.0;
  std::uint64_t seed = 42;
};

struct SweepRow {
  double theta_deg = 0.0;
  double err_layer1_deg = 0.0;  // T_xx principal axis vs fiber 1
  double err_layer2_deg = 0.0;  // T_yy principal axis vs fiber 2
  std::size_t crossing_voxels = 0;
};

// Builds the crossing preset, synthesizes (and optionally corrupts) 4th-order
// signals, refits them and averages the diagonal-component errors over the
// voxels both fibers pass through.
SweepRow crossing_error(double theta_deg, const CrossingOptions& options);

// Mean angle (degrees) between track directions and the nearest voxel's
// ground-truth tangents, over vertices that land on a fiber voxel. NaN when
// no vertex does.
double mean_angular_deviation(std::span<const GeodesicTrack> tracks, const GridGeometry& grid,
                              const std::vector<std::vector<Vec>>& tangents);

double axis_angle_deg(const Vec& a, const Vec& b);

}  // namespace geotrack
