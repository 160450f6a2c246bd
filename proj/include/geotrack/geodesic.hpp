#pragma once

// Geodesic ray-tracing through a metric field: Christoffel symbols, the
// geodesic ODE and its RK4 integration, cone seeding, and point-to-region
// shooting.

#include "geotrack/grid.hpp"
#include "geotrack/spd.hpp"
#include "geotrack/tensor_field.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geotrack {

// Γ^up_{a b}, stored densely as gamma[(up·3 + a)·3 + b].
struct ChristoffelSymbols {
  int dim = 3;
  std::array<double, 27> gamma{};

  double operator()(int up, int a, int b) const { return gamma[(up * 3 + a) * 3 + b]; }
  double& operator()(int up, int a, int b) { return gamma[(up * 3 + a) * 3 + b]; }
};

// dg[a] = ∂g/∂x^a, one symmetric matrix per axis.
ChristoffelSymbols christoffel(const SpdTensor& g, std::span<const Mat> dg);

// A medium that geodesics move through. Implementations are immutable and
// safe to query from several threads.
class MetricModel {
 public:
  virtual ~MetricModel() = default;
  virtual int dim() const = 0;
  virtual bool contains(const Vec& x) const = 0;
  // Throws OutOfBounds when x (or its difference stencil) leaves the domain.
  virtual ChristoffelSymbols christoffel_at(const Vec& x) const = 0;
  // The diffusion tensor steering hybrid tracking, if the model has one.
  virtual std::optional<SpdTensor> diffusion_at(const Vec& /*x*/) const { return std::nullopt; }
};

class FieldMetric final : public MetricModel {
 public:
  FieldMetric(const TensorField& field, MetricScheme scheme, InterpolationMethod method, double derivative_step);

  int dim() const override { return field_.dim(); }
  bool contains(const Vec& x) const override { return field_.geometry().contains(x); }
  ChristoffelSymbols christoffel_at(const Vec& x) const override;
  std::optional<SpdTensor> diffusion_at(const Vec& x) const override;

 private:
  const TensorField& field_;
  MetricScheme scheme_;
  InterpolationMethod method_;
  double h_;
};

// Metric given in closed form on an axis-aligned box; derivatives are taken
// by central differences with step h unless supplied.
class AnalyticMetric final : public MetricModel {
 public:
  using MetricFn = std::function<Mat(const Vec&)>;
  using DerivativeFn = std::function<std::vector<Mat>(const Vec&)>;

  AnalyticMetric(Vec lower, Vec upper, MetricFn metric, double h);
  AnalyticMetric(Vec lower, Vec upper, MetricFn metric, DerivativeFn derivatives);
  AnalyticMetric(const AnalyticMetric&) = delete;
  AnalyticMetric& operator=(const AnalyticMetric&) = delete;

  int dim() const override { return static_cast<int>(lower_.size()); }
  bool contains(const Vec& x) const override;
  ChristoffelSymbols christoffel_at(const Vec& x) const override;

 private:
  Vec lower_;
  Vec upper_;
  MetricFn metric_;
  DerivativeFn derivatives_;
};

struct GeodesicState {
  Vec x;
  Vec v;
};

// (dx, dv) with dx = v and dv^γ = −Γ^γ_{αβ} v^α v^β.
GeodesicState geodesic_rhs(const GeodesicState& s, const MetricModel& model);

// Classical four-stage Runge-Kutta step of size h. Returns nullopt when any
// stage leaves the domain; the caller keeps its last in-bounds state.
std::optional<GeodesicState> rk4_step(const GeodesicState& s, double h, const MetricModel& model);

struct ConeSeed {
  Vec apex;
  Vec axis;
  double radius = 1.0;
  double sigma = 0.5;
  int count = 5;

  void validate() const;
  // Half-angle of the cap: atan(sigma·radius) for a cone of unit height.
  double half_angle() const;
};

// Deterministic directions on the cone's spherical cap (an arc in 2D). The
// axis itself comes first.
std::vector<Vec> seed_cone(const ConeSeed& seed);

enum class Termination { LeftGrid, MaxSteps, TargetHit };
enum class TrackingMode { Pure, Hybrid };

std::string to_string(Termination t);
std::string to_string(TrackingMode m);
TrackingMode parse_tracking_mode(const std::string& s);

struct GeodesicTrack {
  std::vector<Vec> vertices;
  std::vector<Vec> directions;
  Termination termination = Termination::MaxSteps;

  double length() const;
};

struct TrackingParams {
  double step_size = 0.1;  // physical units per accepted step
  int max_steps = 10000;
  TrackingMode mode = TrackingMode::Hybrid;
  MetricScheme scheme;
  InterpolationMethod method = InterpolationMethod::Euclidean;
  double derivative_step = 0.1;
  bool bidirectional = false;

  void validate() const;
};

struct Box {
  Vec lower;
  Vec upper;

  bool contains(const Vec& x) const;
};

// Integrates one geodesic from x0 along v0. With `stop` set, the track ends
// as soon as a vertex lands inside it.
GeodesicTrack trace(const MetricModel& model, const Vec& x0, const Vec& v0, const TrackingParams& params,
                    const Box* stop = nullptr);
GeodesicTrack trace(const TensorField& field, const Vec& x0, const Vec& v0, const TrackingParams& params,
                    const Box* stop = nullptr);

// Launches ±v0 and joins the halves into one track running backward → forward.
GeodesicTrack trace_bidirectional(const MetricModel& model, const Vec& x0, const Vec& v0,
                                  const TrackingParams& params, const Box* stop = nullptr);

struct RegionResult {
  std::vector<GeodesicTrack> tracks;
  std::vector<bool> hit;
  std::size_t hit_count = 0;

  double hit_fraction() const {
    return tracks.empty() ? 0.0 : static_cast<double>(hit_count) / static_cast<double>(tracks.size());
  }
};

bool track_hits(const GeodesicTrack& track, const Box& target);

// Shoots every cone direction of every seed and scores hits on `target`.
// Track order is seed-major, then cone order, independent of `threads`.
RegionResult point_to_region(const TensorField& field, std::span<const ConeSeed> seeds, const Box& target,
                             const TrackingParams& params, int threads = 1);

}  // namespace geotrack
