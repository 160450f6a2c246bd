#include "geotrack/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace geotrack {

ChristoffelSymbols christoffel(const SpdTensor& g, std::span<const Mat> dg) {
  const int d = g.dim();
  if (static_cast<int>(dg.size()) != d) throw std::invalid_argument("christoffel: need one derivative per axis");
  const Mat ginv = inverse(g).matrix();
  ChristoffelSymbols out;
  out.dim = d;
  for (int up = 0; up < d; ++up) {
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
          s += ginv(up, k) * (dg[a](b, k) + dg[b](a, k) - dg[k](b, a));
        }
        out(up, a, b) = 0.5 * s;
        out(up, b, a) = 0.5 * s;
      }
    }
  }
  return out;
}

FieldMetric::FieldMetric(const TensorField& field, MetricScheme scheme, InterpolationMethod method,
                         double derivative_step)
    : field_(field), scheme_(scheme), method_(method), h_(derivative_step) {
  scheme_.validate();
  if (!(h_ > 0.0)) throw std::invalid_argument("derivative step must be positive");
}

ChristoffelSymbols FieldMetric::christoffel_at(const Vec& x) const {
  const SpdTensor g = metric_from_tensor(interpolate(field_, x, method_), scheme_);
  const auto dg = metric_derivatives(field_, x, scheme_, method_, h_);
  return christoffel(g, dg);
}

std::optional<SpdTensor> FieldMetric::diffusion_at(const Vec& x) const { return interpolate(field_, x, method_); }

AnalyticMetric::AnalyticMetric(Vec lower, Vec upper, MetricFn metric, double h)
    : lower_(std::move(lower)), upper_(std::move(upper)), metric_(std::move(metric)) {
  if (!(h > 0.0)) throw std::invalid_argument("derivative step must be positive");
  derivatives_ = [this, h](const Vec& x) {
    std::vector<Mat> out;
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      Vec fwd = x;
      Vec bwd = x;
      fwd[a] += h;
      bwd[a] -= h;
      out.push_back((metric_(fwd) - metric_(bwd)) / (2.0 * h));
    }
    return out;
  };
}

AnalyticMetric::AnalyticMetric(Vec lower, Vec upper, MetricFn metric, DerivativeFn derivatives)
    : lower_(std::move(lower)), upper_(std::move(upper)), metric_(std::move(metric)),
      derivatives_(std::move(derivatives)) {}

bool AnalyticMetric::contains(const Vec& x) const {
  if (x.size() != lower_.size()) return false;
  return ((x.array() >= lower_.array()) && (x.array() <= upper_.array())).all();
}

ChristoffelSymbols AnalyticMetric::christoffel_at(const Vec& x) const {
  if (!contains(x)) throw OutOfBounds("position outside analytic metric domain");
  const auto dg = derivatives_(x);
  return christoffel(SpdTensor(metric_(x)), dg);
}

GeodesicState geodesic_rhs(const GeodesicState& s, const MetricModel& model) {
  const ChristoffelSymbols gamma = model.christoffel_at(s.x);
  const int d = model.dim();
  Vec dv = Vec::Zero(d);
  for (int up = 0; up < d; ++up) {
    double acc = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) acc += gamma(up, a, b) * s.v[a] * s.v[b];
    dv[up] = -acc;
  }
  return {s.v, dv};
}

std::optional<GeodesicState> rk4_step(const GeodesicState& s, double h, const MetricModel& model) {
  auto eval = [&](const Vec& x, const Vec& v) -> std::optional<GeodesicState> {
    if (!model.contains(x)) return std::nullopt;
    try {
      return geodesic_rhs({x, v}, model);
    } catch (const OutOfBounds&) {
      return std::nullopt;
    }
  };
  const auto k1 = eval(s.x, s.v);
  if (!k1) return std::nullopt;
  const auto k2 = eval(s.x + 0.5 * h * k1->x, s.v + 0.5 * h * k1->v);
  if (!k2) return std::nullopt;
  const auto k3 = eval(s.x + 0.5 * h * k2->x, s.v + 0.5 * h * k2->v);
  if (!k3) return std::nullopt;
  const auto k4 = eval(s.x + h * k3->x, s.v + h * k3->v);
  if (!k4) return std::nullopt;
  GeodesicState out{s.x + (h / 6.0) * (k1->x + 2.0 * k2->x + 2.0 * k3->x + k4->x),
                    s.v + (h / 6.0) * (k1->v + 2.0 * k2->v + 2.0 * k3->v + k4->v)};
  if (!model.contains(out.x)) return std::nullopt;
  return out;
}

void ConeSeed::validate() const {
  if (apex.size() != 2 && apex.size() != 3) throw std::invalid_argument("cone apex must be 2D or 3D");
  if (axis.size() != apex.size()) throw std::invalid_argument("cone axis dimension mismatch");
  if (!(axis.norm() > 0.0)) throw std::invalid_argument("cone axis must be nonzero");
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("cone sigma must lie in (0, 1)");
  if (!(radius > 0.0)) throw std::invalid_argument("cone radius must be positive");
  if (count < 1) throw std::invalid_argument("cone direction count must be >= 1");
}

double ConeSeed::half_angle() const { return std::atan(sigma * radius); }

std::vector<Vec> seed_cone(const ConeSeed& seed) {
  seed.validate();
  const Vec axis = seed.axis.normalized();
  const double alpha = seed.half_angle();
  std::vector<Vec> out;
  out.reserve(seed.count);
  out.push_back(axis);
  const int rest = seed.count - 1;
  if (rest == 0) return out;

  if (axis.size() == 2) {
    // Alternate sides of the axis with growing offsets, the last pair on the rim.
    const Vec normal = Vec{{-axis[1], axis[0]}};
    const int half = (rest + 1) / 2;
    for (int j = 1; j <= rest; ++j) {
      const double sign = (j % 2 == 1) ? 1.0 : -1.0;
      const double angle = sign * alpha * ((j + 1) / 2) / half;
      out.push_back(std::cos(angle) * axis + std::sin(angle) * normal);
    }
    return out;
  }

  // Fibonacci spiral on the cap; uniform in cos θ keeps the area density flat.
  const Eigen::Vector3d a3 = axis;
  const Eigen::Vector3d helper = std::abs(a3.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d u = a3.cross(helper).normalized();
  const Eigen::Vector3d w = a3.cross(u);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double cos_alpha = std::cos(alpha);
  for (int i = 1; i <= rest; ++i) {
    const double z = 1.0 - (1.0 - cos_alpha) * static_cast<double>(i) / rest;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    const Eigen::Vector3d dir = z * a3 + r * std::cos(phi) * u + r * std::sin(phi) * w;
    out.push_back(Vec(dir.normalized()));
  }
  return out;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::LeftGrid: return "LeftGrid";
    case Termination::MaxSteps: return "MaxSteps";
    case Termination::TargetHit: return "TargetHit";
  }
  return "?";
}

std::string to_string(TrackingMode m) { return m == TrackingMode::Pure ? "pure" : "hybrid"; }

TrackingMode parse_tracking_mode(const std::string& s) {
  if (s == "pure") return TrackingMode::Pure;
  if (s == "hybrid") return TrackingMode::Hybrid;
  throw std::invalid_argument("unknown tracking mode '" + s + "' (expected pure or hybrid)");
}

double GeodesicTrack::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) len += (vertices[i] - vertices[i - 1]).norm();
  return len;
}

void TrackingParams::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (!(derivative_step > 0.0)) throw std::invalid_argument("derivative_step must be positive");
  scheme.validate();
}

bool Box::contains(const Vec& x) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() >= lower.array()) && (x.array() <= upper.array())).all();
}

GeodesicTrack trace(const MetricModel& model, const Vec& x0, const Vec& v0, const TrackingParams& params,
                    const Box* stop) {
  params.validate();
  if (x0.size() != model.dim() || v0.size() != model.dim()) throw std::invalid_argument("trace: dimension mismatch");
  if (!(v0.norm() > 0.0)) throw std::invalid_argument("trace: initial direction must be nonzero");
  const bool hybrid = params.mode == TrackingMode::Hybrid;

  GeodesicTrack track;
  GeodesicState state{x0, v0.normalized()};
  track.vertices.push_back(state.x);
  track.directions.push_back(state.v);
  if (!model.contains(x0)) {
    track.termination = Termination::LeftGrid;
    return track;
  }
  if (hybrid && !model.diffusion_at(x0)) throw std::invalid_argument("hybrid tracking needs a diffusion tensor");
  if (stop && stop->contains(x0)) {
    track.termination = Termination::TargetHit;
    return track;
  }

  constexpr int kMaxHalvings = 40;
  for (int step = 0; step < params.max_steps; ++step) {
    // Parameter step chosen so one step covers about step_size of arc length;
    // halve while strong curvature would overshoot twice that.
    double dtau = params.step_size / state.v.norm();
    std::optional<GeodesicState> next;
    bool left = false;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt, dtau *= 0.5) {
      next = rk4_step(state, dtau, model);
      if (!next) {
        left = true;
        break;
      }
      if (next->v.allFinite() && next->v.norm() > 0.0 && (next->x - state.x).norm() <= 2.0 * params.step_size) break;
      next.reset();
    }
    if (left) {
      track.termination = Termination::LeftGrid;
      return track;
    }
    if (!next) {
      track.termination = Termination::MaxSteps;
      return track;
    }

    if (hybrid) {
      Vec e1 = principal_direction(*model.diffusion_at(next->x));
      if (e1.dot(next->v) < 0.0) e1 = -e1;
      next->v = e1.normalized();
    }
    state = *next;
    track.vertices.push_back(state.x);
    track.directions.push_back(state.v.normalized());
    if (stop && stop->contains(state.x)) {
      track.termination = Termination::TargetHit;
      return track;
    }
  }
  track.termination = Termination::MaxSteps;
  return track;
}

GeodesicTrack trace(const TensorField& field, const Vec& x0, const Vec& v0, const TrackingParams& params,
                    const Box* stop) {
  const FieldMetric model(field, params.scheme, params.method, params.derivative_step);
  return trace(model, x0, v0, params, stop);
}

GeodesicTrack trace_bidirectional(const MetricModel& model, const Vec& x0, const Vec& v0,
                                  const TrackingParams& params, const Box* stop) {
  GeodesicTrack fwd = trace(model, x0, v0, params, stop);
  const GeodesicTrack bwd = trace(model, x0, -v0, params, stop);
  GeodesicTrack out;
  for (std::size_t i = bwd.vertices.size(); i-- > 1;) {
    out.vertices.push_back(bwd.vertices[i]);
    out.directions.push_back(-bwd.directions[i]);
  }
  out.vertices.insert(out.vertices.end(), fwd.vertices.begin(), fwd.vertices.end());
  out.directions.insert(out.directions.end(), fwd.directions.begin(), fwd.directions.end());
  out.termination = (bwd.termination == Termination::TargetHit) ? bwd.termination : fwd.termination;
  return out;
}

bool track_hits(const GeodesicTrack& track, const Box& target) {
  return std::any_of(track.vertices.begin(), track.vertices.end(), [&](const Vec& x) { return target.contains(x); });
}

RegionResult point_to_region(const TensorField& field, std::span<const ConeSeed> seeds, const Box& target,
                             const TrackingParams& params, int threads) {
  params.validate();
  struct Launch {
    Vec x0;
    Vec v0;
  };
  std::vector<Launch> launches;
  for (const auto& seed : seeds) {
    if (!field.geometry().contains(seed.apex)) throw std::invalid_argument("seed outside tensor field");
    for (const auto& dir : seed_cone(seed)) launches.push_back({seed.apex, dir});
  }

  const FieldMetric model(field, params.scheme, params.method, params.derivative_step);
  RegionResult result;
  result.tracks.resize(launches.size());
  std::vector<std::exception_ptr> errors(launches.size());
  auto run = [&](std::size_t i) {
    const auto& l = launches[i];
    try {
      result.tracks[i] = params.bidirectional ? trace_bidirectional(model, l.x0, l.v0, params, &target)
                                              : trace(model, l.x0, l.v0, params, &target);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(1, launches.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < launches.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < launches.size(); i += workers) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  result.hit.reserve(result.tracks.size());
  for (const auto& t : result.tracks) {
    const bool h = track_hits(t, target);
    result.hit.push_back(h);
    result.hit_count += h ? 1 : 0;
  }
  return result;
}

}  // namespace geotrack
