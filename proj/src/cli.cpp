#include "geotrack/cli.hpp"

#include "geotrack/experiments.hpp"
#include "geotrack/io.hpp"
#include "geotrack/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

namespace geotrack::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Files produced by one command, committed together once everything has
// been computed.
class OutputTree {
 public:
  void add(const std::string& name, std::string content) { files_.emplace(name, std::move(content)); }

  void commit(const fs::path& dir) const {
    std::vector<fs::path> written;
    try {
      fs::create_directories(dir);
      for (const auto& [name, content] : files_) {
        io::write_atomic(dir / name, content);
        written.push_back(dir / name);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& [name, content] : files_) n.push_back(name);
    return n;
  }

 private:
  std::map<std::string, std::string> files_;
};

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 42;
  int threads = 1;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  c.out_opt = cmd->add_option("--out", c.out, "output directory");
  c.seed_opt = cmd->add_option("--seed", c.seed, "RNG seed");
  c.threads_opt = cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 1024));
}

const std::set<std::string> kPathKeys{"field", "signals", "scheme", "phantom"};

// Loads the config (if any), resolving relative paths against its folder.
json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = io::read_json(path);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const fs::path base = fs::path(path).parent_path();
  for (auto& [key, value] : j.items()) {
    if (kPathKeys.count(key) && value.is_string() && fs::path(value.get<std::string>()).is_relative()) {
      value = (base / value.get<std::string>()).lexically_normal().string();
    }
    if (key == "tracks" && value.is_array()) {
      for (auto& t : value) {
        if (t.is_string() && fs::path(t.get<std::string>()).is_relative()) t = (base / t.get<std::string>()).lexically_normal().string();
      }
    }
  }
  return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown " + where + " key '" + key + "'");
  }
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
  return value_or<T>(j, key, T{});
}

// Flags win over the config file.
template <typename T>
void override_with(json& j, const char* key, const CLI::Option* opt, const T& value) {
  if (opt->count() > 0) j[key] = value;
}

void apply_common(json& j, const Common& c) {
  override_with(j, "out", c.out_opt, c.out);
  override_with(j, "seed", c.seed_opt, c.seed);
  override_with(j, "threads", c.threads_opt, c.threads);
}

Vec vec_from(const json& a, const char* what) {
  if (!a.is_array() || a.size() < 2 || a.size() > 3) throw ConfigError(std::string(what) + " must be a 2- or 3-vector");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ConfigError(std::string(what) + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

MetricScheme parse_metric(const json& j) {
  MetricScheme s;
  s.variant = parse_metric_variant(value_or<std::string>(j, "metric", "beta"));
  s.p = value_or(j, "p", 2);
  s.n = value_or(j, "n", 2);
  s.activation = parse_activation(value_or<std::string>(j, "activation", "S1"));
  s.anisotropy = parse_anisotropy(value_or<std::string>(j, "anisotropy", "HA"));
  s.beta_floor = value_or(j, "beta_floor", 1e-3);
  s.validate();
  return s;
}

TrackingParams parse_tracking(const json& j) {
  check_keys(j, {"metric", "p", "n", "activation", "anisotropy", "beta_floor", "step_size", "max_steps", "mode",
                 "interpolation", "derivative_step", "bidirectional"},
             "tracking");
  TrackingParams p;
  p.scheme = parse_metric(j);
  p.step_size = value_or(j, "step_size", p.step_size);
  p.max_steps = value_or(j, "max_steps", p.max_steps);
  p.mode = parse_tracking_mode(value_or<std::string>(j, "mode", "hybrid"));
  p.method = parse_interpolation(value_or<std::string>(j, "interpolation", "euclidean"));
  p.derivative_step = value_or(j, "derivative_step", p.derivative_step);
  p.bidirectional = value_or(j, "bidirectional", false);
  p.validate();
  return p;
}

json seed_json(const ConeSeed& s) {
  return {{"apex", vec_json(s.apex)}, {"axis", vec_json(s.axis)}, {"radius", s.radius}, {"sigma", s.sigma}, {"count", s.count}};
}

json box_json(const Box& b) { return {{"lower", vec_json(b.lower)}, {"upper", vec_json(b.upper)}}; }

ConeSeed parse_cone(const json& j, const Vec& apex) {
  ConeSeed s;
  s.apex = apex;
  s.axis = vec_from(required<json>(j, "axis"), "seed axis");
  s.radius = value_or(j, "radius", s.radius);
  s.sigma = value_or(j, "sigma", s.sigma);
  s.count = value_or(j, "count", s.count);
  s.validate();
  return s;
}

// Either a list of cones {apex, axis, radius, sigma, count} or one shared
// cone {points, axis, radius, sigma, count}.
std::vector<ConeSeed> parse_seeds(const json& j) {
  std::vector<ConeSeed> seeds;
  if (j.is_array()) {
    for (const auto& c : j) {
      check_keys(c, {"apex", "axis", "radius", "sigma", "count"}, "seed");
      seeds.push_back(parse_cone(c, vec_from(required<json>(c, "apex"), "seed apex")));
    }
  } else if (j.is_object()) {
    check_keys(j, {"points", "axis", "radius", "sigma", "count"}, "seeds");
    for (const auto& p : required<json>(j, "points")) seeds.push_back(parse_cone(j, vec_from(p, "seed point")));
  } else {
    throw ConfigError("seeds must be an array or an object");
  }
  if (seeds.empty()) throw ConfigError("no seeds given");
  return seeds;
}

Box parse_box(const json& j) {
  check_keys(j, {"lower", "upper"}, "target");
  Box b{vec_from(required<json>(j, "lower"), "target lower"), vec_from(required<json>(j, "upper"), "target upper")};
  if (b.lower.size() != b.upper.size() || (b.lower.array() > b.upper.array()).any()) {
    throw ConfigError("target lower corner must not exceed its upper corner");
  }
  return b;
}

std::string csv_number(double v) { return std::isfinite(v) ? io::format_double(v) : "nan"; }

fs::path out_dir(const json& j) { return value_or<std::string>(j, "out", "."); }

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------- phantom

struct PhantomCli {
  std::string shape;
  double angle = 60.0;
  int order = 2;
  double noise = 0.0;
  int gradients = 81;
  double b = 1500.0;
  CLI::Option *shape_opt, *angle_opt, *order_opt, *noise_opt, *gradients_opt, *b_opt;
};

std::vector<int> parse_orders(const json& j) {
  std::vector<int> orders;
  const json o = j.contains("order") ? j["order"] : json(2);
  if (o.is_number_integer()) {
    orders.push_back(o.get<int>());
  } else if (o.is_array()) {
    for (const auto& x : o) {
      if (!x.is_number_integer()) throw ConfigError("order entries must be integers");
      orders.push_back(x.get<int>());
    }
  } else {
    throw ConfigError("order must be 2, 4 or a list of them");
  }
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  for (int x : orders) {
    if (x != 2 && x != 4) throw ConfigError("order must be 2 or 4");
  }
  if (orders.empty()) throw ConfigError("order list is empty");
  return orders;
}

OutputTree cmd_phantom(const json& cfg) {
  check_keys(cfg, {"shape", "angle", "grid", "fibers", "background", "order", "acquisition", "noise", "seed", "threads",
                   "out", "seeds", "target"},
             "phantom");
  const std::string shape = value_or<std::string>(cfg, "shape", "ushape");
  Setup setup = preset(shape, value_or(cfg, "angle", 60.0));
  if (cfg.contains("grid")) setup.grid = io::grid_from_json(cfg["grid"]);
  if (cfg.contains("fibers")) {
    setup.fibers.clear();
    for (const auto& f : cfg["fibers"]) setup.fibers.push_back(io::fiber_from_json(f));
  }
  if (cfg.contains("seeds")) setup.seeds = parse_seeds(cfg["seeds"]);
  if (cfg.contains("target")) setup.target = parse_box(cfg["target"]);
  for (const auto& f : setup.fibers) f.validate();
  const auto orders = parse_orders(cfg);
  const bool want4 = std::find(orders.begin(), orders.end(), 4) != orders.end();
  const double background = value_or(cfg, "background", kDefaultBackgroundDiffusivity);
  const double noise = value_or(cfg, "noise", 0.0);
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
  const auto seed = value_or<std::uint64_t>(cfg, "seed", 42);
  const json acq = value_or(cfg, "acquisition", json::object());
  check_keys(acq, {"gradients", "b", "S0"}, "acquisition");
  const auto scheme = gradient_scheme(value_or(acq, "gradients", 81), value_or(acq, "b", 1500.0), value_or(acq, "S0", 1.0),
                                      setup.grid.dim);

  const Phantom ph = rasterize(setup.fibers, setup.grid, background, want4);
  OutputTree out;
  out.add("phantom_dt.json", io::dump(io::field_to_json(ph.dt_field)));
  out.add("phantom.json", io::dump(io::phantom_sidecar_to_json(ph, setup.fibers)));
  out.add("scheme.json", io::dump(io::scheme_to_json(scheme)));
  for (int order : orders) {
    auto signals = simulate_signal(ph, scheme, order);
    if (noise > 0.0) signals = add_rician(signals, noise, seed);
    const std::string tag = std::to_string(order);
    out.add("signals_order" + tag + ".json", io::dump(io::signals_to_json(signals)));
    if (order == 2) {
      out.add("fitted_dt.json", io::dump(io::field_to_json(fit_dti_field(signals, scheme))));
    } else {
      out.add("phantom_t4.json", io::dump(io::tensor4_field_to_json(*ph.t4_field)));
      out.add("fitted_t4.json", io::dump(io::tensor4_field_to_json(fit_tensor4_field(signals, scheme))));
    }
  }
  // A ready-to-run track config for this bundle.
  json seeds = json::array();
  for (const auto& s : setup.seeds) seeds.push_back(seed_json(s));
  json track = {{"field", orders.front() == 2 ? "fitted_dt.json" : "fitted_t4.json"},
                {"phantom", "phantom.json"},
                {"seeds", seeds},
                {"target", box_json(setup.target)},
                {"tracking", json::object()}};
  out.add("track_config.json", io::dump(track));
  return out;
}

// ---------------------------------------------------------------- fit

OutputTree cmd_fit(const json& cfg) {
  check_keys(cfg, {"signals", "scheme", "order", "seed", "threads", "out"}, "fit");
  const auto signals = io::signals_from_json(io::read_json(required<std::string>(cfg, "signals")));
  const auto scheme = io::scheme_from_json(io::read_json(required<std::string>(cfg, "scheme")));
  const int order = value_or(cfg, "order", 2);
  OutputTree out;
  if (order == 2) {
    out.add("fitted_dt.json", io::dump(io::field_to_json(fit_dti_field(signals, scheme))));
  } else if (order == 4) {
    out.add("fitted_t4.json", io::dump(io::tensor4_field_to_json(fit_tensor4_field(signals, scheme))));
  } else {
    throw ConfigError("order must be 2 or 4");
  }
  return out;
}

// ---------------------------------------------------------------- track

json summarize(const RegionResult& r, const GridGeometry& grid, const std::optional<io::PhantomSidecar>& truth) {
  double total = 0.0;
  std::map<std::string, int> terms{{"LeftGrid", 0}, {"MaxSteps", 0}, {"TargetHit", 0}};
  for (const auto& t : r.tracks) {
    total += t.length();
    ++terms[to_string(t.termination)];
  }
  json s = {{"track_count", r.tracks.size()},
            {"hit_count", r.hit_count},
            {"hit_fraction", r.hit_fraction()},
            {"mean_length", r.tracks.empty() ? 0.0 : total / static_cast<double>(r.tracks.size())},
            {"terminations", terms}};
  s["mean_angular_deviation_deg"] =
      truth ? nan_to_null(mean_angular_deviation(r.tracks, grid, truth->tangents)) : json(nullptr);
  return s;
}

OutputTree cmd_track(const json& cfg, int threads) {
  check_keys(cfg, {"field", "phantom", "seeds", "target", "tracking", "seed", "threads", "out"}, "track");
  const json field_doc = io::read_json(required<std::string>(cfg, "field"));
  const int order = io::field_order(field_doc);
  const TrackingParams params = parse_tracking(value_or(cfg, "tracking", json::object()));
  const auto seeds = parse_seeds(required<json>(cfg, "seeds"));
  const Box target = parse_box(required<json>(cfg, "target"));
  std::optional<io::PhantomSidecar> truth;
  if (cfg.contains("phantom")) truth = io::phantom_sidecar_from_json(io::read_json(required<std::string>(cfg, "phantom")));

  const GridGeometry grid = io::grid_from_json(field_doc);
  if (truth && !(truth->geometry == grid)) throw ConfigError("phantom sidecar grid does not match the field grid");
  std::string bad;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i].apex.size() != grid.dim || !grid.contains(seeds[i].apex)) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(i) + " " + vec_json(seeds[i].apex).dump();
    }
  }
  if (!bad.empty()) throw ConfigError("seeds outside the field: " + bad);
  if (target.lower.size() != grid.dim) throw ConfigError("target dimension does not match the field");

  json params_json = io::tracking_params_to_json(params);
  params_json["grid"] = io::grid_to_json(grid);
  json seeds_json = json::array();
  for (const auto& s : seeds) seeds_json.push_back(seed_json(s));
  params_json["seeds"] = seeds_json;
  params_json["target"] = box_json(target);

  OutputTree out;
  if (order == 2) {
    const auto field = io::field_from_json(field_doc);
    const auto r = point_to_region(field, seeds, target, params, threads);
    out.add("tracks.json", io::dump(io::tracks_to_json(r.tracks, params_json)));
    out.add("tracks.csv", io::tracks_csv(r.tracks));
    json summary = summarize(r, grid, truth);
    summary["metric"] = scheme_label(params.scheme);
    summary["mode"] = to_string(params.mode);
    out.add("summary.json", io::dump(summary));
  } else {
    if (grid.dim != 2) throw ConfigError("4th-order tracking needs a planar field");
    const auto field4 = io::tensor4_field_from_json(field_doc);
    const auto r = track_crossing(field4, seeds, target, params, threads);
    json layers = json::array();
    int k = 1;
    for (const RegionResult* layer : {&r.layer1, &r.layer2}) {
      json pj = params_json;
      pj["layer"] = k;
      const std::string tag = "tracks_layer" + std::to_string(k);
      out.add(tag + ".json", io::dump(io::tracks_to_json(layer->tracks, pj)));
      out.add(tag + ".csv", io::tracks_csv(layer->tracks));
      json s = summarize(*layer, grid, truth);
      s["layer"] = k++;
      layers.push_back(s);
    }
    out.add("summary.json", io::dump({{"metric", scheme_label(params.scheme)}, {"mode", to_string(params.mode)}, {"layers", layers}}));
  }
  return out;
}

// ---------------------------------------------------------------- cost-profile

SpdTensor tensor_from(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be a list of unique tensor entries");
  const auto e = j.get<std::vector<double>>();
  const int dim = e.size() == 3 ? 2 : (e.size() == 6 ? 3 : 0);
  if (dim == 0) throw ConfigError(std::string(what) + " needs 3 (2D) or 6 (3D) unique entries");
  return SpdTensor::from_unique(dim, e);
}

OutputTree cmd_cost_profile(const json& cfg) {
  check_keys(cfg, {"endpoints", "field", "from", "to", "interpolation", "samples", "schemes", "gap_cases", "seed",
                   "threads", "out"},
             "cost-profile");
  const auto method = parse_interpolation(value_or<std::string>(cfg, "interpolation", "loge"));
  const int samples = value_or(cfg, "samples", 101);
  std::vector<MetricScheme> schemes;
  if (cfg.contains("schemes")) {
    for (const auto& s : cfg["schemes"]) {
      check_keys(s, {"metric", "p", "n", "activation", "anisotropy", "beta_floor"}, "scheme");
      schemes.push_back(parse_metric(s));
    }
  } else {
    schemes = {MetricScheme::inverse(), MetricScheme::adjugate(), MetricScheme::beta_scaled(2, 2)};
  }
  if (schemes.empty()) throw ConfigError("no metric schemes given");

  CostProfile p;
  Vec direction;
  if (cfg.contains("field")) {
    const auto field = io::field_from_json(io::read_json(required<std::string>(cfg, "field")));
    const Vec from = vec_from(required<json>(cfg, "from"), "from");
    const Vec to = vec_from(required<json>(cfg, "to"), "to");
    if (!in_bounds(field, from) || !in_bounds(field, to)) throw ConfigError("profile endpoints lie outside the field");
    p = cost_profile(field, from, to, method, samples, schemes);
    direction = Vec(to - from);
  } else {
    const json e = value_or(cfg, "endpoints", json::object());
    check_keys(e, {"start", "middle", "end"}, "endpoints");
    const auto start = e.contains("start") ? tensor_from(e["start"], "start") : SpdTensor::diagonal({1.7e-3, 0.2e-3, 0.2e-3});
    const auto middle = e.contains("middle") ? tensor_from(e["middle"], "middle") : SpdTensor::diagonal({0.7e-3, 0.7e-3, 0.7e-3});
    const auto end = e.contains("end") ? tensor_from(e["end"], "end") : start;
    p = cost_profile(start, middle, end, method, samples, schemes);
    direction = principal_direction(start);
  }

  OutputTree out;
  std::string csv = "t,ha,fa";
  for (const auto& l : p.labels) csv += ",cost_" + l;
  csv += "\n";
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    csv += csv_number(p.t[i]) + "," + csv_number(p.ha[i]) + "," + csv_number(p.fa[i]);
    for (const auto& c : p.cost) csv += "," + csv_number(c[i]);
    csv += "\n";
  }
  out.add("cost_profile.csv", csv);

  svg::LineChart chart{"Directional Riemannian cost along the path", "t", "cost (log10)", true, {}};
  for (std::size_t k = 0; k < p.labels.size(); ++k) chart.series.push_back({p.labels[k], p.t, p.cost[k]});
  out.add("cost_profile.svg", svg::line_chart(chart));

  // Isotropic gap with small vs large eigenvalue.
  const json g = value_or(cfg, "gap_cases", json::object());
  check_keys(g, {"small", "large"}, "gap_cases");
  const double small = value_or(g, "small", 0.3e-3);
  const double large = value_or(g, "large", 1.2e-3);
  if (!(small > 0.0 && large > 0.0)) throw ConfigError("gap eigenvalues must be positive");
  std::string gaps = "case,lambda";
  for (const auto& l : p.labels) gaps += ",cost_" + l;
  gaps += "\n";
  int k = 1;
  for (double lambda : {small, large}) {
    gaps += std::to_string(k++) + "," + csv_number(lambda);
    for (double c : gap_costs(lambda, direction.normalized(), schemes)) gaps += "," + csv_number(c);
    gaps += "\n";
  }
  out.add("gap_cases.csv", gaps);
  return out;
}

// ---------------------------------------------------------------- angle-sweep

OutputTree cmd_angle_sweep(const json& cfg) {
  check_keys(cfg, {"angles", "noise", "seed", "grid", "thickness", "gradients", "b", "threads", "out"}, "angle-sweep");
  std::vector<double> angles;
  const json a = value_or(cfg, "angles", json::object());
  if (a.is_array()) {
    angles = a.get<std::vector<double>>();
  } else {
    check_keys(a, {"from", "to", "step"}, "angles");
    const double from = value_or(a, "from", 40.0), to = value_or(a, "to", 110.0), step = value_or(a, "step", 10.0);
    if (!(step > 0.0) || from > to) throw ConfigError("angle range needs from <= to and step > 0");
    for (int i = 0; from + i * step <= to + 1e-9; ++i) angles.push_back(from + i * step);
  }
  for (double th : angles) {
    if (!(th > 0.0 && th < 180.0)) throw ConfigError("crossing angles must lie in (0, 180)");
  }
  CrossingOptions opt;
  opt.noise = value_or(cfg, "noise", 0.0);
  opt.seed = value_or<std::uint64_t>(cfg, "seed", 42);
  opt.grid = value_or(cfg, "grid", opt.grid);
  opt.thickness = value_or(cfg, "thickness", opt.thickness);
  opt.gradients = value_or(cfg, "gradients", opt.gradients);
  opt.b = value_or(cfg, "b", opt.b);
  if (!(opt.noise >= 0.0)) throw ConfigError("noise must be >= 0");

  std::string csv = "theta_deg,err_layer1_deg,err_layer2_deg\n";
  svg::LineChart chart{"Diagonal-component orientation error", "crossing angle (deg)", "error (deg)", false, {}};
  chart.series = {{"layer 1 (T_xx)", {}, {}}, {"layer 2 (T_yy)", {}, {}}};
  for (double th : angles) {
    const auto row = crossing_error(th, opt);
    csv += csv_number(th) + "," + csv_number(row.err_layer1_deg) + "," + csv_number(row.err_layer2_deg) + "\n";
    chart.series[0].x.push_back(th);
    chart.series[0].y.push_back(row.err_layer1_deg);
    chart.series[1].x.push_back(th);
    chart.series[1].y.push_back(row.err_layer2_deg);
  }
  OutputTree out;
  out.add("angle_sweep.csv", csv);
  out.add("angle_sweep.svg", svg::line_chart(chart));
  return out;
}

// ---------------------------------------------------------------- plot

OutputTree cmd_plot(const json& cfg) {
  check_keys(cfg, {"field", "tracks", "name", "seed", "threads", "out"}, "plot");
  const json doc = io::read_json(required<std::string>(cfg, "field"));
  const GridGeometry grid = io::grid_from_json(doc);
  TensorField field = io::field_order(doc) == 2 ? io::field_from_json(doc) : [&] {
    const auto f4 = io::tensor4_field_from_json(doc);
    std::vector<SpdTensor> data;
    for (const auto& t : f4.data()) data.push_back(diagonal_sum(t));
    return TensorField(grid, std::move(data));
  }();
  static const char* const kColors[] = {"#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  std::vector<svg::TrackSet> sets;
  for (const auto& path : value_or(cfg, "tracks", std::vector<std::string>{})) {
    const json t = io::read_json(path);
    if (t.contains("params") && t["params"].contains("grid") && !(io::grid_from_json(t["params"]["grid"]) == grid)) {
      throw ConfigError("tracks in '" + path + "' were traced on a different grid");
    }
    sets.push_back({io::tracks_from_json(t), kColors[sets.size() % std::size(kColors)]});
  }
  const std::string name = value_or<std::string>(cfg, "name", "plot.svg");
  if (name.empty() || fs::path(name).has_parent_path()) throw ConfigError("plot name must be a plain file name");
  OutputTree out;
  out.add(name, svg::overlay(field, sets));
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geodesic tractography toolkit", "geotrack"};
  app.require_subcommand(1);

  Common c_phantom, c_fit, c_track, c_cost, c_sweep, c_plot;

  auto* phantom = app.add_subcommand("phantom", "generate a synthetic phantom bundle");
  add_common(phantom, c_phantom);
  PhantomCli pc;
  pc.shape_opt = phantom->add_option("--shape", pc.shape, "preset: line, ushape, sshape, sine, arc, cross");
  pc.angle_opt = phantom->add_option("--angle", pc.angle, "crossing angle in degrees (cross preset)");
  pc.order_opt = phantom->add_option("--order", pc.order, "signal order, 2 or 4");
  pc.noise_opt = phantom->add_option("--noise", pc.noise, "Rician noise sigma relative to S0");
  pc.gradients_opt = phantom->add_option("--gradients", pc.gradients, "number of gradient directions");
  pc.b_opt = phantom->add_option("--b", pc.b, "b-value");

  auto* fit = app.add_subcommand("fit", "fit 2nd- or 4th-order tensors to a signal volume");
  add_common(fit, c_fit);
  std::string fit_signals, fit_scheme;
  int fit_order = 2;
  auto* fs_opt = fit->add_option("--signals", fit_signals, "signal volume file");
  auto* fsch_opt = fit->add_option("--scheme", fit_scheme, "acquisition scheme file");
  auto* fo_opt = fit->add_option("--order", fit_order, "tensor order, 2 or 4");

  auto* track = app.add_subcommand("track", "point-to-region geodesic tracking");
  add_common(track, c_track);
  std::string t_field, t_metric, t_mode, t_interp;
  int t_p = 2, t_n = 2, t_max = 10000;
  double t_step = 0.1;
  auto* tf_opt = track->add_option("--field", t_field, "tensor field file");
  auto* tm_opt = track->add_option("--metric", t_metric, "inverse, adjugate or beta");
  auto* tp_opt = track->add_option("--p", t_p, "beta exponent p");
  auto* tn_opt = track->add_option("--n", t_n, "tensor exponent n");
  auto* tmode_opt = track->add_option("--mode", t_mode, "pure or hybrid");
  auto* ti_opt = track->add_option("--interpolation", t_interp, "euclidean, loge or sq");
  auto* ts_opt = track->add_option("--step", t_step, "step size");
  auto* tx_opt = track->add_option("--max-steps", t_max, "step limit per track");
  double t_sigma = 0.5;
  int t_count = 5;
  auto* tsig_opt = track->add_option("--sigma", t_sigma, "cone base ratio for every seed");
  auto* tcnt_opt = track->add_option("--count", t_count, "shots per seed");
  auto* tbi_opt = track->add_flag("--bidirectional", "trace both ways from each seed");

  auto* cost = app.add_subcommand("cost-profile", "Riemannian cost along an interpolation path");
  add_common(cost, c_cost);
  std::string c_interp;
  int c_samples = 101;
  auto* ci_opt = cost->add_option("--interpolation", c_interp, "euclidean, loge or sq");
  auto* cs_opt = cost->add_option("--samples", c_samples, "samples along the path");

  auto* sweep = app.add_subcommand("angle-sweep", "orientation error of diagonal components vs crossing angle");
  add_common(sweep, c_sweep);
  double s_from = 40, s_to = 110, s_step = 10, s_noise = 0;
  auto* sf_opt = sweep->add_option("--from", s_from, "first angle (deg)");
  auto* st_opt = sweep->add_option("--to", s_to, "last angle (deg)");
  auto* ss_opt = sweep->add_option("--step", s_step, "angle step (deg)");
  auto* sn_opt = sweep->add_option("--noise", s_noise, "Rician noise sigma");

  auto* plot = app.add_subcommand("plot", "SVG of tensor glyphs with tracks overlaid");
  add_common(plot, c_plot);
  std::string p_field;
  std::vector<std::string> p_tracks;
  auto* pf_opt = plot->add_option("--field", p_field, "tensor field file");
  auto* pt_opt = plot->add_option("--tracks", p_tracks, "track files");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    OutputTree tree;
    json cfg;
    if (phantom->parsed()) {
      cfg = load_config(c_phantom.config);
      apply_common(cfg, c_phantom);
      override_with(cfg, "shape", pc.shape_opt, pc.shape);
      override_with(cfg, "angle", pc.angle_opt, pc.angle);
      override_with(cfg, "order", pc.order_opt, pc.order);
      override_with(cfg, "noise", pc.noise_opt, pc.noise);
      if (pc.gradients_opt->count()) cfg["acquisition"]["gradients"] = pc.gradients;
      if (pc.b_opt->count()) cfg["acquisition"]["b"] = pc.b;
      tree = cmd_phantom(cfg);
    } else if (fit->parsed()) {
      cfg = load_config(c_fit.config);
      apply_common(cfg, c_fit);
      override_with(cfg, "signals", fs_opt, fit_signals);
      override_with(cfg, "scheme", fsch_opt, fit_scheme);
      override_with(cfg, "order", fo_opt, fit_order);
      tree = cmd_fit(cfg);
    } else if (track->parsed()) {
      cfg = load_config(c_track.config);
      apply_common(cfg, c_track);
      override_with(cfg, "field", tf_opt, t_field);
      json& t = cfg["tracking"];
      if (t.is_null()) t = json::object();
      override_with(t, "metric", tm_opt, t_metric);
      override_with(t, "p", tp_opt, t_p);
      override_with(t, "n", tn_opt, t_n);
      override_with(t, "mode", tmode_opt, t_mode);
      override_with(t, "interpolation", ti_opt, t_interp);
      override_with(t, "step_size", ts_opt, t_step);
      override_with(t, "max_steps", tx_opt, t_max);
      override_with(t, "bidirectional", tbi_opt, true);
      if (tsig_opt->count() || tcnt_opt->count()) {
        json& seeds = cfg["seeds"];
        auto patch = [&](json& cone) {
          override_with(cone, "sigma", tsig_opt, t_sigma);
          override_with(cone, "count", tcnt_opt, t_count);
        };
        if (seeds.is_array()) {
          for (auto& cone : seeds) patch(cone);
        } else if (seeds.is_object()) {
          patch(seeds);
        }
      }
      tree = cmd_track(cfg, value_or(cfg, "threads", 1));
    } else if (cost->parsed()) {
      cfg = load_config(c_cost.config);
      apply_common(cfg, c_cost);
      override_with(cfg, "interpolation", ci_opt, c_interp);
      override_with(cfg, "samples", cs_opt, c_samples);
      tree = cmd_cost_profile(cfg);
    } else if (sweep->parsed()) {
      cfg = load_config(c_sweep.config);
      apply_common(cfg, c_sweep);
      if (cfg.contains("angles") && cfg["angles"].is_array() && (sf_opt->count() || st_opt->count() || ss_opt->count())) {
        cfg["angles"] = json::object();
      }
      if (sf_opt->count()) cfg["angles"]["from"] = s_from;
      if (st_opt->count()) cfg["angles"]["to"] = s_to;
      if (ss_opt->count()) cfg["angles"]["step"] = s_step;
      override_with(cfg, "noise", sn_opt, s_noise);
      tree = cmd_angle_sweep(cfg);
    } else if (plot->parsed()) {
      cfg = load_config(c_plot.config);
      apply_common(cfg, c_plot);
      override_with(cfg, "field", pf_opt, p_field);
      override_with(cfg, "tracks", pt_opt, p_tracks);
      tree = cmd_plot(cfg);
    }
    const fs::path dir = out_dir(cfg);
    tree.commit(dir);
    for (const auto& name : tree.names()) out << (dir / name).string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace geotrack::cli
