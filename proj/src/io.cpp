#include "geotrack/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace geotrack::io {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr std::string_view kEncoding = "base64-f64le";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void expect_format(const json& j, std::string_view name) {
  if (!j.is_object() || get<std::string>(j, "format") != name) {
    throw FormatError("expected a '" + std::string(name) + "' document");
  }
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a) {
  if (!a.is_array() || a.size() < 2 || a.size() > 3) throw FormatError("expected a 2- or 3-vector");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

std::string mask_to_string(const std::vector<std::uint8_t>& m) {
  std::string s(m.size(), '0');
  for (std::size_t i = 0; i < m.size(); ++i) s[i] = m[i] ? '1' : '0';
  return s;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t n = bytes[i] << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw FormatError("base64 padding in the middle of a quartet");
      v[k] = decode_char(c);
      if (v[k] < 0) throw FormatError("invalid base64 character");
    }
    const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

std::string encode_f64(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_f64(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw FormatError("float64 payload length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json grid_to_json(const GridGeometry& g) {
  json dims = json::array(), spacing = json::array(), origin = json::array();
  for (int a = 0; a < g.dim; ++a) {
    dims.push_back(g.dims[a]);
    spacing.push_back(g.spacing[a]);
    origin.push_back(g.origin[a]);
  }
  return {{"dim", g.dim}, {"dims", dims}, {"spacing", spacing}, {"origin", origin}};
}

GridGeometry grid_from_json(const json& j) {
  const int dim = get<int>(j, "dim");
  if (dim != 2 && dim != 3) throw FormatError("grid dim must be 2 or 3");
  const auto dims = get<std::vector<int>>(j, "dims");
  const auto spacing = j.contains("spacing") ? get<std::vector<double>>(j, "spacing") : std::vector<double>(dim, 1.0);
  const auto origin = j.contains("origin") ? get<std::vector<double>>(j, "origin") : std::vector<double>(dim, 0.0);
  if (static_cast<int>(dims.size()) != dim || static_cast<int>(spacing.size()) != dim ||
      static_cast<int>(origin.size()) != dim) {
    throw FormatError("grid dims/spacing/origin must have dim entries");
  }
  Index3 d{1, 1, 1};
  std::array<double, 3> s{1.0, 1.0, 1.0}, o{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    d[a] = dims[a];
    s[a] = spacing[a];
    o[a] = origin[a];
  }
  try {
    return GridGeometry::make(dim, d, s, o);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

json field_to_json(const TensorField& field) {
  std::vector<double> values;
  values.reserve(field.size() * SpdTensor::unique_count(field.dim()));
  for (const auto& t : field.data()) {
    const auto u = t.unique_entries();
    values.insert(values.end(), u.begin(), u.end());
  }
  json j = grid_to_json(field.geometry());
  j["format"] = "geotrack-field";
  j["order"] = 2;
  j["encoding"] = kEncoding;
  j["data"] = encode_f64(values);
  return j;
}

int field_order(const json& j) {
  expect_format(j, "geotrack-field");
  const int order = get<int>(j, "order");
  if (order != 2 && order != 4) throw FormatError("field order must be 2 or 4");
  return order;
}

namespace {

std::vector<double> field_payload(const json& j, int order, std::size_t per_voxel, const GridGeometry& g) {
  if (field_order(j) != order) throw FormatError("expected an order-" + std::to_string(order) + " field");
  if (get<std::string>(j, "encoding") != kEncoding) throw FormatError("unsupported field encoding");
  auto values = decode_f64(get<std::string>(j, "data"));
  if (values.size() != g.voxel_count() * per_voxel) {
    throw FormatError("field payload has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(g.voxel_count() * per_voxel));
  }
  return values;
}

}  // namespace

TensorField field_from_json(const json& j) {
  const auto g = grid_from_json(j);
  const std::size_t k = SpdTensor::unique_count(g.dim);
  const auto values = field_payload(j, 2, k, g);
  std::vector<SpdTensor> data;
  data.reserve(g.voxel_count());
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    try {
      data.push_back(SpdTensor::from_unique(g.dim, std::span<const double>(values.data() + i * k, k)));
    } catch (const std::invalid_argument& e) {
      throw FormatError("voxel " + std::to_string(i) + ": " + e.what());
    }
  }
  return TensorField(g, std::move(data));
}

json tensor4_field_to_json(const Tensor4Field& field) {
  std::vector<double> values;
  for (const auto& t : field.data()) values.insert(values.end(), t.coeffs().begin(), t.coeffs().end());
  json j = grid_to_json(field.geometry());
  j["format"] = "geotrack-field";
  j["order"] = 4;
  j["encoding"] = kEncoding;
  j["data"] = encode_f64(values);
  return j;
}

Tensor4Field tensor4_field_from_json(const json& j) {
  const auto g = grid_from_json(j);
  const std::size_t k = Tensor4::unique_count(g.dim);
  const auto values = field_payload(j, 4, k, g);
  std::vector<Tensor4> data;
  data.reserve(g.voxel_count());
  for (std::size_t i = 0; i < g.voxel_count(); ++i) data.emplace_back(g.dim, std::span<const double>(values.data() + i * k, k));
  return Tensor4Field(g, std::move(data));
}

json scheme_to_json(const AcquisitionScheme& s) {
  json grads = json::array();
  for (const auto& g : s.gradients) grads.push_back(vec_to_json(g));
  return {{"format", "geotrack-scheme"}, {"b", s.b}, {"S0", s.S0}, {"gradients", grads}};
}

AcquisitionScheme scheme_from_json(const json& j) {
  expect_format(j, "geotrack-scheme");
  AcquisitionScheme s;
  s.b = get<double>(j, "b");
  s.S0 = get<double>(j, "S0");
  for (const auto& g : get<json>(j, "gradients")) s.gradients.push_back(vec_from_json(g));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return s;
}

json signals_to_json(const SignalVolume& s) {
  json j = grid_to_json(s.geometry);
  j["format"] = "geotrack-signals";
  j["gradients"] = s.gradients;
  j["layout"] = "voxel-major";
  j["encoding"] = kEncoding;
  j["data"] = encode_f64(s.values);
  return j;
}

SignalVolume signals_from_json(const json& j) {
  expect_format(j, "geotrack-signals");
  SignalVolume s;
  s.geometry = grid_from_json(j);
  s.gradients = get<std::size_t>(j, "gradients");
  if (get<std::string>(j, "encoding") != kEncoding) throw FormatError("unsupported signal encoding");
  s.values = decode_f64(get<std::string>(j, "data"));
  if (s.values.size() != s.geometry.voxel_count() * s.gradients) throw FormatError("signal payload length mismatch");
  return s;
}

json fiber_to_json(const FiberSpec& f) {
  return {{"shape", to_string(f.shape)},
          {"start", f.start},
          {"end", f.end},
          {"center", f.center},
          {"radius", f.radius},
          {"angle0_deg", f.angle0_deg},
          {"angle1_deg", f.angle1_deg},
          {"leg_length", f.leg_length},
          {"amplitude", f.amplitude},
          {"plane_z", f.plane_z},
          {"thickness", f.thickness},
          {"eigenvalues", f.eigenvalues}};
}

FiberSpec fiber_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("fiber spec must be an object");
  static const char* const kKeys[] = {"shape",      "start",     "end",       "center",    "radius",      "angle0_deg",
                                      "angle1_deg", "leg_length", "amplitude", "plane_z",  "thickness",   "eigenvalues"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw FormatError("unknown fiber key '" + key + "'");
    }
  }
  FiberSpec f;
  try {
    if (j.contains("shape")) f.shape = parse_fiber_shape(j["shape"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  if (j.contains("start")) f.start = get<std::array<double, 2>>(j, "start");
  if (j.contains("end")) f.end = get<std::array<double, 2>>(j, "end");
  if (j.contains("center")) f.center = get<std::array<double, 2>>(j, "center");
  if (j.contains("radius")) f.radius = get<double>(j, "radius");
  if (j.contains("angle0_deg")) f.angle0_deg = get<double>(j, "angle0_deg");
  if (j.contains("angle1_deg")) f.angle1_deg = get<double>(j, "angle1_deg");
  if (j.contains("leg_length")) f.leg_length = get<double>(j, "leg_length");
  if (j.contains("amplitude")) f.amplitude = get<double>(j, "amplitude");
  if (j.contains("plane_z")) f.plane_z = get<double>(j, "plane_z");
  if (j.contains("thickness")) f.thickness = get<double>(j, "thickness");
  if (j.contains("eigenvalues")) f.eigenvalues = get<std::array<double, 3>>(j, "eigenvalues");
  return f;
}

json phantom_sidecar_to_json(const Phantom& p, std::span<const FiberSpec> fibers) {
  json tangents = json::array();
  for (std::size_t i = 0; i < p.tangents.size(); ++i) {
    if (p.tangents[i].empty()) continue;
    json list = json::array();
    for (const auto& t : p.tangents[i]) list.push_back(vec_to_json(t));
    tangents.push_back({{"voxel", i}, {"tangents", list}});
  }
  json masks = json::array();
  for (const auto& m : p.masks) masks.push_back(mask_to_string(m));
  json specs = json::array();
  for (const auto& f : fibers) specs.push_back(fiber_to_json(f));
  json j = grid_to_json(p.dt_field.geometry());
  j["format"] = "geotrack-phantom";
  j["fibers"] = specs;
  j["masks"] = masks;
  j["tangents"] = tangents;
  return j;
}

PhantomSidecar phantom_sidecar_from_json(const json& j) {
  expect_format(j, "geotrack-phantom");
  PhantomSidecar s;
  s.geometry = grid_from_json(j);
  const std::size_t n = s.geometry.voxel_count();
  s.tangents.assign(n, {});
  for (const auto& entry : get<json>(j, "tangents")) {
    const auto idx = get<std::size_t>(entry, "voxel");
    if (idx >= n) throw FormatError("tangent voxel index out of range");
    for (const auto& t : get<json>(entry, "tangents")) s.tangents[idx].push_back(vec_from_json(t));
  }
  for (const auto& m : get<json>(j, "masks")) {
    const auto text = m.get<std::string>();
    if (text.size() != n) throw FormatError("mask length does not match voxel count");
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) mask[i] = text[i] == '1' ? 1 : 0;
    s.masks.push_back(std::move(mask));
  }
  return s;
}

json metric_scheme_to_json(const MetricScheme& s) {
  json j = {{"metric", to_string(s.variant)}};
  if (s.variant == MetricScheme::Variant::BetaScaled) {
    j["p"] = s.p;
    j["n"] = s.n;
    j["activation"] = to_string(s.activation);
    j["anisotropy"] = to_string(s.anisotropy);
    j["beta_floor"] = s.beta_floor;
  }
  return j;
}

json tracking_params_to_json(const TrackingParams& p) {
  json j = metric_scheme_to_json(p.scheme);
  j["step_size"] = p.step_size;
  j["max_steps"] = p.max_steps;
  j["mode"] = to_string(p.mode);
  j["interpolation"] = to_string(p.method);
  j["derivative_step"] = p.derivative_step;
  j["bidirectional"] = p.bidirectional;
  return j;
}

json track_to_json(const GeodesicTrack& t) {
  json verts = json::array(), dirs = json::array();
  for (const auto& v : t.vertices) verts.push_back(vec_to_json(v));
  for (const auto& d : t.directions) dirs.push_back(vec_to_json(d));
  return {{"termination", to_string(t.termination)}, {"vertices", verts}, {"directions", dirs}};
}

json tracks_to_json(std::span<const GeodesicTrack> tracks, const json& params) {
  json list = json::array();
  for (const auto& t : tracks) list.push_back(track_to_json(t));
  return {{"format", "geotrack-tracks"}, {"params", params}, {"tracks", list}};
}

std::vector<GeodesicTrack> tracks_from_json(const json& j) {
  expect_format(j, "geotrack-tracks");
  std::vector<GeodesicTrack> out;
  for (const auto& t : get<json>(j, "tracks")) {
    GeodesicTrack track;
    const auto term = get<std::string>(t, "termination");
    if (term == "LeftGrid") {
      track.termination = Termination::LeftGrid;
    } else if (term == "MaxSteps") {
      track.termination = Termination::MaxSteps;
    } else if (term == "TargetHit") {
      track.termination = Termination::TargetHit;
    } else {
      throw FormatError("unknown termination '" + term + "'");
    }
    for (const auto& v : get<json>(t, "vertices")) track.vertices.push_back(vec_from_json(v));
    for (const auto& d : get<json>(t, "directions")) track.directions.push_back(vec_from_json(d));
    if (track.vertices.size() != track.directions.size()) throw FormatError("track vertex/direction count mismatch");
    out.push_back(std::move(track));
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

std::string tracks_csv(std::span<const GeodesicTrack> tracks) {
  std::string out = "track_id,vertex_id,x,y,z\n";
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    for (std::size_t k = 0; k < tracks[t].vertices.size(); ++k) {
      const Vec& v = tracks[t].vertices[k];
      out += std::to_string(t) + ',' + std::to_string(k) + ',' + format_double(v[0]) + ',' + format_double(v[1]) + ',' +
             format_double(v.size() > 2 ? v[2] : 0.0) + '\n';
    }
  }
  return out;
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + path.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

}  // namespace geotrack::io
