#pragma once

// On-disk formats. Every file is a JSON document; bulk float64 arrays are
// stored little-endian and base64-encoded inside it so round trips are
// bit-exact.

#include "geotrack/acquisition.hpp"
#include "geotrack/geodesic.hpp"
#include "geotrack/grid.hpp"
#include "geotrack/phantom.hpp"
#include "geotrack/tensor4.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geotrack::io {

using nlohmann::json;

// Thrown for malformed or inconsistent files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_f64(std::span<const double> values);
std::vector<double> decode_f64(std::string_view text);

json grid_to_json(const GridGeometry& g);
GridGeometry grid_from_json(const json& j);

json field_to_json(const TensorField& field);
TensorField field_from_json(const json& j);
json tensor4_field_to_json(const Tensor4Field& field);
Tensor4Field tensor4_field_from_json(const json& j);
// The "order" entry of a field document (2 or 4).
int field_order(const json& j);

json scheme_to_json(const AcquisitionScheme& s);
AcquisitionScheme scheme_from_json(const json& j);

json signals_to_json(const SignalVolume& s);
SignalVolume signals_from_json(const json& j);

json fiber_to_json(const FiberSpec& f);
FiberSpec fiber_from_json(const json& j);

// Tangents and masks of a phantom, plus the fibers that produced them.
json phantom_sidecar_to_json(const Phantom& p, std::span<const FiberSpec> fibers);
struct PhantomSidecar {
  GridGeometry geometry;
  std::vector<std::vector<Vec>> tangents;
  std::vector<std::vector<std::uint8_t>> masks;
};
PhantomSidecar phantom_sidecar_from_json(const json& j);

json metric_scheme_to_json(const MetricScheme& s);
json tracking_params_to_json(const TrackingParams& p);

json track_to_json(const GeodesicTrack& t);
json tracks_to_json(std::span<const GeodesicTrack> tracks, const json& params);
std::vector<GeodesicTrack> tracks_from_json(const json& j);
// track_id,vertex_id,x,y,z rows; z is 0 for planar tracks.
std::string tracks_csv(std::span<const GeodesicTrack> tracks);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string dump(const json& j);
json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes to a temporary file next to `path`, then renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace geotrack::io
