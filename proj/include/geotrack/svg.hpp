#pragma once

// Deterministic SVG output: tensor glyph overlays with tracks, and simple
// line charts for the experiment tables.

#include "geotrack/geodesic.hpp"
#include "geotrack/grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace geotrack::svg {

struct TrackSet {
  std::vector<GeodesicTrack> tracks;
  std::string color = "#d62728";
};

// One ellipse per voxel (the middle z-slice of 3D fields, in-plane xy block)
// with axes scaled by eigenvalue, then the track polylines projected on xy.
std::string overlay(const TensorField& field, std::span<const TrackSet> sets);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

std::string line_chart(const LineChart& chart);

}  // namespace geotrack::svg
