#include "geotrack/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace geotrack::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string overlay(const TensorField& field, std::span<const TrackSet> sets) {
  const auto& g = field.geometry();
  const double w = (g.dims[0] - 1) * g.spacing[0] + g.spacing[0];
  const double h = (g.dims[1] - 1) * g.spacing[1] + g.spacing[1];
  const double scale = std::min(20.0, 1000.0 / std::max(w, h));
  const double x0 = g.origin[0] - 0.5 * g.spacing[0];
  const double y1 = g.origin[1] + (g.dims[1] - 0.5) * g.spacing[1];
  auto px = [&](double x) { return (x - x0) * scale; };
  auto py = [&](double y) { return (y1 - y) * scale; };

  const int k = g.dim == 3 ? g.dims[2] / 2 : 0;
  // In-plane blocks of the displayed slice.
  std::vector<EigenDecomposition> glyphs;
  double largest = 0.0;
  for (int i = 0; i < g.dims[0]; ++i) {
    for (int j = 0; j < g.dims[1]; ++j) {
      const Mat m = field.at(Index3{i, j, k}).matrix().topLeftCorner(2, 2);
      glyphs.push_back(eig_sym(m));
      largest = std::max(largest, glyphs.back().values[0]);
    }
  }
  const double radius = 0.45 * std::min(g.spacing[0], g.spacing[1]) * scale;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w * scale) + "\" height=\"" + num(h * scale) +
         "\" viewBox=\"0 0 " + num(w * scale) + " " + num(h * scale) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\">\n";
  std::size_t n = 0;
  for (int i = 0; i < g.dims[0]; ++i) {
    for (int j = 0; j < g.dims[1]; ++j, ++n) {
      const auto& e = glyphs[n];
      const Vec p = g.voxel_position(Index3{i, j, k});
      const double rx = radius * std::max(e.values[0], 0.0) / largest;
      const double ry = radius * std::max(e.values[1], 0.0) / largest;
      // SVG rotates clockwise with y pointing down.
      double angle = -std::atan2(e.vectors(1, 0), e.vectors(0, 0)) * 180.0 / std::numbers::pi;
      if (angle <= -90.0) angle += 180.0;
      if (angle > 90.0) angle -= 180.0;
      out += "<ellipse cx=\"" + num(px(p[0])) + "\" cy=\"" + num(py(p[1])) + "\" rx=\"" + num(rx) + "\" ry=\"" +
             num(ry) + "\" transform=\"rotate(" + num(angle) + " " + num(px(p[0])) + " " + num(py(p[1])) + ")\"/>\n";
    }
  }
  out += "</g>\n";
  for (const auto& set : sets) {
    out += "<g fill=\"none\" stroke=\"" + escape(set.color) + "\" stroke-width=\"1.5\">\n";
    for (const auto& t : set.tracks) {
      if (t.vertices.empty()) continue;
      out += "<polyline points=\"";
      for (std::size_t v = 0; v < t.vertices.size(); ++v) {
        if (v) out += ' ';
        out += num(px(t.vertices[v][0])) + "," + num(py(t.vertices[v][1]));
      }
      out += "\"/>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string line_chart(const LineChart& chart) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto ty = [&](double y) { return chart.log_y ? std::log10(y) : y; };
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (chart.log_y && !(s.y[i] > 0.0)) throw std::invalid_argument("log-scale chart needs positive values");
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (!(xmin < xmax)) {
    xmin = std::isfinite(xmin) ? xmin - 1.0 : 0.0;
    xmax = xmin + 2.0;
  }
  if (!(ymin < ymax)) {
    ymin = std::isfinite(ymin) ? ymin - 1.0 : 0.0;
    ymax = ymin + 2.0;
  }
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - ymin) / (ymax - ymin) * (H - T - B); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape(chart.title) + "</text>\n";
  out += "<g stroke=\"black\" fill=\"none\"><path d=\"M" + num(L) + " " + num(T) + " V" + num(H - B) + " H" +
         num(W - R) + "\"/></g>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    const double yl = H - B - (H - T - B) * i / 4.0;
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(H - B + 16) + "\" text-anchor=\"middle\">" +
           escape(num(xv)) + "</text>\n";
    const std::string label = chart.log_y ? "1e" + num(yv) : num(yv);
    out += "<text x=\"" + num(L - 6) + "\" y=\"" + num(yl + 4) + "\" text-anchor=\"end\">" + escape(label) + "</text>\n";
  }
  out += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\">" +
         escape(chart.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + num((T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num((T + H - B) / 2) + ")\">" + escape(chart.y_label) + "</text>\n";
  out += "</g>\n";
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out += ' ';
      out += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    out += "\"/>\n";
    const double ly = T + 16.0 * k + 8;
    out += "<line x1=\"" + num(W - R + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(W - R + 30) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(W - R + 34) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace geotrack::svg
