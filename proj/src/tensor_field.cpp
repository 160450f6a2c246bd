#include "geotrack/tensor_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace geotrack {

std::string to_string(InterpolationMethod m) {
  switch (m) {
    case InterpolationMethod::Euclidean: return "euclidean";
    case InterpolationMethod::LogEuclidean: return "loge";
    case InterpolationMethod::SpectralQuaternion: return "sq";
  }
  return "?";
}

InterpolationMethod parse_interpolation(const std::string& s) {
  if (s == "euclidean") return InterpolationMethod::Euclidean;
  if (s == "loge") return InterpolationMethod::LogEuclidean;
  if (s == "sq") return InterpolationMethod::SpectralQuaternion;
  throw std::invalid_argument("unknown interpolation '" + s + "' (expected euclidean, loge or sq)");
}

SpdTensor loge_geodesic(const SpdTensor& t1, const SpdTensor& t2, double t) {
  if (t == 1.0) return t1;
  if (t == 0.0) return t2;
  return sym_exp(t * spd_log(t1) + (1.0 - t) * spd_log(t2));
}

namespace {

struct Spectral {
  Vec values;
  Mat frame;  // proper rotation
};

Spectral proper_spectral(const SpdTensor& t) {
  auto e = eig_sym(t);
  if (e.vectors.determinant() < 0.0) e.vectors.col(e.vectors.cols() - 1) *= -1.0;
  return {e.values, e.vectors};
}

// Re-expresses `s` in the signed column permutation of its frame closest to
// `reference`. Only permutations inside eigenvalue ties are admissible, so the
// tensor itself is unchanged.
Spectral align_to(const Spectral& s, const Mat& reference) {
  const int d = static_cast<int>(s.values.size());
  const double tie_tol = 1e-9 * s.values.cwiseAbs().maxCoeff();
  std::array<int, 3> perm{0, 1, 2};
  Spectral best = s;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    bool admissible = true;
    for (int k = 0; k < d && admissible; ++k) admissible = std::abs(s.values[perm[k]] - s.values[k]) <= tie_tol;
    if (!admissible) continue;
    for (int signs = 0; signs < (1 << d); ++signs) {
      Mat frame(d, d);
      Vec values(d);
      for (int k = 0; k < d; ++k) {
        frame.col(k) = ((signs >> k) & 1 ? -1.0 : 1.0) * s.frame.col(perm[k]);
        values[k] = s.values[perm[k]];
      }
      if (frame.determinant() < 0.0) continue;
      const double score = (reference.transpose() * frame).trace();
      if (score > best_score) {
        best_score = score;
        best = {values, frame};
      }
    }
  } while (std::next_permutation(perm.begin(), perm.begin() + d));
  return best;
}

Mat rotation_power(const Mat& rel, double t) {
  if (rel.rows() == 2) {
    const double angle = std::atan2(rel(1, 0), rel(0, 0)) * t;
    Mat r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
  }
  const Eigen::Matrix3d r3 = rel;
  const Eigen::AngleAxisd aa(r3);
  return Mat(Eigen::AngleAxisd(aa.angle() * t, aa.axis()).toRotationMatrix());
}

}  // namespace

SpdTensor sq_geodesic(const SpdTensor& t1, const SpdTensor& t2, double t) {
  if (t == 0.0) return t1;
  if (t == 1.0) return t2;
  if (t1.dim() != t2.dim()) throw std::invalid_argument("sq_geodesic: dimension mismatch");
  const Spectral s1 = proper_spectral(t1);
  const Spectral s2 = align_to(proper_spectral(t2), s1.frame);
  const Mat frame = s1.frame * rotation_power(s1.frame.transpose() * s2.frame, t);
  Vec values(s1.values.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    values[k] = std::pow(s1.values[k], 1.0 - t) * std::pow(s2.values[k], t);
  }
  return SpdTensor(frame * values.asDiagonal() * frame.transpose());
}

namespace {

struct Cell {
  std::array<std::size_t, 8> voxel{};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  int corners = 0;
};

// Corner c of the cell has offset bit a along axis a.
Cell locate(const GridGeometry& g, const Vec& pos) {
  if (!g.contains(pos)) throw OutOfBounds("position outside tensor field");
  Cell cell;
  Index3 base{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    const double u = (pos[a] - g.origin[a]) / g.spacing[a];
    if (g.dims[a] == 1) continue;
    int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, g.dims[a] - 2);
    double f = u - i0;
    if (std::abs(f) < 1e-12) f = 0.0;
    if (std::abs(f - 1.0) < 1e-12) f = 1.0;
    base[a] = i0;
    cell.frac[a] = std::clamp(f, 0.0, 1.0);
  }
  cell.corners = 1 << g.dim;
  for (int c = 0; c < cell.corners; ++c) {
    Index3 ijk = base;
    for (int a = 0; a < g.dim; ++a) {
      if ((c >> a) & 1) ijk[a] = std::min(ijk[a] + 1, g.dims[a] - 1);
    }
    cell.voxel[c] = g.index(ijk);
  }
  return cell;
}

double corner_weight(const Cell& cell, int c, int dim) {
  double w = 1.0;
  for (int a = 0; a < dim; ++a) w *= ((c >> a) & 1) ? cell.frac[a] : 1.0 - cell.frac[a];
  return w;
}

}  // namespace

SpdTensor interpolate(const TensorField& field, const Vec& pos, InterpolationMethod method) {
  const auto& g = field.geometry();
  const Cell cell = locate(g, pos);
  const int d = g.dim;

  // Exact node hit: return the stored tensor untouched.
  for (int c = 0; c < cell.corners; ++c) {
    if (corner_weight(cell, c, d) == 1.0) return field.at(cell.voxel[c]);
  }

  switch (method) {
    case InterpolationMethod::Euclidean: {
      Mat acc = Mat::Zero(d, d);
      for (int c = 0; c < cell.corners; ++c) acc += corner_weight(cell, c, d) * field.at(cell.voxel[c]).matrix();
      return SpdTensor(acc);
    }
    case InterpolationMethod::LogEuclidean: {
      Mat acc = Mat::Zero(d, d);
      for (int c = 0; c < cell.corners; ++c) {
        const double w = corner_weight(cell, c, d);
        if (w != 0.0) acc += w * spd_log(field.at(cell.voxel[c]));
      }
      return sym_exp(acc);
    }
    case InterpolationMethod::SpectralQuaternion: {
      // Pairwise reduction along x, then y, then z.
      std::vector<SpdTensor> level;
      level.reserve(cell.corners);
      for (int c = 0; c < cell.corners; ++c) level.push_back(field.at(cell.voxel[c]));
      for (int a = 0; a < d; ++a) {
        std::vector<SpdTensor> next;
        next.reserve(level.size() / 2);
        for (std::size_t c = 0; c < level.size(); c += 2) {
          next.push_back(sq_geodesic(level[c], level[c + 1], cell.frac[a]));
        }
        level = std::move(next);
      }
      return level.front();
    }
  }
  throw std::invalid_argument("unknown interpolation method");
}

std::vector<Mat> metric_derivatives(const TensorField& field, const Vec& pos, const MetricScheme& scheme,
                                    InterpolationMethod method, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("derivative step must be positive");
  const auto& g = field.geometry();
  const int d = g.dim;
  auto metric_at = [&](const Vec& x) { return metric_from_tensor(interpolate(field, x, method), scheme).matrix(); };

  std::vector<Mat> out;
  out.reserve(d);
  for (int a = 0; a < d; ++a) {
    Vec fwd = pos;
    Vec bwd = pos;
    fwd[a] += h;
    bwd[a] -= h;
    const bool has_fwd = g.contains(fwd);
    const bool has_bwd = g.contains(bwd);
    if (has_fwd && has_bwd) {
      out.push_back((metric_at(fwd) - metric_at(bwd)) / (2.0 * h));
    } else if (has_fwd && g.contains(pos)) {
      out.push_back((metric_at(fwd) - metric_at(pos)) / h);
    } else if (has_bwd && g.contains(pos)) {
      out.push_back((metric_at(pos) - metric_at(bwd)) / h);
    } else if (g.dims[a] == 1) {
      out.push_back(Mat::Zero(d, d));
    } else {
      throw OutOfBounds("derivative stencil outside tensor field");
    }
  }
  return out;
}

}  // namespace geotrack
