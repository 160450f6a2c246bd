#pragma once

// Interpolation of tensor fields and finite-difference derivatives of the
// metric field built on top of them.

#include "geotrack/grid.hpp"
#include "geotrack/spd.hpp"

#include <string>
#include <vector>

namespace geotrack {

enum class InterpolationMethod { Euclidean, LogEuclidean, SpectralQuaternion };

std::string to_string(InterpolationMethod m);
InterpolationMethod parse_interpolation(const std::string& s);

inline bool in_bounds(const TensorField& field, const Vec& pos) { return field.geometry().contains(pos); }

// exp(t·log T1 + (1−t)·log T2): t = 1 gives T1, t = 0 gives T2.
SpdTensor loge_geodesic(const SpdTensor& t1, const SpdTensor& t2, double t);

// Spectral-quaternion path: rotation along the SO(d) geodesic between the
// aligned eigenframes, eigenvalues interpolated geometrically. t = 0 gives
// T1, t = 1 gives T2.
SpdTensor sq_geodesic(const SpdTensor& t1, const SpdTensor& t2, double t);

// Multilinear blend of the 2^dim voxels around `pos`. Throws OutOfBounds.
SpdTensor interpolate(const TensorField& field, const Vec& pos, InterpolationMethod method);

// Central differences of g(x) = metric_from_tensor(interpolate(field, x)),
// one symmetric matrix per axis; one-sided within h of the boundary.
std::vector<Mat> metric_derivatives(const TensorField& field, const Vec& pos, const MetricScheme& scheme,
                                    InterpolationMethod method, double h);

}  // namespace geotrack
