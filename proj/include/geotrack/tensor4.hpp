#pragma once

// Totally symmetric 4th-order diffusion tensors: evaluation, log-linear
// fitting, flattening into 2nd-order blocks, and crossing-fiber tracking on
// the diagonal blocks.

#include "geotrack/acquisition.hpp"
#include "geotrack/geodesic.hpp"
#include "geotrack/grid.hpp"
#include "geotrack/spd.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace geotrack {

using IndexTuple = std::array<int, 4>;

class Tensor4 {
 public:
  // Coefficients follow index_tuples(dim): sorted index 4-tuples in
  // lexicographic order, e.g. xxxx, xxxy, xxxz, xxyy, ... , zzzz in 3D.
  Tensor4(int dim, std::span<const double> coeffs);

  static Tensor4 zero(int dim);
  // c·|g|⁴.
  static Tensor4 isotropic(int dim, double c);
  // Symmetrization of an arbitrary 4-index function.
  static Tensor4 from_full(int dim, const std::function<double(int, int, int, int)>& entry);
  // Quartic profile (gᵀDg)²·scale.
  static Tensor4 squared_quadratic(const SpdTensor& d, double scale);

  static int unique_count(int dim) { return dim == 3 ? 15 : 5; }
  static const std::vector<IndexTuple>& index_tuples(int dim);
  // Number of distinct orderings of the tuple (4!/∏ counts!).
  static int multiplicity(const IndexTuple& t);

  int dim() const { return dim_; }
  std::span<const double> coeffs() const { return {coeffs_.data(), static_cast<std::size_t>(unique_count(dim_))}; }
  // Entry of the full symmetric tensor for any index order.
  double coefficient(int i, int j, int k, int l) const;

  Tensor4 operator+(const Tensor4& o) const;
  Tensor4 operator*(double s) const;

 private:
  int dim_;
  std::array<double, 15> coeffs_{};
};

using Tensor4Field = Field<Tensor4>;

// D(g) = Σ D_{ijkl} g_i g_j g_k g_l.
double d_of_g(const Tensor4& t, const Vec& g);

// Least squares on (log S0 − log S)/b against the multiplicity-weighted
// degree-4 monomials. The QR factorization is reused across voxels.
class Tensor4Fitter {
 public:
  Tensor4Fitter(const AcquisitionScheme& scheme);
  // Throws on nonpositive signals or a length mismatch.
  Tensor4 fit(std::span<const double> signals, double S0) const;
  Tensor4 fit(std::span<const double> signals) const { return fit(signals, s0_); }

 private:
  int dim_;
  double b_;
  double s0_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

Tensor4 fit_tensor4(std::span<const double> signals, const AcquisitionScheme& scheme, double S0);

// (d·d)×(d·d) block matrix; block (a,b) entry (i,j) holds D_{abij}.
struct FlattenedTensor4 {
  int dim = 3;
  Eigen::MatrixXd matrix;

  Mat block(int a, int b) const;
};

FlattenedTensor4 flatten(const Tensor4& t);

// Diagonal blocks T_xx, T_yy (, T_zz) as SPD tensors. Eigenvalues below 1e-12
// are clamped; a block with an eigenvalue below −1e-6·|trace| is rejected.
std::vector<SpdTensor> diagonal_components(const Tensor4& t);
SpdTensor diagonal_sum(const Tensor4& t);

// Local maxima of D(g) on a direction grid of `resolution_deg`, antipodal
// duplicates and maxima closer than `merge_deg` merged, strongest first.
std::vector<Vec> odf_maxima(const Tensor4& t, double resolution_deg = 1.0, double merge_deg = 5.0);

// One 2nd-order field per diagonal block.
std::vector<TensorField> diagonal_layers(const Tensor4Field& field4);

struct CrossingResult {
  RegionResult layer1;  // tracks on T_xx
  RegionResult layer2;  // tracks on T_yy
};

// Two-layer crossing reconstruction on a planar 4th-order field: each layer
// is tracked independently with the same seeds, target and parameters.
CrossingResult track_crossing(const Tensor4Field& field4, std::span<const ConeSeed> seeds, const Box& target,
                              const TrackingParams& params, int threads = 1);

}  // namespace geotrack
