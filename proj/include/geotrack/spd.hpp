#pragma once

// Symmetric positive-definite tensors, anisotropy scalars, and the metric
// tensors built from a diffusion tensor.

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace geotrack {

// Small fixed-capacity dense types. Every tensor here is 2x2 or 3x3, so the
// storage lives inline and never touches the heap.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

class SpdTensor {
 public:
  // Symmetrizes `m` and checks that every eigenvalue is finite and > 0.
  // Throws std::invalid_argument otherwise.
  explicit SpdTensor(const Mat& m);

  static SpdTensor diagonal(std::initializer_list<double> values);
  static SpdTensor identity(int dim);
  // Unique entries in (xx, xy, xz, yy, yz, zz) order, (xx, xy, yy) in 2D.
  static SpdTensor from_unique(int dim, std::span<const double> entries);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  std::vector<double> unique_entries() const;
  static int unique_count(int dim) { return dim * (dim + 1) / 2; }

 private:
  Mat m_;
};

struct EigenDecomposition {
  Vec values;   // descending
  Mat vectors;  // orthonormal columns, column k pairs with values[k]
};

EigenDecomposition eig_sym(const SpdTensor& t);
// Same decomposition for any symmetric matrix (used for indefinite blocks).
EigenDecomposition eig_sym(const Mat& symmetric);

Vec principal_direction(const SpdTensor& t);

// Spectral matrix functions.
Mat spd_log(const SpdTensor& t);
SpdTensor sym_exp(const Mat& symmetric);
SpdTensor spd_pow(const SpdTensor& t, double exponent);
SpdTensor inverse(const SpdTensor& t);

enum class Anisotropy { HA, FA, MD, RA };
enum class Activation { S1, S2, S3 };

double hilbert_anisotropy(const SpdTensor& t);
double anisotropy_scalar(const SpdTensor& t, Anisotropy measure);
double activation(double x, Activation kind);

SpdTensor adjugate(const SpdTensor& t);

struct MetricScheme {
  enum class Variant { Inverse, Adjugate, BetaScaled };

  Variant variant = Variant::BetaScaled;
  int p = 2;
  int n = 2;
  Activation activation = Activation::S1;
  Anisotropy anisotropy = Anisotropy::HA;
  double beta_floor = 1e-3;

  static MetricScheme inverse() { return {Variant::Inverse}; }
  static MetricScheme adjugate() { return {Variant::Adjugate}; }
  static MetricScheme beta_scaled(int p = 2, int n = 2) {
    MetricScheme s;
    s.p = p;
    s.n = n;
    return s;
  }

  // Throws std::invalid_argument on p < 1, n < 1 or a nonpositive floor.
  void validate() const;
};

// The clamped scaling factor max(S(anisotropy(D)), beta_floor).
double beta_factor(const SpdTensor& d, const MetricScheme& scheme);

SpdTensor metric_from_tensor(const SpdTensor& d, const MetricScheme& scheme);

std::string to_string(Anisotropy a);
std::string to_string(Activation a);
std::string to_string(MetricScheme::Variant v);
Anisotropy parse_anisotropy(const std::string& s);
Activation parse_activation(const std::string& s);
MetricScheme::Variant parse_metric_variant(const std::string& s);

}  // namespace geotrack
