#include "geotrack/spd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geotrack {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("tensor dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

// Rebuilds R f(Λ) Rᵀ from a decomposition.
template <typename F>
Mat spectral_apply(const EigenDecomposition& e, F&& f) {
  Vec mapped(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) mapped[i] = f(e.values[i]);
  Mat out = e.vectors * mapped.asDiagonal() * e.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

SpdTensor::SpdTensor(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("tensor matrix must be square");
  check_dim(static_cast<int>(m.rows()));
  m_ = 0.5 * (m + m.transpose());
  if (!m_.allFinite()) throw std::invalid_argument("tensor has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Mat> solver(m_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("tensor is not positive definite (min eigenvalue " +
                                std::to_string(solver.eigenvalues().minCoeff()) + ")");
  }
}

SpdTensor SpdTensor::diagonal(std::initializer_list<double> values) {
  check_dim(static_cast<int>(values.size()));
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return SpdTensor(Mat(v.asDiagonal()));
}

SpdTensor SpdTensor::identity(int dim) {
  check_dim(dim);
  return SpdTensor(Mat::Identity(dim, dim));
}

SpdTensor SpdTensor::from_unique(int dim, std::span<const double> e) {
  check_dim(dim);
  if (static_cast<int>(e.size()) != unique_count(dim)) {
    throw std::invalid_argument("expected " + std::to_string(unique_count(dim)) + " unique entries");
  }
  Mat m(dim, dim);
  if (dim == 2) {
    m << e[0], e[1], e[1], e[2];
  } else {
    m << e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5];
  }
  return SpdTensor(m);
}

std::vector<double> SpdTensor::unique_entries() const {
  std::vector<double> out;
  out.reserve(unique_count(dim()));
  for (int i = 0; i < dim(); ++i)
    for (int j = i; j < dim(); ++j) out.push_back(m_(i, j));
  return out;
}

EigenDecomposition eig_sym(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetric);
  const auto n = symmetric.rows();
  EigenDecomposition out{Vec(n), Mat(n, n)};
  // Eigen sorts ascending.
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = solver.eigenvalues()[n - 1 - k];
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

EigenDecomposition eig_sym(const SpdTensor& t) { return eig_sym(t.matrix()); }

Vec principal_direction(const SpdTensor& t) { return eig_sym(t).vectors.col(0); }

Mat spd_log(const SpdTensor& t) {
  return spectral_apply(eig_sym(t), [](double l) { return std::log(l); });
}

SpdTensor sym_exp(const Mat& symmetric) {
  return SpdTensor(spectral_apply(eig_sym(symmetric), [](double l) { return std::exp(l); }));
}

SpdTensor spd_pow(const SpdTensor& t, double exponent) {
  return SpdTensor(spectral_apply(eig_sym(t), [exponent](double l) { return std::pow(l, exponent); }));
}

SpdTensor inverse(const SpdTensor& t) { return spd_pow(t, -1.0); }

double hilbert_anisotropy(const SpdTensor& t) {
  const auto e = eig_sym(t);
  return std::max(0.0, std::log(e.values[0] / e.values[e.values.size() - 1]));
}

double anisotropy_scalar(const SpdTensor& t, Anisotropy measure) {
  if (measure == Anisotropy::HA) return hilbert_anisotropy(t);
  const auto e = eig_sym(t);
  const double d = static_cast<double>(t.dim());
  const double md = e.values.sum() / d;
  if (measure == Anisotropy::MD) return md;
  const double dev2 = (e.values.array() - md).square().sum();
  if (measure == Anisotropy::FA) {
    return std::sqrt(d / (d - 1.0) * dev2 / e.values.squaredNorm());
  }
  return std::sqrt(dev2 / d) / md;  // RA
}

double activation(double x, Activation kind) {
  switch (kind) {
    case Activation::S1:
      return std::tanh(x);
    case Activation::S2:
      return 1.0 / (1.0 + std::exp(-0.5 * x));
    case Activation::S3:
      return x / std::sqrt(1.0 + x * x);
  }
  throw std::invalid_argument("unknown activation");
}

SpdTensor adjugate(const SpdTensor& t) {
  const auto e = eig_sym(t);
  const double det = e.values.prod();
  return SpdTensor(spectral_apply(e, [det](double l) { return det / l; }));
}

void MetricScheme::validate() const {
  if (variant != Variant::BetaScaled) return;
  if (p < 1) throw std::invalid_argument("beta-scaled metric requires p >= 1");
  if (n < 1) throw std::invalid_argument("beta-scaled metric requires n >= 1");
  if (!(beta_floor > 0.0)) throw std::invalid_argument("beta_floor must be positive");
}

double beta_factor(const SpdTensor& d, const MetricScheme& scheme) {
  return std::max(activation(anisotropy_scalar(d, scheme.anisotropy), scheme.activation), scheme.beta_floor);
}

SpdTensor metric_from_tensor(const SpdTensor& d, const MetricScheme& scheme) {
  switch (scheme.variant) {
    case MetricScheme::Variant::Inverse:
      return inverse(d);
    case MetricScheme::Variant::Adjugate:
      return adjugate(d);
    case MetricScheme::Variant::BetaScaled: {
      scheme.validate();
      const auto e = eig_sym(d);
      const double scale = std::pow(beta_factor(d, scheme), -scheme.p);
      const int n = scheme.n;
      return SpdTensor(spectral_apply(e, [scale, n](double l) { return scale * std::pow(l, -n); }));
    }
  }
  throw std::invalid_argument("unknown metric variant");
}

std::string to_string(Anisotropy a) {
  switch (a) {
    case Anisotropy::HA: return "HA";
    case Anisotropy::FA: return "FA";
    case Anisotropy::MD: return "MD";
    case Anisotropy::RA: return "RA";
  }
  return "?";
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::S1: return "S1";
    case Activation::S2: return "S2";
    case Activation::S3: return "S3";
  }
  return "?";
}

std::string to_string(MetricScheme::Variant v) {
  switch (v) {
    case MetricScheme::Variant::Inverse: return "inverse";
    case MetricScheme::Variant::Adjugate: return "adjugate";
    case MetricScheme::Variant::BetaScaled: return "beta";
  }
  return "?";
}

Anisotropy parse_anisotropy(const std::string& s) {
  if (s == "HA") return Anisotropy::HA;
  if (s == "FA") return Anisotropy::FA;
  if (s == "MD") return Anisotropy::MD;
  if (s == "RA") return Anisotropy::RA;
  throw std::invalid_argument("unknown anisotropy measure '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "S1") return Activation::S1;
  if (s == "S2") return Activation::S2;
  if (s == "S3") return Activation::S3;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

MetricScheme::Variant parse_metric_variant(const std::string& s) {
  if (s == "inverse") return MetricScheme::Variant::Inverse;
  if (s == "adjugate") return MetricScheme::Variant::Adjugate;
  if (s == "beta") return MetricScheme::Variant::BetaScaled;
  throw std::invalid_argument("unknown metric '" + s + "' (expected inverse, adjugate or beta)");
}

}  // namespace geotrack
