#include "geotrack/tensor4.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace geotrack {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("4th-order tensor dimension must be 2 or 3");
}

std::vector<IndexTuple> make_tuples(int dim) {
  std::vector<IndexTuple> out;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      for (int k = j; k < dim; ++k)
        for (int l = k; l < dim; ++l) out.push_back({i, j, k, l});
  return out;
}

int tuple_slot(int dim, IndexTuple t) {
  std::sort(t.begin(), t.end());
  const auto& tuples = Tensor4::index_tuples(dim);
  return static_cast<int>(std::lower_bound(tuples.begin(), tuples.end(), t) - tuples.begin());
}

double monomial(const IndexTuple& t, const Vec& g) { return g[t[0]] * g[t[1]] * g[t[2]] * g[t[3]]; }

}  // namespace

void AcquisitionScheme::validate() const {
  if (!(b > 0.0)) throw std::invalid_argument("b-value must be positive");
  if (!(S0 > 0.0)) throw std::invalid_argument("S0 must be positive");
  if (gradients.empty()) throw std::invalid_argument("acquisition scheme has no gradients");
  const auto d = gradients.front().size();
  for (const auto& g : gradients) {
    if (g.size() != d) throw std::invalid_argument("gradients have mixed dimensions");
    if (std::abs(g.norm() - 1.0) > 1e-9) throw std::invalid_argument("gradient directions must be unit vectors");
  }
}

Tensor4::Tensor4(int dim, std::span<const double> coeffs) : dim_(dim) {
  check_dim(dim);
  if (static_cast<int>(coeffs.size()) != unique_count(dim)) {
    throw std::invalid_argument("expected " + std::to_string(unique_count(dim)) + " coefficients");
  }
  std::copy(coeffs.begin(), coeffs.end(), coeffs_.begin());
}

Tensor4 Tensor4::zero(int dim) {
  check_dim(dim);
  const std::array<double, 15> z{};
  return Tensor4(dim, std::span<const double>(z.data(), unique_count(dim)));
}

const std::vector<IndexTuple>& Tensor4::index_tuples(int dim) {
  static const std::vector<IndexTuple> two = make_tuples(2);
  static const std::vector<IndexTuple> three = make_tuples(3);
  check_dim(dim);
  return dim == 2 ? two : three;
}

int Tensor4::multiplicity(const IndexTuple& t) {
  std::array<int, 3> counts{};
  for (int i : t) ++counts.at(i);
  int denom = 1;
  for (int c : counts)
    for (int f = 2; f <= c; ++f) denom *= f;
  return 24 / denom;
}

Tensor4 Tensor4::from_full(int dim, const std::function<double(int, int, int, int)>& entry) {
  check_dim(dim);
  std::array<double, 15> c{};
  const auto& tuples = index_tuples(dim);
  for (std::size_t s = 0; s < tuples.size(); ++s) {
    // Average over the distinct orderings of the tuple.
    IndexTuple perm = tuples[s];
    double sum = 0.0;
    int n = 0;
    do {
      sum += entry(perm[0], perm[1], perm[2], perm[3]);
      ++n;
    } while (std::next_permutation(perm.begin(), perm.end()));
    c[s] = sum / n;
  }
  return Tensor4(dim, std::span<const double>(c.data(), unique_count(dim)));
}

Tensor4 Tensor4::isotropic(int dim, double c) {
  return from_full(dim, [c](int i, int j, int k, int l) { return c * (i == j) * (k == l); });
}

Tensor4 Tensor4::squared_quadratic(const SpdTensor& d, double scale) {
  const Mat& m = d.matrix();
  return from_full(d.dim(), [&m, scale](int i, int j, int k, int l) { return scale * m(i, j) * m(k, l); });
}

double Tensor4::coefficient(int i, int j, int k, int l) const { return coeffs_[tuple_slot(dim_, {i, j, k, l})]; }

Tensor4 Tensor4::operator+(const Tensor4& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("Tensor4 dimension mismatch");
  Tensor4 out = *this;
  for (int s = 0; s < unique_count(dim_); ++s) out.coeffs_[s] += o.coeffs_[s];
  return out;
}

Tensor4 Tensor4::operator*(double s) const {
  Tensor4 out = *this;
  for (int i = 0; i < unique_count(dim_); ++i) out.coeffs_[i] *= s;
  return out;
}

double d_of_g(const Tensor4& t, const Vec& g) {
  if (g.size() != t.dim()) throw std::invalid_argument("d_of_g: direction dimension mismatch");
  const auto& tuples = Tensor4::index_tuples(t.dim());
  const auto c = t.coeffs();
  double sum = 0.0;
  for (std::size_t s = 0; s < tuples.size(); ++s) sum += Tensor4::multiplicity(tuples[s]) * c[s] * monomial(tuples[s], g);
  return sum;
}

Tensor4Fitter::Tensor4Fitter(const AcquisitionScheme& scheme) : dim_(scheme.dim()), b_(scheme.b), s0_(scheme.S0) {
  scheme.validate();
  check_dim(dim_);
  const auto& tuples = Tensor4::index_tuples(dim_);
  const auto rows = static_cast<Eigen::Index>(scheme.gradients.size());
  const auto cols = static_cast<Eigen::Index>(tuples.size());
  if (rows < cols) {
    throw std::invalid_argument("4th-order fit needs at least " + std::to_string(cols) + " gradients, got " +
                                std::to_string(rows));
  }
  Eigen::MatrixXd design(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      design(r, c) = Tensor4::multiplicity(tuples[c]) * monomial(tuples[c], scheme.gradients[r]);
  qr_.compute(design);
  if (qr_.rank() < cols) {
    throw std::invalid_argument("4th-order design matrix is rank deficient (rank " + std::to_string(qr_.rank()) +
                                " < " + std::to_string(cols) + "); gradients are not in general position");
  }
}

Tensor4 Tensor4Fitter::fit(std::span<const double> signals, double S0) const {
  if (static_cast<Eigen::Index>(signals.size()) != qr_.rows()) {
    throw std::invalid_argument("signal count does not match gradient count");
  }
  if (!(S0 > 0.0)) throw std::invalid_argument("S0 must be positive");
  Eigen::VectorXd y(qr_.rows());
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    const double s = signals[r];
    if (!(s > 0.0)) throw std::invalid_argument("nonpositive signal at gradient " + std::to_string(r));
    y[r] = (std::log(S0) - std::log(s)) / b_;
  }
  const Eigen::VectorXd x = qr_.solve(y);
  return Tensor4(dim_, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Tensor4 fit_tensor4(std::span<const double> signals, const AcquisitionScheme& scheme, double S0) {
  return Tensor4Fitter(scheme).fit(signals, S0);
}

Mat FlattenedTensor4::block(int a, int b) const { return matrix.block(a * dim, b * dim, dim, dim); }

FlattenedTensor4 flatten(const Tensor4& t) {
  const int d = t.dim();
  FlattenedTensor4 out{d, Eigen::MatrixXd(d * d, d * d)};
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.matrix(a * d + i, b * d + j) = t.coefficient(a, b, i, j);
  return out;
}

namespace {

SpdTensor clamp_block(const Mat& block, const char* name) {
  const auto e = eig_sym(block);
  const double tol = 1e-6 * std::abs(block.trace());
  const double min_eig = e.values[e.values.size() - 1];
  if (min_eig < -tol) {
    throw std::invalid_argument(std::string("diagonal component ") + name + " is not positive semidefinite (eigenvalue " +
                                std::to_string(min_eig) + ")");
  }
  Vec clamped = e.values.cwiseMax(1e-12);
  Mat m = e.vectors * clamped.asDiagonal() * e.vectors.transpose();
  return SpdTensor(m);
}

constexpr const char* kBlockNames[] = {"T_xx", "T_yy", "T_zz"};

}  // namespace

std::vector<SpdTensor> diagonal_components(const Tensor4& t) {
  const auto flat = flatten(t);
  std::vector<SpdTensor> out;
  for (int a = 0; a < t.dim(); ++a) out.push_back(clamp_block(flat.block(a, a), kBlockNames[a]));
  return out;
}

SpdTensor diagonal_sum(const Tensor4& t) {
  const auto flat = flatten(t);
  Mat sum = Mat::Zero(t.dim(), t.dim());
  for (int a = 0; a < t.dim(); ++a) sum += flat.block(a, a);
  return clamp_block(sum, "sum");
}

std::vector<Vec> odf_maxima(const Tensor4& t, double resolution_deg, double merge_deg) {
  if (!(resolution_deg > 0.0)) throw std::invalid_argument("odf grid resolution must be positive");
  const double deg = std::numbers::pi / 180.0;
  const double res = resolution_deg * deg;

  struct Candidate {
    double value;
    Vec dir;
  };
  std::vector<Candidate> peaks;

  if (t.dim() == 2) {
    const int n = static_cast<int>(std::lround(360.0 / resolution_deg));
    std::vector<double> f(n);
    std::vector<Vec> dirs(n);
    for (int j = 0; j < n; ++j) {
      dirs[j] = Vec{{std::cos(j * res), std::sin(j * res)}};
      f[j] = d_of_g(t, dirs[j]);
    }
    for (int j = 0; j < n; ++j) {
      if (f[j] >= f[(j + 1) % n] && f[j] >= f[(j + n - 1) % n]) peaks.push_back({f[j], dirs[j]});
    }
  } else {
    const int nt = static_cast<int>(std::lround(180.0 / resolution_deg));
    const int np = static_cast<int>(std::lround(360.0 / resolution_deg));
    std::vector<double> f(static_cast<std::size_t>(nt) * np);
    std::vector<Vec> dirs(f.size());
    for (int i = 0; i < nt; ++i) {
      const double theta = (i + 0.5) * res;
      for (int j = 0; j < np; ++j) {
        const double phi = j * res;
        Vec g{{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)}};
        f[i * np + j] = d_of_g(t, g);
        dirs[i * np + j] = g;
      }
    }
    for (int i = 0; i < nt; ++i) {
      for (int j = 0; j < np; ++j) {
        const double v = f[i * np + j];
        bool is_max = true;
        for (int di = -1; di <= 1 && is_max; ++di) {
          const int ii = i + di;
          if (ii < 0 || ii >= nt) continue;
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int jj = (j + dj + np) % np;
            if (f[ii * np + jj] > v) {
              is_max = false;
              break;
            }
          }
        }
        if (is_max) peaks.push_back({v, dirs[i * np + j]});
      }
    }
  }

  std::stable_sort(peaks.begin(), peaks.end(), [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  const double merge_cos = std::cos(merge_deg * deg);
  std::vector<Vec> out;
  for (const auto& p : peaks) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Vec& q) { return std::abs(q.dot(p.dir)) >= merge_cos; });
    if (!dup) out.push_back(p.dir);
  }
  return out;
}

std::vector<TensorField> diagonal_layers(const Tensor4Field& field4) {
  const int d = field4.dim();
  std::vector<std::vector<SpdTensor>> layers(d);
  for (auto& l : layers) l.reserve(field4.size());
  for (const auto& t : field4.data()) {
    auto comps = diagonal_components(t);
    for (int a = 0; a < d; ++a) layers[a].push_back(std::move(comps[a]));
  }
  std::vector<TensorField> out;
  for (auto& l : layers) out.emplace_back(field4.geometry(), std::move(l));
  return out;
}

CrossingResult track_crossing(const Tensor4Field& field4, std::span<const ConeSeed> seeds, const Box& target,
                              const TrackingParams& params, int threads) {
  if (field4.dim() != 2) throw std::invalid_argument("crossing reconstruction runs on planar (2D) fields");
  const auto layers = diagonal_layers(field4);
  return {point_to_region(layers[0], seeds, target, params, threads),
          point_to_region(layers[1], seeds, target, params, threads)};
}

}  // namespace geotrack
