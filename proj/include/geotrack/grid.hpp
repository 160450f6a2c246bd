#pragma once

#include "geotrack/spd.hpp"

#include <array>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace geotrack {

using Index3 = std::array<int, 3>;

// Regular voxel grid. Voxel (i,j,k) sits at origin + (i,j,k)·spacing; the
// physical domain is the closed box spanned by the voxel centers. For 2D
// grids the third axis is unused and held at size 1.
struct GridGeometry {
  int dim = 3;
  Index3 dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  static GridGeometry make(int dim, Index3 dims, std::array<double, 3> spacing = {1.0, 1.0, 1.0},
                           std::array<double, 3> origin = {0.0, 0.0, 0.0});

  void validate() const;
  std::size_t voxel_count() const;

  // Row-major: the last active axis varies fastest.
  std::size_t index(const Index3& ijk) const;
  Index3 unravel(std::size_t idx) const;

  Vec voxel_position(const Index3& ijk) const;
  Vec lower() const;
  Vec upper() const;
  bool contains(const Vec& pos) const;

  bool operator==(const GridGeometry&) const = default;
};

// Raised when a query point lies outside the grid. Trackers treat it as the
// end of the track.
class OutOfBounds : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

template <typename T>
class Field {
 public:
  Field(GridGeometry geometry, std::vector<T> data) : geometry_(std::move(geometry)), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.voxel_count()) {
      throw std::invalid_argument("field data length " + std::to_string(data_.size()) +
                                  " does not match grid voxel count " + std::to_string(geometry_.voxel_count()));
    }
    if constexpr (requires(const T& t) { t.dim(); }) {
      for (const auto& t : data_) {
        if (t.dim() != geometry_.dim) throw std::invalid_argument("voxel dimension does not match grid dimension");
      }
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  int dim() const { return geometry_.dim; }
  std::size_t size() const { return data_.size(); }
  const std::vector<T>& data() const { return data_; }
  const T& at(std::size_t idx) const { return data_.at(idx); }
  const T& at(const Index3& ijk) const { return data_.at(geometry_.index(ijk)); }

 private:
  GridGeometry geometry_;
  std::vector<T> data_;
};

using TensorField = Field<SpdTensor>;

}  // namespace geotrack
