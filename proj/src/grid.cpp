#include "geotrack/grid.hpp"

#include <string>

namespace geotrack {

GridGeometry GridGeometry::make(int dim, Index3 dims, std::array<double, 3> spacing, std::array<double, 3> origin) {
  GridGeometry g{dim, dims, spacing, origin};
  if (dim == 2) {
    g.dims[2] = 1;
    g.spacing[2] = 1.0;
    g.origin[2] = 0.0;
  }
  g.validate();
  return g;
}

void GridGeometry::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw std::invalid_argument("grid size must be >= 1 on every axis");
    if (!(spacing[a] > 0.0)) throw std::invalid_argument("grid spacing must be positive on every axis");
  }
  if (dim == 2 && dims[2] != 1) throw std::invalid_argument("2D grid must have dims[2] == 1");
}

std::size_t GridGeometry::voxel_count() const {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
}

std::size_t GridGeometry::index(const Index3& ijk) const {
  return (static_cast<std::size_t>(ijk[0]) * dims[1] + ijk[1]) * dims[2] + ijk[2];
}

Index3 GridGeometry::unravel(std::size_t idx) const {
  Index3 ijk{};
  ijk[2] = static_cast<int>(idx % dims[2]);
  idx /= dims[2];
  ijk[1] = static_cast<int>(idx % dims[1]);
  ijk[0] = static_cast<int>(idx / dims[1]);
  return ijk;
}

Vec GridGeometry::voxel_position(const Index3& ijk) const {
  Vec p(dim);
  for (int a = 0; a < dim; ++a) p[a] = origin[a] + ijk[a] * spacing[a];
  return p;
}

Vec GridGeometry::lower() const {
  Vec p(dim);
  for (int a = 0; a < dim; ++a) p[a] = origin[a];
  return p;
}

Vec GridGeometry::upper() const {
  Vec p(dim);
  for (int a = 0; a < dim; ++a) p[a] = origin[a] + (dims[a] - 1) * spacing[a];
  return p;
}

bool GridGeometry::contains(const Vec& pos) const {
  if (pos.size() != dim) return false;
  for (int a = 0; a < dim; ++a) {
    const double hi = origin[a] + (dims[a] - 1) * spacing[a];
    if (!(pos[a] >= origin[a] && pos[a] <= hi)) return false;
  }
  return true;
}

}  // namespace geotrack
