#pragma once

#include "geotrack/spd.hpp"

#include <vector>

namespace geotrack {

// b-value plus unit gradient directions. Gradients are 2D for planar fields.
struct AcquisitionScheme {
  double b = 1500.0;
  double S0 = 1.0;
  std::vector<Vec> gradients;

  int dim() const { return gradients.empty() ? 0 : static_cast<int>(gradients.front().size()); }
  // Throws std::invalid_argument on b <= 0, S0 <= 0, mixed dimensions or
  // gradients that are not unit length within 1e-9.
  void validate() const;
};

}  // namespace geotrack
