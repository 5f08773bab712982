#ifndef ORBIPART_PARTITION_TYPES_HPP
#define ORBIPART_PARTITION_TYPES_HPP

#include <vector>

#include "orbipart/geometry.hpp"

namespace orbipart {

/// Interval partition of (0,pi) by cut angles 0 < a_1 < ... < a_{M-1} < pi.
/// Interval i is (cuts[i-1], cuts[i]) with the conventions a_0 = 0, a_M = pi.
struct IntervalPartition {
  SymmetryConfig cfg;
  int M = 0;
  std::vector<double> cuts;

  double lower(int i) const { return i == 0 ? 0.0 : cuts[i - 1]; }
  double upper(int i) const;
};

}  // namespace orbipart

#endif
