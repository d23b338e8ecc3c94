#pragma once

#include <span>
#include <vector>

#include "thor2/colorspace.hpp"

namespace thor2
{

inline constexpr int kNoise = -1;

struct DbscanResult
{
  std::vector<int> labels;  ///< cluster id per point, kNoise for noise
  int n_clusters = 0;
};

/// DBSCAN under the HyAB metric. A point is core when at least `min_pts`
/// points (itself included) lie within HyAB distance `eps`. Points are
/// visited in index order and border points join the first cluster that
/// reaches them, so the labeling is deterministic. `eps` may be +infinity.
DbscanResult Dbscan(std::span<const LabColor> points, double eps, int min_pts);

}  // namespace thor2
