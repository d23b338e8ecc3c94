#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace thor2
{

struct PersistencePair
{
  double birth = 0.0;
  double death = 0.0;

  double Persistence() const { return death - birth; }
};

/// Single-linkage merge heights of a planar point set (the edge weights of a
/// Euclidean minimum spanning tree), ascending. n points give n - 1 heights.
std::vector<double> SingleLinkageMergeHeights(std::span<const Eigen::Vector2d> points);

/// 0-dimensional persistence diagram of the Vietoris-Rips filtration: every
/// point is born at 0, one component dies at each merge height, and the last
/// surviving component is closed off at the point-set diameter. Empty input
/// yields an empty diagram.
std::vector<PersistencePair> ZeroDimensionalDiagram(std::span<const Eigen::Vector2d> points);

struct PersistenceImageParams
{
  int resolution = 8;            ///< p; the image is p x p
  double sigma = 0.005;          ///< Gaussian spread
  double birth_min = -0.05;
  double birth_max = 0.05;
  double persistence_max = 0.1;  ///< persistence axis spans [0, persistence_max]
};

/// Persistence image: each pair contributes a Gaussian centered at
/// (birth, persistence), weighted linearly by its persistence and integrated
/// over each pixel. Rows index birth, columns index persistence.
Eigen::MatrixXd PersistenceImage(std::span<const PersistencePair> diagram,
                                 const PersistenceImageParams& params);

}  // namespace thor2
