#pragma once

#include <vector>

#include <Eigen/Core>

#include "thor2/colorspace.hpp"

namespace thor2
{

struct ColoredPoint
{
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  RgbColor color;

  friend bool operator==(const ColoredPoint&, const ColoredPoint&) = default;
};

enum class CloudFrame
{
  kRaw,
  kViewNormalized,
  kAligned,
};

struct ColoredCloud
{
  std::vector<ColoredPoint> points;
  CloudFrame frame = CloudFrame::kRaw;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct BoundingBox
{
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  Eigen::Vector3d Extents() const { return max - min; }
};

BoundingBox ComputeBoundingBox(const ColoredCloud& cloud);

/// Multiplies all coordinates by `sigma_s` (> 0).
ColoredCloud Scale(ColoredCloud cloud, double sigma_s);

/// Centers the cloud on its centroid and rotates its principal axes onto
/// x, y, z in descending variance order. Each axis is oriented so the third
/// central moment along it is non-negative. Throws DataError when the
/// covariance has rank < 2.
ColoredCloud ViewNormalize(ColoredCloud cloud);

/// Right-handed rotation by `alpha` radians about the y axis.
ColoredCloud Align(ColoredCloud cloud, double alpha);

/// The alpha in {0, pi/2} giving the smaller bounding-box x extent (0 wins
/// ties).
double AutoAlignAngle(const ColoredCloud& cloud);

/// Rotation by pi about the z axis: (x, y, z) -> (-x, -y, z).
ColoredCloud FlipForOcclusion(ColoredCloud cloud);

/// Applies a rotation matrix to every point.
ColoredCloud Rotate(ColoredCloud cloud, const Eigen::Matrix3d& rotation);

struct Strip
{
  std::vector<ColoredPoint> points;
};

struct Slice
{
  double x_min = 0.0;
  double width = 0.0;  ///< x extent w of the slice
  std::vector<Strip> strips;

  std::size_t PointCount() const;
};

/// A cloud partitioned into z-slices of thickness sigma1 and, within each
/// slice, x-strips of thickness sigma2. Slice i holds z in
/// [z_min + i sigma1, z_min + (i + 1) sigma1) with z flattened to i sigma1,
/// so there are floor(h / sigma1) + 1 slices and a point at z_max opens its
/// own slice when h is a multiple of sigma1. Strips bin x from the slice's
/// own x_min the same way.
struct SlicedCloud
{
  std::vector<Slice> slices;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double z_min = 0.0;
  double height = 0.0;  ///< z extent h

  std::size_t PointCount() const;
  std::size_t MaxStripCount() const;
};

SlicedCloud SliceAndStrip(const ColoredCloud& cloud, double sigma1, double sigma2);

}  // namespace thor2
