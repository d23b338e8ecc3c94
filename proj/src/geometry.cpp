#include "thor2/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "thor2/errors.hpp"

namespace thor2
{

BoundingBox ComputeBoundingBox(const ColoredCloud& cloud)
{
  if (cloud.empty())
  {
    throw DataError("bounding box of an empty cloud");
  }
  BoundingBox box{cloud.points[0].position, cloud.points[0].position};
  for (const auto& p : cloud.points)
  {
    box.min = box.min.cwiseMin(p.position);
    box.max = box.max.cwiseMax(p.position);
  }
  return box;
}

ColoredCloud Scale(ColoredCloud cloud, double sigma_s)
{
  if (!(sigma_s > 0.0))
  {
    throw ConfigError("scale factor must be > 0");
  }
  for (auto& p : cloud.points)
  {
    p.position *= sigma_s;
  }
  return cloud;
}

ColoredCloud Rotate(ColoredCloud cloud, const Eigen::Matrix3d& rotation)
{
  for (auto& p : cloud.points)
  {
    p.position = rotation * p.position;
  }
  return cloud;
}

ColoredCloud ViewNormalize(ColoredCloud cloud)
{
  if (cloud.size() < 3)
  {
    throw DataError("degenerate cloud: fewer than 3 points");
  }
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points)
  {
    centroid += p.position;
  }
  centroid /= static_cast<double>(cloud.size());
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  for (auto& p : cloud.points)
  {
    p.position -= centroid;
    covariance += p.position * p.position.transpose();
  }
  covariance /= static_cast<double>(cloud.size());

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance);
  const Eigen::Vector3d values = solver.eigenvalues();  // ascending
  if (!(values(2) > 0.0) || values(1) <= 1e-12 * values(2))
  {
    throw DataError("degenerate cloud: covariance rank < 2");
  }
  Eigen::Matrix3d rotation;
  for (int axis = 0; axis < 3; ++axis)
  {
    Eigen::Vector3d v = solver.eigenvectors().col(2 - axis);
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    if (v(largest) < 0.0)
    {
      v = -v;
    }
    double third = 0.0;
    double scale = 0.0;
    for (const auto& p : cloud.points)
    {
      const double t = v.dot(p.position);
      third += t * t * t;
      scale += std::abs(t * t * t);
    }
    if (third < -1e-9 * scale)
    {
      v = -v;
    }
    rotation.row(axis) = v.transpose();
  }
  cloud = Rotate(std::move(cloud), rotation);
  cloud.frame = CloudFrame::kViewNormalized;
  return cloud;
}

ColoredCloud Align(ColoredCloud cloud, double alpha)
{
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Eigen::Matrix3d rotation;
  rotation << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  cloud = Rotate(std::move(cloud), rotation);
  cloud.frame = CloudFrame::kAligned;
  return cloud;
}

double AutoAlignAngle(const ColoredCloud& cloud)
{
  const Eigen::Vector3d extents = ComputeBoundingBox(cloud).Extents();
  // A quarter turn about y maps the x extent to the z extent.
  return extents.z() < extents.x() ? std::numbers::pi / 2.0 : 0.0;
}

ColoredCloud FlipForOcclusion(ColoredCloud cloud)
{
  for (auto& p : cloud.points)
  {
    p.position.x() = -p.position.x();
    p.position.y() = -p.position.y();
  }
  return cloud;
}

std::size_t Slice::PointCount() const
{
  std::size_t n = 0;
  for (const auto& s : strips)
  {
    n += s.points.size();
  }
  return n;
}

std::size_t SlicedCloud::PointCount() const
{
  std::size_t n = 0;
  for (const auto& s : slices)
  {
    n += s.PointCount();
  }
  return n;
}

std::size_t SlicedCloud::MaxStripCount() const
{
  std::size_t n = 0;
  for (const auto& s : slices)
  {
    n = std::max(n, s.strips.size());
  }
  return n;
}

namespace
{
std::size_t BinCount(double extent, double thickness)
{
  return static_cast<std::size_t>(std::floor(extent / thickness)) + 1;
}

std::size_t BinIndex(double offset, double thickness, std::size_t count)
{
  const auto raw = static_cast<std::size_t>(std::max(0.0, std::floor(offset / thickness)));
  return std::min(raw, count - 1);
}
}  // namespace

SlicedCloud SliceAndStrip(const ColoredCloud& cloud, double sigma1, double sigma2)
{
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
  {
    throw ConfigError("slice and strip thickness must be > 0");
  }
  const BoundingBox box = ComputeBoundingBox(cloud);
  SlicedCloud sliced;
  sliced.sigma1 = sigma1;
  sliced.sigma2 = sigma2;
  sliced.z_min = box.min.z();
  sliced.height = box.max.z() - box.min.z();

  const std::size_t n_slices = BinCount(sliced.height, sigma1);
  std::vector<std::vector<ColoredPoint>> slice_points(n_slices);
  for (const auto& p : cloud.points)
  {
    const std::size_t i = BinIndex(p.position.z() - sliced.z_min, sigma1, n_slices);
    ColoredPoint flat = p;
    flat.position.z() = static_cast<double>(i) * sigma1;
    slice_points[i].push_back(flat);
  }

  sliced.slices.resize(n_slices);
  for (std::size_t i = 0; i < n_slices; ++i)
  {
    const auto& pts = slice_points[i];
    Slice& slice = sliced.slices[i];
    if (pts.empty())
    {
      continue;
    }
    double x_min = pts[0].position.x();
    double x_max = x_min;
    for (const auto& p : pts)
    {
      x_min = std::min(x_min, p.position.x());
      x_max = std::max(x_max, p.position.x());
    }
    slice.x_min = x_min;
    slice.width = x_max - x_min;
    const std::size_t n_strips = BinCount(slice.width, sigma2);
    slice.strips.resize(n_strips);
    for (const auto& p : pts)
    {
      slice.strips[BinIndex(p.position.x() - x_min, sigma2, n_strips)].points.push_back(p);
    }
  }
  return sliced;
}

}  // namespace thor2
