#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thor2/geometry.hpp"

namespace thor2
{

enum class ShapeKind
{
  kBox,
  kCylinder,
  kSphere,
  kLShape,
};

enum class ColorScheme
{
  kSolid,
  kTwoTone,  ///< lower and upper half along z
  kStriped,  ///< alternating bands along z
};

const char* ToString(ShapeKind kind);
const char* ToString(ColorScheme scheme);
ShapeKind ParseShapeKind(const std::string& text);
ColorScheme ParseColorScheme(const std::string& text);

/// Size parameters; which fields matter depends on the shape.
///   box:      x, y, z extents
///   cylinder: radius, height (axis along z)
///   sphere:   radius
///   L-shape:  x (foot length), y (depth), z (height), thickness of both arms
struct ShapeSize
{
  double x = 0.1;
  double y = 0.06;
  double z = 0.04;
  double radius = 0.03;
  double height = 0.1;
  double thickness = 0.03;
};

struct ObjectSpec
{
  ShapeKind kind = ShapeKind::kBox;
  ShapeSize size;
  ColorScheme scheme = ColorScheme::kSolid;
  RgbColor primary{255, 0, 0};
  RgbColor secondary{0, 0, 255};
  int stripes = 4;       ///< band count for the striped scheme
  double jitter = 0.0;   ///< std of optional isotropic Gaussian noise
};

/// Uniform, area-weighted surface sample of a primitive centered on the
/// origin. Throws ConfigError for invalid sizes or n_points < 100.
ColoredCloud GenerateObject(const ObjectSpec& spec, int n_points, std::uint64_t seed);

/// Uniformly distributed proper rotation.
Eigen::Matrix3d RandomRotation(std::uint64_t seed);

/// n_views copies of the cloud, each under its own random rotation.
std::vector<ColoredCloud> GenerateViews(const ColoredCloud& cloud, int n_views,
                                        std::uint64_t seed);

/// Keeps the ceil((1 - f) n) points with the smallest projection on `axis`
/// (original order preserved). With no axis a random unit direction is drawn
/// from the seed. Throws DataError when fewer than 100 points would remain.
ColoredCloud Occlude(const ColoredCloud& cloud, double fraction,
                     std::optional<Eigen::Vector3d> axis, std::uint64_t seed);

struct BenchmarkClass
{
  std::string label;
  ObjectSpec spec;
};

/// Four shapes times two color schemes sharing one palette, so that neither
/// shape nor color alone separates the classes.
std::vector<BenchmarkClass> DefaultBenchmarkClasses();

struct BenchmarkParams
{
  int train_views = 60;
  int test_views = 20;
  int n_points = 2000;
  std::vector<double> occlusions{0.0, 0.15, 0.30};
  /// Truncation direction, in the object's own frame unless
  /// occlusion_in_view_frame is set.
  Eigen::Vector3d occlusion_axis = -Eigen::Vector3d::UnitZ();  ///< keeps the top, drops the base
  bool occlusion_in_view_frame = false;
  std::uint64_t seed = 0;
};

struct BenchmarkItem
{
  std::string label;
  std::string split;  ///< "train" or "test"
  int view_id = 0;
  double occlusion = 0.0;
  ColoredCloud cloud;
};

/// Training views are unoccluded; every test view appears once per
/// occlusion fraction. Each view is a fresh object sample.
std::vector<BenchmarkItem> GenerateBenchmark(std::span<const BenchmarkClass> classes,
                                             const BenchmarkParams& params);

/// Writes one PLY per item plus manifest.csv (path,label,split,view_id,occlusion).
void WriteBenchmark(const std::filesystem::path& dir, std::span<const BenchmarkItem> items);

struct ManifestEntry
{
  std::filesystem::path path;
  std::string label;
  std::string split;
  int view_id = 0;
  double occlusion = 0.0;
};

/// Reads a manifest; relative paths resolve against the manifest directory.
std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path);

}  // namespace thor2
