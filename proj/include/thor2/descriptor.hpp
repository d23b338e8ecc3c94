#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "thor2/geometry.hpp"
#include "thor2/mapper_network.hpp"
#include "thor2/persistence.hpp"
#include "thor2/similarity.hpp"

namespace thor2
{

/// Region ids of a point color (soft: a color may belong to several).
using MembershipFn = std::function<std::vector<int>(const RgbColor&)>;

MembershipFn NetworkMembership(const ColorNetwork& network);

/// Soft region histogram of a strip: a point in k regions adds 1/k to each;
/// points without a region add nothing.
Eigen::VectorXd ColorVector(std::span<const ColoredPoint> strip, int n_c,
                            const MembershipFn& membership);

/// Strip color vectors stacked as rows in strip order and zero-padded to
/// n_s_max rows. Throws DataError("strip overflow") past n_s_max strips.
Eigen::MatrixXd ColorMatrix(const Slice& slice, int n_c, int n_s_max,
                            const MembershipFn& membership);

/// (C * delta)^T: the n_c x n_s_max color embedding of a slice.
Eigen::MatrixXd Embed(const Eigen::MatrixXd& color_matrix, const Eigen::MatrixXd& delta);

/// Persistence image of the slice's (x, y) points.
Eigen::MatrixXd SlicePersistenceImage(const Slice& slice, const PersistenceImageParams& params);

/// Fixed geometry of a descriptor; frozen from the training set.
struct DescriptorLayout
{
  int n_c = 0;
  int n_s_max = 0;
  int n_slices_max = 0;
  int pi_resolution = 8;

  int ShapeLength() const { return pi_resolution * pi_resolution; }
  int ColorLength() const { return n_c * n_s_max; }
  int TopsLength() const { return n_slices_max * ShapeLength(); }
  int Tops2Length() const { return n_slices_max * (ShapeLength() + ColorLength()); }

  friend bool operator==(const DescriptorLayout&, const DescriptorLayout&) = default;
};

/// TOPS: per-slice vectorized persistence images. TOPS2: per slice, the
/// persistence image followed by the column-major color embedding. Both are
/// zero-padded to n_slices_max blocks.
struct Descriptors
{
  Eigen::VectorXd tops;
  Eigen::VectorXd tops2;
};

Descriptors ComputeDescriptors(const SlicedCloud& cloud, const ColorNetwork& network,
                               const SimilarityMatrix& delta, const DescriptorLayout& layout,
                               const PersistenceImageParams& image);

/// Same, with an explicit membership and similarity (no network binding).
Descriptors ComputeDescriptors(const SlicedCloud& cloud, const MembershipFn& membership,
                               const Eigen::MatrixXd& delta, const DescriptorLayout& layout,
                               const PersistenceImageParams& image);

struct SlicingParams
{
  double sigma_s = 1.0;
  double sigma1 = 0.01;
  double sigma2 = 0.01;
  double alpha = 0.0;
  bool auto_alpha = false;
};

/// Scale, view-normalize, align and, for occluded objects, flip by pi about
/// z; then slice.
SlicedCloud PrepareCloud(const ColoredCloud& raw, const SlicingParams& params, bool occluded);

/// Digest binding descriptors to the network, similarity matrix, slicing,
/// image parameters and layout.
std::string DescriptorConfigHash(const std::string& network_hash, const std::string& delta_hash,
                                 const SlicingParams& slicing,
                                 const PersistenceImageParams& image,
                                 const DescriptorLayout& layout);

/// Per-object descriptor file: a fixed header followed by both flat arrays.
struct DescriptorFile
{
  std::string config_hash;
  DescriptorLayout layout;
  Descriptors descriptors;

  void Write(std::ostream& out) const;
  static DescriptorFile Read(std::istream& in);
  void Save(const std::filesystem::path& path) const;
  static DescriptorFile Load(const std::filesystem::path& path);
};

/// One row per strip: slice, strip, point count, then the color vector.
void WriteSliceDiagnostics(std::ostream& out, const SlicedCloud& cloud, int n_c,
                           const MembershipFn& membership);

}  // namespace thor2
