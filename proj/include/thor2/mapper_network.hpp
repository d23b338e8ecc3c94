#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thor2/colorspace.hpp"

namespace thor2
{

/// A grid sample of the sRGB cube with its CIELAB image.
struct ColorSample
{
  RgbColor rgb;
  LabColor lab;
};

/// Grid samples of the sRGB cube at the given channel stride; the last grid
/// value on each axis is clamped to 255. Samples are ordered with r slowest
/// and b fastest.
std::vector<ColorSample> SampleSrgbCube(int stride, const WhitePoint& white = kD65);

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;

  bool Contains(double v) const { return v >= lo && v <= hi; }
  double Length() const { return hi - lo; }
};

/// Equal-length intervals covering [min, max] where consecutive intervals
/// overlap by `gain_percent` of the interval length. A degenerate range
/// yields a single interval.
std::vector<Interval> CoverIntervals(double min, double max, int n, double gain_percent);

struct CoverSpec
{
  int n_intervals_chroma = 3;
  int n_intervals_hue = 8;
  double gain_chroma = 10.0;  ///< percent
  double gain_hue = 25.0;     ///< percent
};

struct CoverCell
{
  int chroma_index = 0;
  int hue_index = 0;
  Interval chroma;
  Interval hue;

  bool Contains(const LensPoint& p) const
  {
    return chroma.Contains(p.chroma) && hue.Contains(p.hue);
  }
};

struct Cover
{
  std::vector<Interval> chroma;
  std::vector<Interval> hue;
  std::vector<CoverCell> cells;  ///< chroma-major: index = c * hue.size() + h
};

Cover BuildCover(std::span<const LensPoint> lens_points, const CoverSpec& spec);

/// One Mapper cluster: a vertex of the color network.
struct ColorRegion
{
  int id = 0;
  std::vector<std::uint32_t> members;  ///< sorted sample indices
  LabColor mean;
  int chroma_index = 0;  ///< cover cell the cluster came from
  int hue_index = 0;
};

struct NetworkEdge
{
  int u = 0;  ///< u < v
  int v = 0;
  double weight = 0.0;
  bool cyclic = false;  ///< added to close the hue seam, not from overlap

  friend bool operator==(const NetworkEdge&, const NetworkEdge&) = default;
};

struct MapperParams
{
  int stride = 8;
  double xi = kDefaultHueOffset;
  CoverSpec cover;
  double dbscan_eps = 8.0;
  int dbscan_min_pts = 5;
  WhitePoint white = kD65;
};

/// Digest of everything that determines the network.
std::string MapperConfigHash(const MapperParams& params);

/// Regions plus the (weighted) 1-skeleton of their nerve.
struct ColorGraph
{
  std::vector<ColorRegion> regions;
  std::vector<NetworkEdge> edges;  ///< sorted by (u, v), unique

  int size() const { return static_cast<int>(regions.size()); }
  const NetworkEdge* FindEdge(int u, int v) const;
  std::size_t CyclicEdgeCount() const;
};

/// Mean CIELAB color of the given samples.
LabColor MeanColor(std::span<const ColorSample> samples,
                   std::span<const std::uint32_t> members);

/// Clusters each cell's preimage with HyAB DBSCAN; noise is dropped.
std::vector<ColorRegion> RefinePullback(std::span<const ColorSample> samples,
                                        std::span<const LensPoint> lens_points,
                                        const Cover& cover, double eps, int min_pts);

/// One vertex per region, an edge for every pair sharing a sample.
ColorGraph BuildNerve(std::vector<ColorRegion> regions);

/// Connects regions of the first and last hue interval within the same
/// chroma interval. No-op for fewer than two hue intervals.
ColorGraph CloseHueCycle(ColorGraph graph, int n_intervals_hue);

/// Removes regions whose member set is contained in another region's (exact
/// duplicates keep the lowest id), re-attaching their edges to the absorbing
/// region, then re-compacts ids.
ColorGraph EliminateRedundant(ColorGraph graph);

/// Sets every edge weight to the HyAB distance between region means.
ColorGraph AssignWeights(ColorGraph graph);

/// The finished color network with its sample grid and config digest.
class ColorNetwork
{
public:
  ColorNetwork(MapperParams params, ColorGraph graph);

  /// Runs the whole construction: sample, lens, cover, pullback, nerve, hue
  /// closure, redundancy elimination and weighting.
  static ColorNetwork Build(const MapperParams& params);

  /// Builds from caller-supplied samples (used for small toy color sets);
  /// the config hash additionally covers the sample colors.
  static ColorNetwork BuildFromSamples(const MapperParams& params,
                                       std::vector<ColorSample> samples);

  const MapperParams& params() const { return params_; }
  const std::string& config_hash() const { return config_hash_; }
  const std::vector<ColorSample>& samples() const { return samples_; }
  const ColorGraph& graph() const { return graph_; }
  const std::vector<ColorRegion>& regions() const { return graph_.regions; }
  const std::vector<NetworkEdge>& edges() const { return graph_.edges; }
  int size() const { return graph_.size(); }

  /// Digest of the config hash and the full network structure.
  const std::string& content_hash() const { return content_hash_; }

  /// Region ids of the grid sample nearest (HyAB) to `c`; ties go to the
  /// lowest sample index. Empty when that sample was DBSCAN noise.
  std::vector<int> Membership(const RgbColor& c) const;

  /// Sample index nearest to `c`.
  std::uint32_t NearestSample(const RgbColor& c) const;

  void Save(const std::filesystem::path& path) const;
  std::string Serialize() const;
  static ColorNetwork Load(const std::filesystem::path& path);
  static ColorNetwork Deserialize(const std::string& text);

private:
  ColorNetwork(MapperParams params, std::vector<ColorSample> samples, ColorGraph graph,
               std::string config_hash);
  void Index();

  MapperParams params_;
  std::vector<ColorSample> samples_;
  ColorGraph graph_;
  std::string config_hash_;
  std::string content_hash_;
  bool custom_samples_ = false;

  struct Lookup;
  std::shared_ptr<Lookup> lookup_;  ///< immutable index plus a guarded cache
};

}  // namespace thor2
