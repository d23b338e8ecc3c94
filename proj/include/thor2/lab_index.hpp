#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "thor2/colorspace.hpp"

namespace thor2
{

/// Uniform bucket grid over CIELAB for HyAB range and nearest-neighbor
/// queries. HyAB dominates the Chebyshev distance, so a Chebyshev box of
/// radius eps contains every HyAB eps-ball and the searches below are exact.
class LabGridIndex
{
public:
  /// Indexes `points`; query results are positions into that span. The span
  /// must outlive the index.
  LabGridIndex(std::span<const LabColor> points, double cell_size);

  /// All positions with Hyab(query, p) <= radius, ascending.
  std::vector<std::uint32_t> Within(const LabColor& query, double radius) const;

  /// Position of the HyAB-nearest point; ties go to the lowest position.
  std::uint32_t Nearest(const LabColor& query) const;

  std::size_t size() const { return points_.size(); }

private:
  struct CellKey
  {
    int l, a, b;
  };
  CellKey KeyOf(const LabColor& c) const;
  static std::int64_t Pack(int l, int a, int b);
  const std::vector<std::uint32_t>* Bucket(int l, int a, int b) const;

  std::span<const LabColor> points_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
  CellKey lo_{0, 0, 0};
  CellKey hi_{0, 0, 0};
};

}  // namespace thor2
