#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "thor2/colorspace.hpp"
#include "thor2/geometry.hpp"
#include "thor2/mapper_network.hpp"
#include "thor2/similarity.hpp"

namespace thor2::test
{

inline double Uniform(std::mt19937_64& rng, double lo, double hi)
{
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int UniformInt(std::mt19937_64& rng, int lo, int hi)
{
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline RgbColor RandomRgb(std::mt19937_64& rng)
{
  return {static_cast<std::uint8_t>(rng() & 0xFF), static_cast<std::uint8_t>((rng() >> 8) & 0xFF),
          static_cast<std::uint8_t>((rng() >> 16) & 0xFF)};
}

/// The stride-8 default network and its similarity matrix, built once.
inline const ColorNetwork& DefaultNetwork()
{
  static const ColorNetwork network = ColorNetwork::Build(MapperParams{});
  return network;
}

inline const SimilarityMatrix& DefaultDelta()
{
  static const SimilarityMatrix delta = SimilarityMatrix::FromNetwork(DefaultNetwork());
  return delta;
}

inline ColoredCloud MakeCloud(const std::vector<Eigen::Vector3d>& positions,
                              RgbColor color = {255, 0, 0})
{
  ColoredCloud c;
  for (const auto& p : positions)
  {
    c.points.push_back({p, color});
  }
  return c;
}

}  // namespace thor2::test
