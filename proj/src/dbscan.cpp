#include "thor2/dbscan.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "thor2/lab_index.hpp"

namespace thor2
{

DbscanResult Dbscan(std::span<const LabColor> points, double eps, int min_pts)
{
  if (!(eps > 0.0))
  {
    throw std::invalid_argument("dbscan: eps must be > 0");
  }
  if (min_pts < 1)
  {
    throw std::invalid_argument("dbscan: min_pts must be >= 1");
  }
  DbscanResult result;
  result.labels.assign(points.size(), kNoise);
  if (points.empty())
  {
    return result;
  }

  std::optional<LabGridIndex> index;
  if (std::isfinite(eps))
  {
    index.emplace(points, eps);
  }
  auto neighbors = [&](std::size_t i) {
    if (index)
    {
      return index->Within(points[i], eps);
    }
    std::vector<std::uint32_t> all(points.size());
    for (std::uint32_t k = 0; k < all.size(); ++k)
    {
      all[k] = k;
    }
    return all;
  };

  constexpr int kUnvisited = -2;
  std::vector<int>& labels = result.labels;
  labels.assign(points.size(), kUnvisited);
  std::vector<std::uint32_t> frontier;
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    if (labels[i] != kUnvisited)
    {
      continue;
    }
    const auto seeds = neighbors(i);
    if (static_cast<int>(seeds.size()) < min_pts)
    {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = result.n_clusters++;
    labels[i] = cluster;
    frontier.assign(seeds.begin(), seeds.end());
    for (std::size_t f = 0; f < frontier.size(); ++f)
    {
      const std::uint32_t j = frontier[f];
      if (labels[j] == kNoise)
      {
        labels[j] = cluster;  // border point
        continue;
      }
      if (labels[j] != kUnvisited)
      {
        continue;
      }
      labels[j] = cluster;
      const auto reach = neighbors(j);
      if (static_cast<int>(reach.size()) >= min_pts)
      {
        for (const std::uint32_t k : reach)
        {
          if (labels[k] == kUnvisited || labels[k] == kNoise)
          {
            frontier.push_back(k);
          }
        }
      }
    }
  }
  return result;
}

}  // namespace thor2
