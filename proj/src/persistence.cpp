#include "thor2/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace thor2
{

std::vector<double> SingleLinkageMergeHeights(std::span<const Eigen::Vector2d> points)
{
  // Prim's algorithm on the complete graph; O(n^2) is fine for slice sizes.
  const std::size_t n = points.size();
  std::vector<double> heights;
  if (n < 2)
  {
    return heights;
  }
  heights.reserve(n - 1);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in_tree(n, false);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t added = 1; added < n; ++added)
  {
    std::size_t next = n;
    double next_weight = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
    {
      if (in_tree[j])
      {
        continue;
      }
      const double d = (points[j] - points[current]).norm();
      if (d < best[j])
      {
        best[j] = d;
      }
      if (best[j] < next_weight)
      {
        next_weight = best[j];
        next = j;
      }
    }
    in_tree[next] = true;
    heights.push_back(next_weight);
    current = next;
  }
  std::sort(heights.begin(), heights.end());
  return heights;
}

std::vector<PersistencePair> ZeroDimensionalDiagram(std::span<const Eigen::Vector2d> points)
{
  std::vector<PersistencePair> diagram;
  if (points.empty())
  {
    return diagram;
  }
  for (const double h : SingleLinkageMergeHeights(points))
  {
    diagram.push_back({0.0, h});
  }
  double diameter = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    for (std::size_t j = i + 1; j < points.size(); ++j)
    {
      diameter = std::max(diameter, (points[i] - points[j]).norm());
    }
  }
  diagram.push_back({0.0, diameter});
  return diagram;
}

namespace
{
double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
}  // namespace

Eigen::MatrixXd PersistenceImage(std::span<const PersistencePair> diagram,
                                 const PersistenceImageParams& params)
{
  const int p = params.resolution;
  if (p < 1 || !(params.sigma > 0.0) || !(params.birth_max > params.birth_min) ||
      !(params.persistence_max > 0.0))
  {
    throw std::invalid_argument("invalid persistence image parameters");
  }
  Eigen::MatrixXd image = Eigen::MatrixXd::Zero(p, p);
  const double birth_step = (params.birth_max - params.birth_min) / p;
  const double pers_step = params.persistence_max / p;
  std::vector<double> birth_mass(p);
  std::vector<double> pers_mass(p);
  for (const PersistencePair& pair : diagram)
  {
    const double weight = pair.Persistence();
    if (weight <= 0.0)
    {
      continue;
    }
    for (int k = 0; k < p; ++k)
    {
      const double b0 = params.birth_min + k * birth_step;
      birth_mass[k] = NormalCdf((b0 + birth_step - pair.birth) / params.sigma) -
                      NormalCdf((b0 - pair.birth) / params.sigma);
      const double q0 = k * pers_step;
      pers_mass[k] = NormalCdf((q0 + pers_step - weight) / params.sigma) -
                     NormalCdf((q0 - weight) / params.sigma);
    }
    for (int r = 0; r < p; ++r)
    {
      for (int c = 0; c < p; ++c)
      {
        image(r, c) += weight * birth_mass[r] * pers_mass[c];
      }
    }
  }
  return image;
}

}  // namespace thor2
