#include "thor2/lab_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace thor2
{

LabGridIndex::LabGridIndex(std::span<const LabColor> points, double cell_size)
    : points_(points), cell_(cell_size)
{
  if (!(cell_size > 0.0) || !std::isfinite(cell_size))
  {
    throw std::invalid_argument("LabGridIndex: cell size must be positive and finite");
  }
  if (points.empty())
  {
    throw std::invalid_argument("LabGridIndex: no points");
  }
  lo_ = KeyOf(points[0]);
  hi_ = lo_;
  for (std::uint32_t i = 0; i < points.size(); ++i)
  {
    const CellKey k = KeyOf(points[i]);
    buckets_[Pack(k.l, k.a, k.b)].push_back(i);
    lo_ = {std::min(lo_.l, k.l), std::min(lo_.a, k.a), std::min(lo_.b, k.b)};
    hi_ = {std::max(hi_.l, k.l), std::max(hi_.a, k.a), std::max(hi_.b, k.b)};
  }
}

LabGridIndex::CellKey LabGridIndex::KeyOf(const LabColor& c) const
{
  return {static_cast<int>(std::floor(c.L / cell_)),
          static_cast<int>(std::floor(c.a / cell_)),
          static_cast<int>(std::floor(c.b / cell_))};
}

std::int64_t LabGridIndex::Pack(int l, int a, int b)
{
  constexpr std::int64_t kOffset = 1 << 20;
  return ((l + kOffset) << 42) | ((a + kOffset) << 21) | (b + kOffset);
}

const std::vector<std::uint32_t>* LabGridIndex::Bucket(int l, int a, int b) const
{
  const auto it = buckets_.find(Pack(l, a, b));
  return it == buckets_.end() ? nullptr : &it->second;
}

std::vector<std::uint32_t> LabGridIndex::Within(const LabColor& query, double radius) const
{
  std::vector<std::uint32_t> out;
  if (!std::isfinite(radius))
  {
    out.resize(points_.size());
    for (std::uint32_t i = 0; i < out.size(); ++i)
    {
      out[i] = i;
    }
    return out;
  }
  const CellKey lo = KeyOf({query.L - radius, query.a - radius, query.b - radius});
  const CellKey hi = KeyOf({query.L + radius, query.a + radius, query.b + radius});
  for (int l = std::max(lo.l, lo_.l); l <= std::min(hi.l, hi_.l); ++l)
  {
    for (int a = std::max(lo.a, lo_.a); a <= std::min(hi.a, hi_.a); ++a)
    {
      for (int b = std::max(lo.b, lo_.b); b <= std::min(hi.b, hi_.b); ++b)
      {
        if (const auto* bucket = Bucket(l, a, b))
        {
          for (const std::uint32_t i : *bucket)
          {
            if (Hyab(query, points_[i]) <= radius)
            {
              out.push_back(i);
            }
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint32_t LabGridIndex::Nearest(const LabColor& query) const
{
  const CellKey q = KeyOf(query);
  const int max_ring = std::max({std::abs(q.l - lo_.l), std::abs(q.l - hi_.l),
                                 std::abs(q.a - lo_.a), std::abs(q.a - hi_.a),
                                 std::abs(q.b - lo_.b), std::abs(q.b - hi_.b)});
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_index = std::numeric_limits<std::uint32_t>::max();
  auto visit = [&](int l, int a, int b) {
    if (const auto* bucket = Bucket(l, a, b))
    {
      for (const std::uint32_t i : *bucket)
      {
        const double d = Hyab(query, points_[i]);
        if (d < best || (d == best && i < best_index))
        {
          best = d;
          best_index = i;
        }
      }
    }
  };
  for (int ring = 0; ring <= max_ring; ++ring)
  {
    // Every point in ring k is at Chebyshev distance >= (k - 1) * cell.
    if (ring >= 1 && (ring - 1) * cell_ > best)
    {
      break;
    }
    for (int dl = -ring; dl <= ring; ++dl)
    {
      for (int da = -ring; da <= ring; ++da)
      {
        const bool on_shell = std::abs(dl) == ring || std::abs(da) == ring;
        if (on_shell)
        {
          for (int db = -ring; db <= ring; ++db)
          {
            visit(q.l + dl, q.a + da, q.b + db);
          }
        }
        else
        {
          visit(q.l + dl, q.a + da, q.b - ring);
          if (ring > 0)
          {
            visit(q.l + dl, q.a + da, q.b + ring);
          }
        }
      }
    }
  }
  return best_index;
}

}  // namespace thor2
