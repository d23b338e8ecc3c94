#include "thor2/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "thor2/errors.hpp"
#include "thor2/parallel.hpp"
#include "thor2/ply.hpp"

namespace thor2
{
namespace
{

std::uint64_t SplitMix(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0)
{
  return SplitMix(SplitMix(SplitMix(SplitMix(seed) ^ a) ^ b) ^ c);
}

class Random
{
public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  /// [0, 1)
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Normal()
  {
    if (has_spare_)
    {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Axis-aligned box [lo, hi] sampled face by face.
struct BoxFaces
{
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;

  double Area() const
  {
    const Eigen::Vector3d e = hi - lo;
    return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.x() * e.z());
  }

  Eigen::Vector3d Sample(Random& rng) const
  {
    const Eigen::Vector3d e = hi - lo;
    const std::array<double, 3> face_area{e.y() * e.z(), e.x() * e.z(), e.x() * e.y()};
    const double total = face_area[0] + face_area[1] + face_area[2];
    double u = rng.Uniform() * total;
    int fixed = 2;
    for (int k = 0; k < 3; ++k)
    {
      if (u < face_area[static_cast<std::size_t>(k)])
      {
        fixed = k;
        break;
      }
      u -= face_area[static_cast<std::size_t>(k)];
    }
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k)
    {
      p(k) = lo(k) + rng.Uniform() * e(k);
    }
    p(fixed) = rng.Uniform() < 0.5 ? lo(fixed) : hi(fixed);
    return p;
  }

  bool StrictlyInside(const Eigen::Vector3d& p) const
  {
    return (p.array() > lo.array()).all() && (p.array() < hi.array()).all();
  }
};

void RequirePositive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
  {
    throw ConfigError(std::string("shape size '") + what + "' must be positive");
  }
}

std::vector<Eigen::Vector3d> SampleSurface(const ObjectSpec& spec, int n, Random& rng)
{
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(n));
  const ShapeSize& s = spec.size;
  switch (spec.kind)
  {
    case ShapeKind::kBox:
    {
      RequirePositive(s.x, "x");
      RequirePositive(s.y, "y");
      RequirePositive(s.z, "z");
      const Eigen::Vector3d half(s.x / 2.0, s.y / 2.0, s.z / 2.0);
      const BoxFaces box{-half, half};
      for (int i = 0; i < n; ++i)
      {
        out.push_back(box.Sample(rng));
      }
      break;
    }
    case ShapeKind::kCylinder:
    {
      RequirePositive(s.radius, "radius");
      RequirePositive(s.height, "height");
      const double side = 2.0 * std::numbers::pi * s.radius * s.height;
      const double cap = std::numbers::pi * s.radius * s.radius;
      for (int i = 0; i < n; ++i)
      {
        const double u = rng.Uniform() * (side + 2.0 * cap);
        const double theta = 2.0 * std::numbers::pi * rng.Uniform();
        if (u < side)
        {
          out.emplace_back(s.radius * std::cos(theta), s.radius * std::sin(theta),
                           (rng.Uniform() - 0.5) * s.height);
        }
        else
        {
          const double r = s.radius * std::sqrt(rng.Uniform());
          const double z = u < side + cap ? -s.height / 2.0 : s.height / 2.0;
          out.emplace_back(r * std::cos(theta), r * std::sin(theta), z);
        }
      }
      break;
    }
    case ShapeKind::kSphere:
    {
      RequirePositive(s.radius, "radius");
      for (int i = 0; i < n; ++i)
      {
        Eigen::Vector3d g;
        do
        {
          g = Eigen::Vector3d(rng.Normal(), rng.Normal(), rng.Normal());
        } while (g.norm() < 1e-12);
        out.push_back(s.radius * g.normalized());
      }
      break;
    }
    case ShapeKind::kLShape:
    {
      RequirePositive(s.x, "x");
      RequirePositive(s.y, "y");
      RequirePositive(s.z, "z");
      RequirePositive(s.thickness, "thickness");
      if (s.thickness >= s.x || s.thickness >= s.z)
      {
        throw ConfigError("L-shape thickness must be smaller than its length and height");
      }
      const BoxFaces foot{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(s.x, s.y, s.thickness)};
      const BoxFaces upright{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(s.thickness, s.y, s.z)};
      const double a_foot = foot.Area();
      const double a_up = upright.Area();
      // Rejecting samples inside the other box keeps the union's surface uniform.
      while (static_cast<int>(out.size()) < n)
      {
        const bool on_foot = rng.Uniform() * (a_foot + a_up) < a_foot;
        const Eigen::Vector3d p = on_foot ? foot.Sample(rng) : upright.Sample(rng);
        if ((on_foot ? upright : foot).StrictlyInside(p))
        {
          continue;
        }
        // The shared interface square lies on both boxes and is interior.
        if (on_foot && p.z() == s.thickness && p.x() < s.thickness)
        {
          continue;
        }
        if (!on_foot && p.x() == s.thickness && p.z() < s.thickness)
        {
          continue;
        }
        out.push_back(p);
      }
      const Eigen::Vector3d center(s.x / 2.0, s.y / 2.0, s.z / 2.0);
      for (auto& p : out)
      {
        p -= center;
      }
      break;
    }
  }
  return out;
}

RgbColor PaintPoint(const ObjectSpec& spec, double z, double z_min, double z_max)
{
  switch (spec.scheme)
  {
    case ColorScheme::kSolid: return spec.primary;
    case ColorScheme::kTwoTone: return z < 0.5 * (z_min + z_max) ? spec.primary : spec.secondary;
    case ColorScheme::kStriped:
    {
      const double band = (z_max - z_min) / spec.stripes;
      const int k = std::min(spec.stripes - 1, static_cast<int>((z - z_min) / band));
      return k % 2 == 0 ? spec.primary : spec.secondary;
    }
  }
  return spec.primary;
}

}  // namespace

const char* ToString(ShapeKind kind)
{
  switch (kind)
  {
    case ShapeKind::kBox: return "box";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kLShape: return "lshape";
  }
  return "box";
}

const char* ToString(ColorScheme scheme)
{
  switch (scheme)
  {
    case ColorScheme::kSolid: return "solid";
    case ColorScheme::kTwoTone: return "twotone";
    case ColorScheme::kStriped: return "striped";
  }
  return "solid";
}

ShapeKind ParseShapeKind(const std::string& text)
{
  if (text == "box") return ShapeKind::kBox;
  if (text == "cylinder") return ShapeKind::kCylinder;
  if (text == "sphere") return ShapeKind::kSphere;
  if (text == "lshape" || text == "L-shape") return ShapeKind::kLShape;
  throw ConfigError("unknown shape '" + text + "'");
}

ColorScheme ParseColorScheme(const std::string& text)
{
  if (text == "solid") return ColorScheme::kSolid;
  if (text == "twotone" || text == "two-tone") return ColorScheme::kTwoTone;
  if (text == "striped") return ColorScheme::kStriped;
  throw ConfigError("unknown color scheme '" + text + "'");
}

ColoredCloud GenerateObject(const ObjectSpec& spec, int n_points, std::uint64_t seed)
{
  if (n_points < 100)
  {
    throw ConfigError("objects need at least 100 points");
  }
  if (spec.scheme == ColorScheme::kStriped && spec.stripes < 1)
  {
    throw ConfigError("stripe count must be positive");
  }
  if (!(spec.jitter >= 0.0))
  {
    throw ConfigError("jitter must be non-negative");
  }
  Random rng(seed);
  std::vector<Eigen::Vector3d> positions = SampleSurface(spec, n_points, rng);
  double z_min = positions.front().z();
  double z_max = z_min;
  for (const auto& p : positions)
  {
    z_min = std::min(z_min, p.z());
    z_max = std::max(z_max, p.z());
  }
  ColoredCloud cloud;
  cloud.points.reserve(positions.size());
  for (const auto& p : positions)
  {
    cloud.points.push_back({p, PaintPoint(spec, p.z(), z_min, z_max)});
  }
  if (spec.jitter > 0.0)
  {
    for (auto& p : cloud.points)
    {
      p.position += spec.jitter * Eigen::Vector3d(rng.Normal(), rng.Normal(), rng.Normal());
    }
  }
  return cloud;
}

Eigen::Matrix3d RandomRotation(std::uint64_t seed)
{
  // Uniform unit quaternion.
  Random rng(seed);
  const double u1 = rng.Uniform();
  const double u2 = 2.0 * std::numbers::pi * rng.Uniform();
  const double u3 = 2.0 * std::numbers::pi * rng.Uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2),
                             b * std::sin(u3));
  return q.normalized().toRotationMatrix();
}

std::vector<ColoredCloud> GenerateViews(const ColoredCloud& cloud, int n_views,
                                        std::uint64_t seed)
{
  if (n_views < 1)
  {
    throw ConfigError("n_views must be at least 1");
  }
  std::vector<ColoredCloud> views;
  views.reserve(static_cast<std::size_t>(n_views));
  for (int v = 0; v < n_views; ++v)
  {
    views.push_back(Rotate(cloud, RandomRotation(MixSeed(seed, static_cast<std::uint64_t>(v)))));
  }
  return views;
}

ColoredCloud Occlude(const ColoredCloud& cloud, double fraction,
                     std::optional<Eigen::Vector3d> axis, std::uint64_t seed)
{
  if (!(fraction >= 0.0 && fraction < 1.0))
  {
    throw ConfigError("occlusion fraction must be in [0, 1)");
  }
  if (fraction == 0.0)
  {
    return cloud;
  }
  Eigen::Vector3d dir;
  if (axis)
  {
    if (!(axis->norm() > 0.0))
    {
      throw ConfigError("occlusion axis must be non-zero");
    }
    dir = axis->normalized();
  }
  else
  {
    Random rng(seed);
    do
    {
      dir = Eigen::Vector3d(rng.Normal(), rng.Normal(), rng.Normal());
    } while (dir.norm() < 1e-12);
    dir.normalize();
  }
  const std::size_t n = cloud.size();
  const auto keep = static_cast<std::size_t>(
      std::ceil((1.0 - fraction) * static_cast<double>(n) - 1e-9));
  if (keep < 100)
  {
    throw DataError("occlusion leaves fewer than 100 points");
  }
  std::vector<std::size_t> order(n);
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    order[i] = i;
    proj[i] = cloud.points[i].position.dot(dir);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });
  std::vector<char> kept(n, 0);
  for (std::size_t k = 0; k < keep; ++k)
  {
    kept[order[k]] = 1;
  }
  ColoredCloud out;
  out.frame = cloud.frame;
  out.points.reserve(keep);
  for (std::size_t i = 0; i < n; ++i)
  {
    if (kept[i])
    {
      out.points.push_back(cloud.points[i]);
    }
  }
  return out;
}

std::vector<BenchmarkClass> DefaultBenchmarkClasses()
{
  const RgbColor primary{200, 30, 30};
  const RgbColor secondary{30, 60, 200};
  std::vector<BenchmarkClass> classes;
  const std::array<ShapeKind, 4> kinds{ShapeKind::kBox, ShapeKind::kCylinder,
                                       ShapeKind::kSphere, ShapeKind::kLShape};
  for (const ShapeKind kind : kinds)
  {
    for (const ColorScheme scheme : {ColorScheme::kSolid, ColorScheme::kTwoTone})
    {
      ObjectSpec spec;
      spec.kind = kind;
      spec.scheme = scheme;
      spec.primary = primary;
      spec.secondary = secondary;
      switch (kind)
      {
        case ShapeKind::kBox: spec.size.x = 0.10, spec.size.y = 0.06, spec.size.z = 0.04; break;
        case ShapeKind::kCylinder: spec.size.radius = 0.03, spec.size.height = 0.10; break;
        case ShapeKind::kSphere: spec.size.radius = 0.04; break;
        case ShapeKind::kLShape:
          spec.size.x = 0.10, spec.size.y = 0.03, spec.size.z = 0.07, spec.size.thickness = 0.03;
          break;
      }
      classes.push_back({std::string(ToString(kind)) + "_" + ToString(scheme), spec});
    }
  }
  return classes;
}

std::vector<BenchmarkItem> GenerateBenchmark(std::span<const BenchmarkClass> classes,
                                             const BenchmarkParams& params)
{
  if (params.train_views < 0 || params.test_views < 0)
  {
    throw ConfigError("view counts must be non-negative");
  }
  struct Job
  {
    std::size_t cls;
    bool train;
    int view;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < classes.size(); ++c)
  {
    for (int v = 0; v < params.train_views; ++v)
    {
      jobs.push_back({c, true, v});
    }
    for (int v = 0; v < params.test_views; ++v)
    {
      jobs.push_back({c, false, v});
    }
  }
  const std::size_t per_test = params.occlusions.empty() ? 1 : params.occlusions.size();
  std::vector<std::vector<BenchmarkItem>> results(jobs.size());
  ParallelFor(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const std::uint64_t base =
        MixSeed(params.seed, job.cls + 1, job.train ? 1 : 2, static_cast<std::uint64_t>(job.view));
    const ColoredCloud object = GenerateObject(classes[job.cls].spec, params.n_points, base);
    const ColoredCloud view = Rotate(object, RandomRotation(SplitMix(base ^ 0x5151)));
    const std::string& label = classes[job.cls].label;
    if (job.train)
    {
      results[j].push_back({label, "train", job.view, 0.0, view});
      return;
    }
    const Eigen::Matrix3d rotation = RandomRotation(SplitMix(base ^ 0x5151));
    for (std::size_t k = 0; k < per_test; ++k)
    {
      const double f = params.occlusions.empty() ? 0.0 : params.occlusions[k];
      ColoredCloud occluded =
          params.occlusion_in_view_frame
              ? Occlude(view, f, params.occlusion_axis, base)
              : Rotate(Occlude(object, f, params.occlusion_axis, base), rotation);
      results[j].push_back({label, "test", job.view, f, std::move(occluded)});
    }
  });
  std::vector<BenchmarkItem> items;
  for (auto& r : results)
  {
    for (auto& item : r)
    {
      items.push_back(std::move(item));
    }
  }
  return items;
}

void WriteBenchmark(const std::filesystem::path& dir, std::span<const BenchmarkItem> items)
{
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest)
  {
    throw DataError("cannot write " + (dir / "manifest.csv").string());
  }
  manifest << "path,label,split,view_id,occlusion\n";
  std::vector<std::string> names(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
  {
    char name[64];
    std::snprintf(name, sizeof(name), "_%s_%03d_f%02d.ply", items[i].split.c_str(),
                  items[i].view_id, static_cast<int>(std::lround(items[i].occlusion * 100.0)));
    names[i] = items[i].label + name;
    char occ[32];
    std::snprintf(occ, sizeof(occ), "%.4f", items[i].occlusion);
    manifest << names[i] << ',' << items[i].label << ',' << items[i].split << ','
             << items[i].view_id << ',' << occ << '\n';
  }
  ParallelFor(items.size(), [&](std::size_t i) { SavePly(dir / names[i], items[i].cloud); });
}

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw DataError("cannot read manifest " + path.string());
  }
  const std::filesystem::path base = path.parent_path();
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r')
  {
    line.pop_back();
  }
  if (line != "path,label,split,view_id,occlusion")
  {
    throw DataError(path.string() + ":1: unexpected manifest header");
  }
  std::vector<ManifestEntry> entries;
  int line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
    {
      fields.push_back(field);
    }
    if (fields.size() != 5)
    {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.path = std::filesystem::path(fields[0]);
    if (e.path.is_relative())
    {
      e.path = base / e.path;
    }
    e.label = fields[1];
    e.split = fields[2];
    try
    {
      std::size_t used = 0;
      e.view_id = std::stoi(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("view_id");
      e.occlusion = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("occlusion");
    }
    catch (const std::logic_error&)
    {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace thor2
