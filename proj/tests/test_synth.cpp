#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "thor2/errors.hpp"
#include "thor2/ply.hpp"
#include "thor2/synth.hpp"

using namespace thor2;

TEST_CASE("unit box surface sample")
{
  ObjectSpec spec;
  spec.size.x = spec.size.y = spec.size.z = 1.0;
  const ColoredCloud box = GenerateObject(spec, 1000, 1);
  REQUIRE(box.size() == 1000u);
  for (const auto& p : box.points)
  {
    CHECK(p.color == RgbColor{255, 0, 0});
    CHECK(p.position.cwiseAbs().maxCoeff() == 0.5);
  }
  CHECK(ComputeBoundingBox(box).Extents() == Eigen::Vector3d(1, 1, 1));
}

TEST_CASE("sphere points lie on the sphere")
{
  ObjectSpec spec;
  spec.kind = ShapeKind::kSphere;
  spec.size.radius = 0.3;
  for (const auto& p : GenerateObject(spec, 500, 2).points)
  {
    CHECK(std::abs(p.position.norm() - 0.3) < 1e-9);
  }
}

TEST_CASE("two-tone cylinder has exactly two colors")
{
  ObjectSpec spec;
  spec.kind = ShapeKind::kCylinder;
  spec.scheme = ColorScheme::kTwoTone;
  std::set<std::uint32_t> colors;
  for (const auto& p : GenerateObject(spec, 800, 3).points)
  {
    colors.insert(p.color.Packed());
    const double r = std::hypot(p.position.x(), p.position.y());
    CHECK(r <= spec.size.radius + 1e-12);
    CHECK(std::abs(p.position.z()) <= spec.size.height / 2 + 1e-12);
  }
  CHECK(colors.size() == 2u);
}

TEST_CASE("L-shape samples stay on the union's surface")
{
  ObjectSpec spec;
  spec.kind = ShapeKind::kLShape;
  spec.scheme = ColorScheme::kStriped;
  spec.size.x = 0.1;
  spec.size.y = 0.03;
  spec.size.z = 0.07;
  spec.size.thickness = 0.03;
  const ColoredCloud c = GenerateObject(spec, 1000, 4);
  const Eigen::Vector3d offset(0.05, 0.015, 0.035);
  for (const auto& pt : c.points)
  {
    const Eigen::Vector3d p = pt.position + offset;
    const bool in_foot = p.x() > 1e-12 && p.x() < 0.1 - 1e-12 && p.y() > 1e-12 &&
                         p.y() < 0.03 - 1e-12 && p.z() > 1e-12 && p.z() < 0.03 - 1e-12;
    const bool in_upright = p.x() > 1e-12 && p.x() < 0.03 - 1e-12 && p.y() > 1e-12 &&
                            p.y() < 0.03 - 1e-12 && p.z() > 1e-12 && p.z() < 0.07 - 1e-12;
    CHECK_FALSE(in_foot);
    CHECK_FALSE(in_upright);
  }
  spec.size.thickness = 0.2;
  CHECK_THROWS_AS(GenerateObject(spec, 1000, 4), ConfigError);
}

TEST_CASE("generator validation and determinism")
{
  ObjectSpec spec;
  CHECK_THROWS_AS(GenerateObject(spec, 99, 1), ConfigError);
  spec.size.x = -1;
  CHECK_THROWS_AS(GenerateObject(spec, 100, 1), ConfigError);
  spec = ObjectSpec{};
  const ColoredCloud a = GenerateObject(spec, 300, 42);
  const ColoredCloud b = GenerateObject(spec, 300, 42);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    CHECK(a.points[i].position == b.points[i].position);
  }
  CHECK(ParseShapeKind("cylinder") == ShapeKind::kCylinder);
  CHECK_THROWS_AS(ParseColorScheme("plaid"), ConfigError);
}

TEST_CASE("views are isometric copies")
{
  ObjectSpec spec;
  spec.kind = ShapeKind::kLShape;
  spec.size.x = 0.1;
  spec.size.y = 0.03;
  spec.size.z = 0.07;
  const ColoredCloud object = GenerateObject(spec, 400, 5);
  const auto views = GenerateViews(object, 6, 11);
  REQUIRE(views.size() == 6u);
  std::mt19937_64 rng(1);
  for (const auto& v : views)
  {
    REQUIRE(v.size() == object.size());
    for (int t = 0; t < 100; ++t)
    {
      const std::size_t i = rng() % object.size();
      const std::size_t j = rng() % object.size();
      const double d0 = (object.points[i].position - object.points[j].position).norm();
      const double d1 = (v.points[i].position - v.points[j].position).norm();
      CHECK(std::abs(d0 - d1) < 1e-9);
    }
  }
  const Eigen::Matrix3d r = RandomRotation(3);
  CHECK((r * r.transpose()).isIdentity(1e-12));
  CHECK(r.determinant() == doctest::Approx(1.0));
  CHECK_THROWS_AS(GenerateViews(object, 0, 1), ConfigError);
}

TEST_CASE("occlusion by half-space truncation")
{
  ObjectSpec spec;
  spec.size.x = spec.size.y = spec.size.z = 1.0;
  const ColoredCloud box = GenerateObject(spec, 1000, 6);
  const ColoredCloud same = Occlude(box, 0.0, Eigen::Vector3d::UnitZ(), 0);
  CHECK(same.size() == box.size());

  const ColoredCloud half = Occlude(box, 0.5, Eigen::Vector3d::UnitZ(), 0);
  CHECK(half.size() == 500u);
  const double zext = ComputeBoundingBox(half).Extents().z();
  CHECK(zext > 0.4);
  CHECK(zext < 0.6);

  // Subset in original order, and the count is ceil((1 - f) n).
  const ColoredCloud cut = Occlude(box, 0.3, std::nullopt, 9);
  CHECK(cut.size() == 700u);
  std::size_t k = 0;
  for (const auto& p : box.points)
  {
    if (k < cut.size() && cut.points[k].position == p.position)
    {
      ++k;
    }
  }
  CHECK(k == cut.size());
  CHECK_THROWS_AS(Occlude(box, 0.95, std::nullopt, 1), DataError);
  CHECK_THROWS_AS(Occlude(box, 1.0, std::nullopt, 1), ConfigError);
}

TEST_CASE("benchmark layout and manifest round trip")
{
  const auto classes = DefaultBenchmarkClasses();
  CHECK(classes.size() == 8u);
  BenchmarkParams params;
  params.train_views = 2;
  params.test_views = 1;
  params.n_points = 200;
  const auto items = GenerateBenchmark(classes, params);
  CHECK(items.size() == 8u * (2 + 3));
  const auto dir = std::filesystem::temp_directory_path() / "thor2_test_bench";
  std::filesystem::remove_all(dir);
  WriteBenchmark(dir, items);
  const auto entries = ReadManifest(dir / "manifest.csv");
  REQUIRE(entries.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
  {
    CHECK(entries[i].label == items[i].label);
    CHECK(entries[i].split == items[i].split);
    CHECK(entries[i].occlusion == doctest::Approx(items[i].occlusion));
    const ColoredCloud c = LoadPly(entries[i].path);
    CHECK(c.size() == items[i].cloud.size());
  }
  std::filesystem::remove_all(dir);
}
