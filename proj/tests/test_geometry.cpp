#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "thor2/errors.hpp"
#include "thor2/geometry.hpp"
#include "thor2/ply.hpp"
#include "thor2/synth.hpp"

using namespace thor2;

namespace
{

ColoredCloud SkewedCloud(std::uint64_t seed, int n = 400)
{
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i)
  {
    // Exponential marginals: distinct variances and clearly non-zero skew.
    auto e = [&] { return -std::log(1.0 - test::Uniform(rng, 0, 1)); };
    pts.emplace_back(3.0 * e(), 1.5 * e(), 0.5 * e());
  }
  return test::MakeCloud(pts);
}

double MaxCoordinateDifference(const ColoredCloud& a, const ColoredCloud& b)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    worst = std::max(worst, (a.points[i].position - b.points[i].position).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("scale")
{
  const ColoredCloud cube = test::MakeCloud(
      {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  CHECK(MaxCoordinateDifference(Scale(cube, 1.0), cube) == 0.0);
  const auto e = ComputeBoundingBox(Scale(cube, 2.0)).Extents();
  CHECK(e == Eigen::Vector3d(2, 2, 2));
  const ColoredCloud skew = SkewedCloud(1);
  CHECK(ComputeBoundingBox(Scale(skew, 3.5)).Extents().isApprox(
      3.5 * ComputeBoundingBox(skew).Extents(), 1e-12));
  CHECK_THROWS_AS(Scale(cube, 0.0), ConfigError);
  CHECK_THROWS_AS(Scale(cube, -1.0), ConfigError);
}

TEST_CASE("view normalization of an axis-aligned box sorts extents")
{
  ObjectSpec spec;
  spec.kind = ShapeKind::kBox;
  spec.size.x = 0.02;
  spec.size.y = 0.09;
  spec.size.z = 0.05;
  const ColoredCloud box = GenerateObject(spec, 2000, 3);
  const ColoredCloud n = ViewNormalize(box);
  CHECK(n.frame == CloudFrame::kViewNormalized);
  const auto e = ComputeBoundingBox(n).Extents();
  CHECK(e.x() == doctest::Approx(0.09).epsilon(1e-3));
  CHECK(e.y() == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(e.z() == doctest::Approx(0.02).epsilon(1e-3));
}

TEST_CASE("view normalization is idempotent and rotation invariant")
{
  for (std::uint64_t seed = 0; seed < 10; ++seed)
  {
    const ColoredCloud cloud = SkewedCloud(seed);
    const ColoredCloud once = ViewNormalize(cloud);
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : once.points)
    {
      centroid += p.position;
    }
    CHECK(centroid.norm() / once.size() < 1e-12);
    CHECK(MaxCoordinateDifference(ViewNormalize(once), once) < 1e-6);
    const ColoredCloud rotated = Rotate(cloud, RandomRotation(100 + seed));
    CHECK(MaxCoordinateDifference(ViewNormalize(rotated), once) < 1e-6);
  }
}

TEST_CASE("view normalization rejects degenerate clouds")
{
  CHECK_THROWS_AS(ViewNormalize(test::MakeCloud({{0, 0, 0}, {1, 1, 1}})), DataError);
  CHECK_THROWS_AS(ViewNormalize(test::MakeCloud({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}})),
                  DataError);
  // Planar is fine (rank 2).
  CHECK_NOTHROW(ViewNormalize(test::MakeCloud({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 1, 0}})));
}

TEST_CASE("align rotates about y")
{
  const ColoredCloud p = test::MakeCloud({{1, 0, 0}, {0.3, -2, 5}});
  CHECK(MaxCoordinateDifference(Align(p, 0.0), p) == 0.0);
  const ColoredCloud q = Align(p, std::numbers::pi / 2);
  CHECK(q.frame == CloudFrame::kAligned);
  CHECK((q.points[0].position - Eigen::Vector3d(0, 0, -1)).norm() < 1e-15);
  CHECK(MaxCoordinateDifference(Align(p, 2 * std::numbers::pi), p) < 1e-9);
}

TEST_CASE("auto alignment picks the smaller x extent")
{
  const ColoredCloud wide = test::MakeCloud({{-2, 0, -1}, {2, 0, 1}, {0, 1, 0}});
  CHECK(AutoAlignAngle(wide) == std::numbers::pi / 2);
  const ColoredCloud tall = test::MakeCloud({{-1, 0, -2}, {1, 0, 2}, {0, 1, 0}});
  CHECK(AutoAlignAngle(tall) == 0.0);
}

TEST_CASE("occlusion flip is a half turn about z")
{
  const ColoredCloud p = test::MakeCloud({{1, 2, 3}});
  CHECK(FlipForOcclusion(p).points[0].position == Eigen::Vector3d(-1, -2, 3));
  const ColoredCloud s = SkewedCloud(4);
  CHECK(MaxCoordinateDifference(FlipForOcclusion(FlipForOcclusion(s)), s) == 0.0);
}

TEST_CASE("flip reverses strip order on a symmetric grid")
{
  // Strip j holds j + 1 points, centered in its bin so the grid is symmetric.
  std::vector<Eigen::Vector3d> pts;
  for (int j = 0; j < 5; ++j)
  {
    for (int k = 0; k <= j; ++k)
    {
      pts.emplace_back(2.0 * j, 0.1 * k, 0.0);
    }
  }
  const ColoredCloud cloud = test::MakeCloud(pts);
  const SlicedCloud a = SliceAndStrip(cloud, 1.0, 2.0);
  const SlicedCloud b = SliceAndStrip(FlipForOcclusion(cloud), 1.0, 2.0);
  REQUIRE(a.slices.size() == 1u);
  REQUIRE(a.slices[0].strips.size() == 5u);
  REQUIRE(b.slices[0].strips.size() == 5u);
  for (int j = 0; j < 5; ++j)
  {
    CHECK(a.slices[0].strips[j].points.size() == static_cast<std::size_t>(j + 1));
    CHECK(b.slices[0].strips[j].points.size() == a.slices[0].strips[4 - j].points.size());
  }
}

TEST_CASE("slicing examples")
{
  const SlicedCloud two = SliceAndStrip(test::MakeCloud({{0, 0, 0.1}, {0, 0, 1.1}, {0.5, 0, 0.2}}), 1.0, 1.0);
  REQUIRE(two.slices.size() == 2u);
  CHECK(two.slices[0].strips[0].points[0].position.z() == 0.0);
  CHECK(two.slices[1].strips[0].points[0].position.z() == 1.0);

  const SlicedCloud one = SliceAndStrip(test::MakeCloud({{0, 0, 0.1}, {1, 0, 0.3}, {0, 1, 0.9}}), 1.0, 5.0);
  CHECK(one.slices.size() == 1u);

  CHECK_THROWS_AS(SliceAndStrip(test::MakeCloud({{0, 0, 0}}), 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(SliceAndStrip(test::MakeCloud({{0, 0, 0}}), 1.0, -1.0), ConfigError);
}

TEST_CASE("grid cube slices match direct binning")
{
  std::vector<Eigen::Vector3d> pts;
  for (int x = 0; x < 10; ++x)
    for (int y = 0; y < 10; ++y)
      for (int z = 0; z < 10; ++z)
        pts.emplace_back(x, y, z);
  const SlicedCloud s = SliceAndStrip(test::MakeCloud(pts), 2.0, 2.0);
  REQUIRE(s.slices.size() == 5u);
  for (std::size_t i = 0; i < 5; ++i)
  {
    REQUIRE(s.slices[i].strips.size() == 5u);
    for (std::size_t j = 0; j < 5; ++j)
    {
      // Oracle: count grid points whose (z, x) fall in bin (i, j).
      std::size_t expected = 0;
      for (const auto& p : pts)
      {
        const auto zi = std::min<std::size_t>(static_cast<std::size_t>(p.z() / 2.0), 4);
        const auto xj = std::min<std::size_t>(static_cast<std::size_t>(p.x() / 2.0), 4);
        expected += zi == i && xj == j;
      }
      CHECK(expected == 40u);
      CHECK(s.slices[i].strips[j].points.size() == expected);
      for (const auto& p : s.slices[i].strips[j].points)
      {
        CHECK(p.position.z() == 2.0 * static_cast<double>(i));
      }
    }
  }
}

TEST_CASE("slicing partitions the cloud and is stable under top truncation")
{
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial)
  {
    std::vector<Eigen::Vector3d> pts;
    const int n = test::UniformInt(rng, 50, 300);
    for (int i = 0; i < n; ++i)
    {
      pts.emplace_back(test::Uniform(rng, -1, 1), test::Uniform(rng, -1, 1),
                       test::Uniform(rng, 0, 2));
    }
    const ColoredCloud cloud = test::MakeCloud(pts);
    const double s1 = test::Uniform(rng, 0.1, 0.5);
    const double s2 = test::Uniform(rng, 0.1, 0.5);
    const SlicedCloud full = SliceAndStrip(cloud, s1, s2);
    CHECK(full.PointCount() == cloud.size());

    const double z_cut = full.z_min + test::Uniform(rng, 0.3, 1.8);
    ColoredCloud cut;
    for (const auto& p : cloud.points)
    {
      if (p.position.z() < z_cut)
      {
        cut.points.push_back(p);
      }
    }
    const SlicedCloud part = SliceAndStrip(cut, s1, s2);
    const auto keep = static_cast<std::size_t>(std::floor((z_cut - full.z_min) / s1));
    for (std::size_t i = 0; i + 1 < keep && i < part.slices.size(); ++i)
    {
      const Slice& a = full.slices[i];
      const Slice& b = part.slices[i];
      REQUIRE(a.strips.size() == b.strips.size());
      CHECK(a.x_min == b.x_min);
      for (std::size_t j = 0; j < a.strips.size(); ++j)
      {
        REQUIRE(a.strips[j].points.size() == b.strips[j].points.size());
        for (std::size_t k = 0; k < a.strips[j].points.size(); ++k)
        {
          CHECK(a.strips[j].points[k].position == b.strips[j].points[k].position);
        }
      }
    }
  }
}

TEST_CASE("ascii PLY with extra properties and elements")
{
  std::istringstream in(
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\n"
      "property float z\nproperty float nx\nproperty uchar red\nproperty uchar green\n"
      "property uchar blue\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
      "0 0 0 1 255 0 0\n1 0 0 1 0 255 0\n0 1 0.5 1 0 0 255\n3 0 1 2\n");
  const ColoredCloud c = ReadPly(in);
  REQUIRE(c.size() == 3u);
  CHECK(c.points[1].color == RgbColor{0, 255, 0});
  CHECK(c.points[2].position == Eigen::Vector3d(0, 1, 0.5));
}

TEST_CASE("PLY errors")
{
  std::istringstream no_color(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n0 0 0\n");
  CHECK_THROWS_WITH_AS(ReadPly(no_color), doctest::Contains("missing color"), DataError);

  std::istringstream short_body(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
      "end_header\n0 0 0 1 2 3\n");
  CHECK_THROWS_AS(ReadPly(short_body), DataError);

  std::istringstream big_endian(
      "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
  CHECK_THROWS_AS(ReadPly(big_endian), DataError);

  std::istringstream bad_magic("plx\n");
  CHECK_THROWS_AS(ReadPly(bad_magic), DataError);
}

TEST_CASE("binary PLY round-trips bit-exactly")
{
  const ColoredCloud c = Rotate(SkewedCloud(9, 257), RandomRotation(3));
  std::stringstream buffer;
  WritePly(buffer, c);
  const ColoredCloud back = ReadPly(buffer);
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
  {
    CHECK(back.points[i].position == c.points[i].position);
    CHECK(back.points[i].color == c.points[i].color);
  }
  std::stringstream truncated(buffer.str().substr(0, buffer.str().size() - 5));
  CHECK_THROWS_AS(ReadPly(truncated), DataError);

  for (const PlyEncoding enc : {PlyEncoding::kAscii, PlyEncoding::kBinaryFloat})
  {
    std::stringstream b2;
    WritePly(b2, c, enc);
    const ColoredCloud r = ReadPly(b2);
    REQUIRE(r.size() == c.size());
    CHECK((r.points[5].position - c.points[5].position).norm() < 1e-5);
  }
}
