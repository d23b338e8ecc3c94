#include "thor2/descriptor.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "thor2/errors.hpp"
#include "thor2/hashing.hpp"

namespace thor2
{

MembershipFn NetworkMembership(const ColorNetwork& network)
{
  return [&network](const RgbColor& c) { return network.Membership(c); };
}

Eigen::VectorXd ColorVector(std::span<const ColoredPoint> strip, int n_c,
                            const MembershipFn& membership)
{
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n_c);
  for (const ColoredPoint& p : strip)
  {
    const std::vector<int> regions = membership(p.color);
    if (regions.empty())
    {
      continue;
    }
    const double share = 1.0 / static_cast<double>(regions.size());
    for (const int lambda : regions)
    {
      if (lambda < 0 || lambda >= n_c)
      {
        throw std::out_of_range("ColorVector: region id outside [0, n_c)");
      }
      phi(lambda) += share;
    }
  }
  return phi;
}

Eigen::MatrixXd ColorMatrix(const Slice& slice, int n_c, int n_s_max,
                            const MembershipFn& membership)
{
  if (static_cast<int>(slice.strips.size()) > n_s_max)
  {
    throw DataError("strip overflow: slice has " + std::to_string(slice.strips.size()) +
                    " strips, layout allows " + std::to_string(n_s_max));
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_s_max, n_c);
  for (std::size_t j = 0; j < slice.strips.size(); ++j)
  {
    c.row(static_cast<Eigen::Index>(j)) =
        ColorVector(slice.strips[j].points, n_c, membership).transpose();
  }
  return c;
}

Eigen::MatrixXd Embed(const Eigen::MatrixXd& color_matrix, const Eigen::MatrixXd& delta)
{
  if (color_matrix.cols() != delta.rows() || delta.rows() != delta.cols())
  {
    throw std::invalid_argument("Embed: color matrix has " +
                                std::to_string(color_matrix.cols()) +
                                " columns but the similarity matrix is " +
                                std::to_string(delta.rows()) + "x" +
                                std::to_string(delta.cols()));
  }
  return (color_matrix * delta).transpose();
}

Eigen::MatrixXd SlicePersistenceImage(const Slice& slice, const PersistenceImageParams& params)
{
  std::vector<Eigen::Vector2d> xy;
  xy.reserve(slice.PointCount());
  for (const Strip& strip : slice.strips)
  {
    for (const ColoredPoint& p : strip.points)
    {
      xy.emplace_back(p.position.x(), p.position.y());
    }
  }
  const auto diagram = ZeroDimensionalDiagram(xy);
  return PersistenceImage(diagram, params);
}

Descriptors ComputeDescriptors(const SlicedCloud& cloud, const MembershipFn& membership,
                               const Eigen::MatrixXd& delta, const DescriptorLayout& layout,
                               const PersistenceImageParams& image)
{
  if (image.resolution != layout.pi_resolution)
  {
    throw ConfigError("persistence image resolution does not match the descriptor layout");
  }
  if (delta.rows() != layout.n_c)
  {
    throw ConfigError("similarity matrix size does not match the descriptor layout");
  }
  if (static_cast<int>(cloud.slices.size()) > layout.n_slices_max)
  {
    throw DataError("slice overflow: object has " + std::to_string(cloud.slices.size()) +
                    " slices, layout allows " + std::to_string(layout.n_slices_max));
  }
  const int shape_len = layout.ShapeLength();
  const int color_len = layout.ColorLength();
  Descriptors out;
  out.tops = Eigen::VectorXd::Zero(layout.TopsLength());
  out.tops2 = Eigen::VectorXd::Zero(layout.Tops2Length());
  for (std::size_t i = 0; i < cloud.slices.size(); ++i)
  {
    const Slice& slice = cloud.slices[i];
    const Eigen::MatrixXd pi = SlicePersistenceImage(slice, image);
    const Eigen::MatrixXd e =
        Embed(ColorMatrix(slice, layout.n_c, layout.n_s_max, membership), delta);
    const auto tops_at = static_cast<Eigen::Index>(i) * shape_len;
    const auto tops2_at = static_cast<Eigen::Index>(i) * (shape_len + color_len);
    const Eigen::Map<const Eigen::VectorXd> pi_flat(pi.data(), shape_len);
    const Eigen::Map<const Eigen::VectorXd> e_flat(e.data(), color_len);
    out.tops.segment(tops_at, shape_len) = pi_flat;
    out.tops2.segment(tops2_at, shape_len) = pi_flat;
    out.tops2.segment(tops2_at + shape_len, color_len) = e_flat;
  }
  return out;
}

Descriptors ComputeDescriptors(const SlicedCloud& cloud, const ColorNetwork& network,
                               const SimilarityMatrix& delta, const DescriptorLayout& layout,
                               const PersistenceImageParams& image)
{
  if (delta.network_hash() != network.content_hash())
  {
    throw HashMismatchError("similarity matrix network", network.content_hash(),
                            delta.network_hash());
  }
  if (layout.n_c != network.size())
  {
    throw ConfigError("descriptor layout n_c does not match the color network");
  }
  return ComputeDescriptors(cloud, NetworkMembership(network), delta.delta(), layout, image);
}

SlicedCloud PrepareCloud(const ColoredCloud& raw, const SlicingParams& params, bool occluded)
{
  ColoredCloud cloud = ViewNormalize(Scale(raw, params.sigma_s));
  const double alpha = params.auto_alpha ? AutoAlignAngle(cloud) : params.alpha;
  cloud = Align(std::move(cloud), alpha);
  if (occluded)
  {
    cloud = FlipForOcclusion(std::move(cloud));
  }
  return SliceAndStrip(cloud, params.sigma1, params.sigma2);
}

std::string DescriptorConfigHash(const std::string& network_hash, const std::string& delta_hash,
                                 const SlicingParams& slicing,
                                 const PersistenceImageParams& image,
                                 const DescriptorLayout& layout)
{
  Digest d;
  d.Add(std::string_view("thor2.descriptor.v1"))
      .Add(network_hash)
      .Add(delta_hash)
      .Add(slicing.sigma_s)
      .Add(slicing.sigma1)
      .Add(slicing.sigma2)
      .Add(slicing.alpha)
      .Add(std::int64_t{slicing.auto_alpha})
      .Add(std::int64_t{image.resolution})
      .Add(image.sigma)
      .Add(image.birth_min)
      .Add(image.birth_max)
      .Add(image.persistence_max)
      .Add(std::int64_t{layout.n_c})
      .Add(std::int64_t{layout.n_s_max})
      .Add(std::int64_t{layout.n_slices_max})
      .Add(std::int64_t{layout.pi_resolution});
  return d.Hex();
}

namespace
{
constexpr char kDescriptorMagic[8] = {'T', 'H', 'O', 'R', '2', 'D', 'S', 'C'};
constexpr std::uint32_t kDescriptorVersion = 1;

template <typename T>
void Put(std::ostream& out, const T& value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T Get(std::istream& in, const char* what)
{
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
  {
    throw DataError(std::string("descriptor file truncated reading ") + what);
  }
  return value;
}
}  // namespace

void DescriptorFile::Write(std::ostream& out) const
{
  if (config_hash.size() != 64)
  {
    throw std::invalid_argument("descriptor config hash must be a SHA-256 hex digest");
  }
  out.write(kDescriptorMagic, sizeof(kDescriptorMagic));
  Put(out, kDescriptorVersion);
  out.write(config_hash.data(), 64);
  Put(out, std::int32_t{layout.n_c});
  Put(out, std::int32_t{layout.pi_resolution});
  Put(out, std::int32_t{layout.n_s_max});
  Put(out, std::int32_t{layout.n_slices_max});
  Put(out, static_cast<std::uint64_t>(descriptors.tops.size()));
  Put(out, static_cast<std::uint64_t>(descriptors.tops2.size()));
  out.write(reinterpret_cast<const char*>(descriptors.tops.data()),
            static_cast<std::streamsize>(descriptors.tops.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(descriptors.tops2.data()),
            static_cast<std::streamsize>(descriptors.tops2.size() * sizeof(double)));
}

DescriptorFile DescriptorFile::Read(std::istream& in)
{
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kDescriptorMagic, 8) != 0)
  {
    throw DataError("not a descriptor file");
  }
  if (Get<std::uint32_t>(in, "version") != kDescriptorVersion)
  {
    throw DataError("unsupported descriptor file version");
  }
  DescriptorFile file;
  file.config_hash.resize(64);
  if (!in.read(file.config_hash.data(), 64))
  {
    throw DataError("descriptor file truncated reading config hash");
  }
  file.layout.n_c = Get<std::int32_t>(in, "n_c");
  file.layout.pi_resolution = Get<std::int32_t>(in, "p");
  file.layout.n_s_max = Get<std::int32_t>(in, "n_s_max");
  file.layout.n_slices_max = Get<std::int32_t>(in, "n_slices_max");
  const auto tops_len = Get<std::uint64_t>(in, "TOPS length");
  const auto tops2_len = Get<std::uint64_t>(in, "TOPS2 length");
  if (tops_len != static_cast<std::uint64_t>(file.layout.TopsLength()) ||
      tops2_len != static_cast<std::uint64_t>(file.layout.Tops2Length()))
  {
    throw DataError("descriptor lengths disagree with the declared layout");
  }
  file.descriptors.tops.resize(static_cast<Eigen::Index>(tops_len));
  file.descriptors.tops2.resize(static_cast<Eigen::Index>(tops2_len));
  if (!in.read(reinterpret_cast<char*>(file.descriptors.tops.data()),
               static_cast<std::streamsize>(tops_len * sizeof(double))) ||
      !in.read(reinterpret_cast<char*>(file.descriptors.tops2.data()),
               static_cast<std::streamsize>(tops2_len * sizeof(double))))
  {
    throw DataError("descriptor file truncated in data");
  }
  return file;
}

void DescriptorFile::Save(const std::filesystem::path& path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  Write(out);
}

DescriptorFile DescriptorFile::Load(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw DataError("cannot read " + path.string());
  }
  return Read(in);
}

void WriteSliceDiagnostics(std::ostream& out, const SlicedCloud& cloud, int n_c,
                           const MembershipFn& membership)
{
  out << "slice,strip,points";
  for (int k = 0; k < n_c; ++k)
  {
    out << ",phi_" << k;
  }
  out << '\n';
  for (std::size_t i = 0; i < cloud.slices.size(); ++i)
  {
    const Slice& slice = cloud.slices[i];
    for (std::size_t j = 0; j < slice.strips.size(); ++j)
    {
      const auto& points = slice.strips[j].points;
      const Eigen::VectorXd phi = ColorVector(points, n_c, membership);
      out << i << ',' << j << ',' << points.size();
      for (int k = 0; k < n_c; ++k)
      {
        out << ',' << phi(k);
      }
      out << '\n';
    }
  }
}

}  // namespace thor2
