#include "thor2/similarity.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "thor2/errors.hpp"
#include "thor2/hashing.hpp"

namespace thor2
{

Eigen::MatrixXd MinWeightPaths(int n, std::span<const NetworkEdge> edges)
{
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd l = Eigen::MatrixXd::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i)
  {
    l(i, i) = 0.0;
  }
  for (const NetworkEdge& e : edges)
  {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n)
    {
      throw std::invalid_argument("MinWeightPaths: edge endpoint out of range");
    }
    if (!(e.weight >= 0.0))
    {
      throw std::invalid_argument("MinWeightPaths: negative edge weight");
    }
    if (e.weight < l(e.u, e.v))
    {
      l(e.u, e.v) = l(e.v, e.u) = e.weight;
    }
  }
  for (int k = 0; k < n; ++k)
  {
    for (int i = 0; i < n; ++i)
    {
      const double lik = l(i, k);
      if (lik == kInf)
      {
        continue;
      }
      for (int j = 0; j < n; ++j)
      {
        const double via = lik + l(k, j);
        if (via < l(i, j))
        {
          l(i, j) = via;
        }
      }
    }
  }
  return l;
}

namespace
{
std::string DeltaHash(const Eigen::MatrixXd& delta, const std::string& network_hash)
{
  Digest d;
  d.Add(std::string_view("thor2.delta.v1")).Add(network_hash).Add(std::int64_t{delta.rows()});
  d.Add(std::span<const double>(delta.data(), static_cast<std::size_t>(delta.size())));
  return d.Hex();
}

constexpr const char* kDeltaFormat = "thor2-similarity";
constexpr int kDeltaVersion = 1;
}  // namespace

SimilarityMatrix::SimilarityMatrix(Eigen::MatrixXd delta, std::string network_hash)
    : delta_(std::move(delta)), network_hash_(std::move(network_hash))
{
  if (delta_.rows() != delta_.cols())
  {
    throw std::invalid_argument("similarity matrix must be square");
  }
  content_hash_ = DeltaHash(delta_, network_hash_);
}

SimilarityMatrix SimilarityMatrix::FromPaths(const Eigen::MatrixXd& l, std::string network_hash)
{
  Eigen::MatrixXd delta(l.rows(), l.cols());
  for (Eigen::Index i = 0; i < l.rows(); ++i)
  {
    for (Eigen::Index j = 0; j < l.cols(); ++j)
    {
      delta(i, j) = std::isinf(l(i, j)) ? 0.0 : 1.0 / (1.0 + l(i, j));
    }
  }
  return SimilarityMatrix(std::move(delta), std::move(network_hash));
}

SimilarityMatrix SimilarityMatrix::FromNetwork(const ColorNetwork& network)
{
  return FromPaths(MinWeightPaths(network.graph()), network.content_hash());
}

std::string SimilarityMatrix::Serialize() const
{
  nlohmann::json doc;
  doc["format"] = kDeltaFormat;
  doc["version"] = kDeltaVersion;
  doc["n_c"] = size();
  doc["network_hash"] = network_hash_;
  doc["content_hash"] = content_hash_;
  auto& rows = doc["delta"] = nlohmann::json::array();
  for (int i = 0; i < size(); ++i)
  {
    std::vector<double> row(delta_.cols());
    for (int j = 0; j < size(); ++j)
    {
      row[j] = delta_(i, j);
    }
    rows.push_back(row);
  }
  return doc.dump() + "\n";
}

void SimilarityMatrix::Save(const std::filesystem::path& path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out << Serialize();
}

SimilarityMatrix SimilarityMatrix::Deserialize(const std::string& text,
                                               const ColorNetwork& network)
{
  try
  {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != kDeltaFormat || doc.at("version").get<int>() != kDeltaVersion)
    {
      throw DataError("similarity: not a similarity file or unsupported version");
    }
    const std::string bound = doc.at("network_hash").get<std::string>();
    if (bound != network.content_hash())
    {
      throw HashMismatchError("similarity matrix network", network.content_hash(), bound);
    }
    const int n = doc.at("n_c").get<int>();
    if (n != network.size())
    {
      throw DataError("similarity: dimension does not match the color network");
    }
    Eigen::MatrixXd delta(n, n);
    const auto& rows = doc.at("delta");
    if (static_cast<int>(rows.size()) != n)
    {
      throw DataError("similarity: row count mismatch");
    }
    for (int i = 0; i < n; ++i)
    {
      if (static_cast<int>(rows[i].size()) != n)
      {
        throw DataError("similarity: column count mismatch");
      }
      for (int j = 0; j < n; ++j)
      {
        delta(i, j) = rows[i][j].get<double>();
      }
    }
    SimilarityMatrix result(std::move(delta), bound);
    const std::string stored = doc.at("content_hash").get<std::string>();
    if (stored != result.content_hash())
    {
      throw HashMismatchError("similarity matrix content", result.content_hash(), stored);
    }
    return result;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(std::string("similarity: ") + e.what());
  }
}

SimilarityMatrix SimilarityMatrix::Load(const std::filesystem::path& path,
                                        const ColorNetwork& network)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw DataError("cannot read " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Deserialize(buffer.str(), network);
}

}  // namespace thor2
