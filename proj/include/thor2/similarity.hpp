#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Core>

#include "thor2/mapper_network.hpp"

namespace thor2
{

/// All-pairs minimum path weights over non-negative edge weights
/// (Floyd-Warshall). Disconnected pairs are +infinity, the diagonal is 0.
Eigen::MatrixXd MinWeightPaths(int n_vertices, std::span<const NetworkEdge> edges);

inline Eigen::MatrixXd MinWeightPaths(const ColorGraph& graph)
{
  return MinWeightPaths(graph.size(), graph.edges);
}

/// Region similarities 1 / (1 + l) over minimum path weights l; unreachable
/// pairs get 0.
class SimilarityMatrix
{
public:
  SimilarityMatrix(Eigen::MatrixXd delta, std::string network_hash);

  static SimilarityMatrix FromPaths(const Eigen::MatrixXd& path_weights,
                                    std::string network_hash);
  static SimilarityMatrix FromNetwork(const ColorNetwork& network);

  const Eigen::MatrixXd& delta() const { return delta_; }
  int size() const { return static_cast<int>(delta_.rows()); }
  double operator()(int i, int j) const { return delta_(i, j); }
  const std::string& network_hash() const { return network_hash_; }
  const std::string& content_hash() const { return content_hash_; }

  std::string Serialize() const;
  void Save(const std::filesystem::path& path) const;

  /// Parses and checks the binding to `network`; a mismatch throws
  /// HashMismatchError.
  static SimilarityMatrix Deserialize(const std::string& text, const ColorNetwork& network);
  static SimilarityMatrix Load(const std::filesystem::path& path, const ColorNetwork& network);

private:
  Eigen::MatrixXd delta_;
  std::string network_hash_;
  std::string content_hash_;
};

}  // namespace thor2
