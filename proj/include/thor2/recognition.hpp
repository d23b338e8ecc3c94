#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "thor2/descriptor.hpp"
#include "thor2/mlp.hpp"

namespace thor2
{

struct LabeledCloud
{
  ColoredCloud cloud;
  std::string label;
  bool occluded = false;
  std::string split;  ///< evaluation split name; empty means "all"
};

struct RecognitionConfig
{
  SlicingParams slicing;
  PersistenceImageParams image;
  MlpParams mlp;
  /// Extra slices and strips added to the training maxima when freezing the
  /// descriptor layout.
  int layout_margin = 1;
  /// Optional fixed label table; every label must have training examples.
  std::vector<std::string> labels;
};

enum class ModelSource
{
  kM1,  ///< shape-only classifier
  kM2,  ///< shape + color classifier
};

enum class FusionMode
{
  kFused,
  kM1Only,
  kM2Only,
};

const char* ToString(ModelSource source);
const char* ToString(FusionMode mode);
FusionMode ParseFusionMode(const std::string& text);

struct Prediction
{
  int label_index = -1;
  std::string label;
  double probability = 0.0;
  ModelSource source = ModelSource::kM2;
};

/// Max-probability fusion: the arg-max of whichever classifier has the larger
/// maximum, M2 on ties. Single-model modes return that model's arg-max.
Prediction FusePredictions(const Eigen::VectorXd& m1_probabilities,
                           const Eigen::VectorXd& m2_probabilities,
                           std::span<const std::string> labels,
                           FusionMode mode = FusionMode::kFused);

/// The two classifiers plus everything needed to reproduce their inputs.
class RecognitionModel
{
public:
  /// Trains M1 on TOPS and M2 on TOPS2 descriptors of unoccluded clouds.
  static RecognitionModel Train(std::span<const LabeledCloud> data, const ColorNetwork& network,
                                const SimilarityMatrix& delta, const RecognitionConfig& config);

  /// Descriptors of a raw cloud under this model's preprocessing; checks
  /// that the network and similarity matrix match the ones used in training.
  Descriptors Describe(const ColoredCloud& cloud, bool occluded, const ColorNetwork& network,
                       const SimilarityMatrix& delta) const;

  Prediction Predict(const ColoredCloud& cloud, bool occluded, const ColorNetwork& network,
                     const SimilarityMatrix& delta, FusionMode mode = FusionMode::kFused) const;

  Prediction PredictDescriptors(const Descriptors& descriptors,
                                FusionMode mode = FusionMode::kFused) const;

  const std::vector<std::string>& labels() const { return labels_; }
  const DescriptorLayout& layout() const { return layout_; }
  const SlicingParams& slicing() const { return slicing_; }
  const PersistenceImageParams& image() const { return image_; }
  const MlpParams& mlp_params() const { return mlp_params_; }
  const std::string& network_hash() const { return network_hash_; }
  const std::string& delta_hash() const { return delta_hash_; }
  /// Descriptor config hash the classifiers were trained under.
  const std::string& config_hash() const { return config_hash_; }
  const Mlp& m1() const { return m1_; }
  const Mlp& m2() const { return m2_; }

  void CheckArtifacts(const ColorNetwork& network, const SimilarityMatrix& delta) const;

  std::string Serialize() const;
  static RecognitionModel Deserialize(const std::string& bytes);
  void Save(const std::filesystem::path& path) const;
  static RecognitionModel Load(const std::filesystem::path& path);

private:
  std::vector<std::string> labels_;
  SlicingParams slicing_;
  PersistenceImageParams image_;
  MlpParams mlp_params_;
  DescriptorLayout layout_;
  std::string network_hash_;
  std::string delta_hash_;
  std::string config_hash_;
  Mlp m1_;
  Mlp m2_;
};

/// 8-bit instance map: pixel value is the instance id, 0 is background.
struct SegmentationMap
{
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< row-major

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  /// Reads a binary (P5) or plain (P2) 8-bit PGM.
  static SegmentationMap LoadPgm(const std::filesystem::path& path);
  void SavePgm(const std::filesystem::path& path) const;
};

/// True when a boundary pixel of the instance is 8-adjacent to another
/// instance or to the image border. Throws DataError for an empty mask.
bool DetectOcclusion(const SegmentationMap& map, int instance);

struct SplitAccuracy
{
  std::string split;
  std::size_t n = 0;
  std::size_t correct = 0;

  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
};

/// Accuracy per split (in first-seen order) followed by an "overall" entry.
std::vector<SplitAccuracy> Evaluate(std::span<const LabeledCloud> test,
                                    const RecognitionModel& model, const ColorNetwork& network,
                                    const SimilarityMatrix& delta,
                                    FusionMode mode = FusionMode::kFused);

/// Accuracy per split of precomputed predictions (label per test item).
std::vector<SplitAccuracy> ScorePredictions(std::span<const LabeledCloud> test,
                                            std::span<const std::string> predicted);

struct ReportRow
{
  std::string split;
  std::string seed;
  double accuracy = 0.0;
};

/// Per-seed rows followed by "mean" and "std" rows for every split. The
/// standard deviation is the population one over seeds.
std::vector<ReportRow> BuildReport(
    std::span<const std::pair<std::uint64_t, std::vector<SplitAccuracy>>> per_seed);

/// CSV with header `split,seed,accuracy`.
void WriteReportCsv(std::ostream& out, std::span<const ReportRow> rows);

}  // namespace thor2
