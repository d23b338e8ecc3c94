#include "thor2/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "thor2/errors.hpp"
#include "thor2/parallel.hpp"

namespace thor2
{

const char* ToString(ModelSource source) { return source == ModelSource::kM1 ? "m1" : "m2"; }

const char* ToString(FusionMode mode)
{
  switch (mode)
  {
    case FusionMode::kFused: return "fused";
    case FusionMode::kM1Only: return "m1";
    case FusionMode::kM2Only: return "m2";
  }
  return "fused";
}

FusionMode ParseFusionMode(const std::string& text)
{
  if (text == "fused") return FusionMode::kFused;
  if (text == "m1") return FusionMode::kM1Only;
  if (text == "m2") return FusionMode::kM2Only;
  throw ConfigError("unknown model mode '" + text + "' (expected m1, m2 or fused)");
}

Prediction FusePredictions(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2,
                           std::span<const std::string> labels, FusionMode mode)
{
  if (p1.size() != p2.size() || p1.size() != static_cast<Eigen::Index>(labels.size()) ||
      labels.empty())
  {
    throw std::invalid_argument("FusePredictions: probability vectors and labels disagree");
  }
  Eigen::Index i1 = 0;
  Eigen::Index i2 = 0;
  const double max1 = p1.maxCoeff(&i1);
  const double max2 = p2.maxCoeff(&i2);
  bool use_m1 = false;
  switch (mode)
  {
    case FusionMode::kFused: use_m1 = max1 > max2; break;
    case FusionMode::kM1Only: use_m1 = true; break;
    case FusionMode::kM2Only: use_m1 = false; break;
  }
  Prediction p;
  p.label_index = static_cast<int>(use_m1 ? i1 : i2);
  p.label = labels[static_cast<std::size_t>(p.label_index)];
  p.probability = use_m1 ? max1 : max2;
  p.source = use_m1 ? ModelSource::kM1 : ModelSource::kM2;
  return p;
}

RecognitionModel RecognitionModel::Train(std::span<const LabeledCloud> data,
                                         const ColorNetwork& network,
                                         const SimilarityMatrix& delta,
                                         const RecognitionConfig& config)
{
  if (data.empty())
  {
    throw DataError("training set is empty");
  }
  if (delta.network_hash() != network.content_hash())
  {
    throw HashMismatchError("similarity matrix network", network.content_hash(),
                            delta.network_hash());
  }
  RecognitionModel model;
  if (config.labels.empty())
  {
    std::set<std::string> unique;
    for (const auto& item : data)
    {
      unique.insert(item.label);
    }
    model.labels_.assign(unique.begin(), unique.end());
  }
  else
  {
    model.labels_ = config.labels;
  }
  if (model.labels_.size() < 2)
  {
    throw DataError("training needs at least two classes");
  }
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < model.labels_.size(); ++k)
  {
    if (!index.emplace(model.labels_[k], static_cast<int>(k)).second)
    {
      throw ConfigError("duplicate label '" + model.labels_[k] + "'");
    }
  }
  std::vector<int> targets(data.size());
  std::vector<int> per_class(model.labels_.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    if (data[i].occluded)
    {
      throw DataError("training data must be unoccluded");
    }
    const auto it = index.find(data[i].label);
    if (it == index.end())
    {
      throw DataError("training label '" + data[i].label + "' missing from the label table");
    }
    targets[i] = it->second;
    ++per_class[static_cast<std::size_t>(it->second)];
  }
  for (std::size_t k = 0; k < per_class.size(); ++k)
  {
    if (per_class[k] == 0)
    {
      throw DataError("empty class '" + model.labels_[k] + "'");
    }
  }

  model.slicing_ = config.slicing;
  model.image_ = config.image;
  model.mlp_params_ = config.mlp;
  model.network_hash_ = network.content_hash();
  model.delta_hash_ = delta.content_hash();

  std::vector<SlicedCloud> sliced(data.size());
  ParallelFor(data.size(), [&](std::size_t i) {
    sliced[i] = PrepareCloud(data[i].cloud, config.slicing, false);
  });
  std::size_t max_slices = 0;
  std::size_t max_strips = 0;
  for (const auto& s : sliced)
  {
    max_slices = std::max(max_slices, s.slices.size());
    max_strips = std::max(max_strips, s.MaxStripCount());
  }
  model.layout_.n_c = network.size();
  model.layout_.pi_resolution = config.image.resolution;
  model.layout_.n_slices_max = static_cast<int>(max_slices) + config.layout_margin;
  model.layout_.n_s_max = static_cast<int>(max_strips) + config.layout_margin;
  model.config_hash_ = DescriptorConfigHash(model.network_hash_, model.delta_hash_,
                                            model.slicing_, model.image_, model.layout_);

  Eigen::MatrixXd tops(static_cast<Eigen::Index>(data.size()), model.layout_.TopsLength());
  Eigen::MatrixXd tops2(static_cast<Eigen::Index>(data.size()), model.layout_.Tops2Length());
  ParallelFor(data.size(), [&](std::size_t i) {
    const Descriptors d =
        ComputeDescriptors(sliced[i], network, delta, model.layout_, model.image_);
    tops.row(static_cast<Eigen::Index>(i)) = d.tops.transpose();
    tops2.row(static_cast<Eigen::Index>(i)) = d.tops2.transpose();
  });

  const int n_classes = static_cast<int>(model.labels_.size());
  MlpParams m1_params = config.mlp;
  MlpParams m2_params = config.mlp;
  m2_params.seed = config.mlp.seed ^ 0x9E3779B97F4A7C15ull;
  model.m1_ = Mlp::Train(tops, targets, n_classes, m1_params);
  model.m2_ = Mlp::Train(tops2, targets, n_classes, m2_params);
  return model;
}

void RecognitionModel::CheckArtifacts(const ColorNetwork& network,
                                      const SimilarityMatrix& delta) const
{
  if (network.content_hash() != network_hash_)
  {
    throw HashMismatchError("model color network", network_hash_, network.content_hash());
  }
  if (delta.content_hash() != delta_hash_)
  {
    throw HashMismatchError("model similarity matrix", delta_hash_, delta.content_hash());
  }
}

Descriptors RecognitionModel::Describe(const ColoredCloud& cloud, bool occluded,
                                       const ColorNetwork& network,
                                       const SimilarityMatrix& delta) const
{
  CheckArtifacts(network, delta);
  return ComputeDescriptors(PrepareCloud(cloud, slicing_, occluded), network, delta, layout_,
                            image_);
}

Prediction RecognitionModel::PredictDescriptors(const Descriptors& d, FusionMode mode) const
{
  return FusePredictions(m1_.Probabilities(d.tops), m2_.Probabilities(d.tops2), labels_, mode);
}

Prediction RecognitionModel::Predict(const ColoredCloud& cloud, bool occluded,
                                     const ColorNetwork& network, const SimilarityMatrix& delta,
                                     FusionMode mode) const
{
  return PredictDescriptors(Describe(cloud, occluded, network, delta), mode);
}

namespace
{
constexpr char kModelMagic[8] = {'T', 'H', 'O', 'R', '2', 'M', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

std::string RecognitionModel::Serialize() const
{
  nlohmann::json header;
  header["labels"] = labels_;
  header["slicing"] = {{"sigma_s", slicing_.sigma_s},
                       {"sigma1", slicing_.sigma1},
                       {"sigma2", slicing_.sigma2},
                       {"alpha", slicing_.alpha},
                       {"auto_alpha", slicing_.auto_alpha}};
  header["image"] = {{"resolution", image_.resolution},
                     {"sigma", image_.sigma},
                     {"birth_min", image_.birth_min},
                     {"birth_max", image_.birth_max},
                     {"persistence_max", image_.persistence_max}};
  header["mlp"] = {{"hidden_units", mlp_params_.hidden_units},
                   {"epochs", mlp_params_.epochs},
                   {"batch_size", mlp_params_.batch_size},
                   {"learning_rate", mlp_params_.learning_rate},
                   {"weight_decay", mlp_params_.weight_decay},
                   {"seed", mlp_params_.seed}};
  header["layout"] = {{"n_c", layout_.n_c},
                      {"n_s_max", layout_.n_s_max},
                      {"n_slices_max", layout_.n_slices_max},
                      {"pi_resolution", layout_.pi_resolution}};
  header["network_hash"] = network_hash_;
  header["delta_hash"] = delta_hash_;
  header["config_hash"] = config_hash_;
  const std::string text = header.dump();

  std::ostringstream out(std::ios::binary);
  out.write(kModelMagic, sizeof(kModelMagic));
  out.write(reinterpret_cast<const char*>(&kModelVersion), sizeof(kModelVersion));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  m1_.Write(out);
  m2_.Write(out);
  return out.str();
}

RecognitionModel RecognitionModel::Deserialize(const std::string& bytes)
{
  std::istringstream in(bytes, std::ios::binary);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0)
  {
    throw DataError("not a model file");
  }
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)) || version != kModelVersion)
  {
    throw DataError("unsupported model file version");
  }
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > bytes.size())
  {
    throw DataError("model header truncated");
  }
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
  {
    throw DataError("model header truncated");
  }
  RecognitionModel model;
  try
  {
    const auto h = nlohmann::json::parse(text);
    model.labels_ = h.at("labels").get<std::vector<std::string>>();
    const auto& s = h.at("slicing");
    model.slicing_ = {s.at("sigma_s").get<double>(), s.at("sigma1").get<double>(),
                      s.at("sigma2").get<double>(), s.at("alpha").get<double>(),
                      s.at("auto_alpha").get<bool>()};
    const auto& im = h.at("image");
    model.image_ = {im.at("resolution").get<int>(), im.at("sigma").get<double>(),
                    im.at("birth_min").get<double>(), im.at("birth_max").get<double>(),
                    im.at("persistence_max").get<double>()};
    const auto& m = h.at("mlp");
    model.mlp_params_ = {m.at("hidden_units").get<int>(),      m.at("epochs").get<int>(),
                         m.at("batch_size").get<int>(),        m.at("learning_rate").get<double>(),
                         m.at("weight_decay").get<double>(),   m.at("seed").get<std::uint64_t>()};
    const auto& l = h.at("layout");
    model.layout_ = {l.at("n_c").get<int>(), l.at("n_s_max").get<int>(),
                     l.at("n_slices_max").get<int>(), l.at("pi_resolution").get<int>()};
    model.network_hash_ = h.at("network_hash").get<std::string>();
    model.delta_hash_ = h.at("delta_hash").get<std::string>();
    model.config_hash_ = h.at("config_hash").get<std::string>();
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(std::string("model header: ") + e.what());
  }
  const std::string expected = DescriptorConfigHash(model.network_hash_, model.delta_hash_,
                                                    model.slicing_, model.image_, model.layout_);
  if (expected != model.config_hash_)
  {
    throw HashMismatchError("model descriptor config", expected, model.config_hash_);
  }
  model.m1_ = Mlp::Read(in);
  model.m2_ = Mlp::Read(in);
  const auto n_labels = static_cast<int>(model.labels_.size());
  if (model.m1_.input_dim() != model.layout_.TopsLength() ||
      model.m2_.input_dim() != model.layout_.Tops2Length() ||
      model.m1_.n_classes() != n_labels || model.m2_.n_classes() != n_labels)
  {
    throw DataError("model classifiers disagree with the descriptor layout or label table");
  }
  return model;
}

void RecognitionModel::Save(const std::filesystem::path& path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  const std::string bytes = Serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

RecognitionModel RecognitionModel::Load(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw DataError("cannot read " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Deserialize(buffer.str());
}

SegmentationMap SegmentationMap::LoadPgm(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw DataError("cannot read " + path.string());
  }
  auto next_token = [&]() {
    std::string token;
    char c = 0;
    while (in.get(c))
    {
      if (c == '#')
      {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c)))
      {
        if (!token.empty())
        {
          break;
        }
        continue;
      }
      token.push_back(c);
    }
    return token;
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2")
  {
    throw DataError(path.string() + ": not a PGM (P5/P2) image");
  }
  SegmentationMap map;
  try
  {
    map.width = std::stoi(next_token());
    map.height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (map.width <= 0 || map.height <= 0 || maxval <= 0 || maxval > 255)
    {
      throw DataError(path.string() + ": segmentation map must be an 8-bit PGM");
    }
  }
  catch (const std::logic_error&)
  {
    throw DataError(path.string() + ": malformed PGM header");
  }
  map.pixels.resize(static_cast<std::size_t>(map.width) * map.height);
  if (magic == "P5")
  {
    if (!in.read(reinterpret_cast<char*>(map.pixels.data()),
                 static_cast<std::streamsize>(map.pixels.size())))
    {
      throw DataError(path.string() + ": PGM pixel data truncated");
    }
  }
  else
  {
    for (auto& px : map.pixels)
    {
      const std::string t = next_token();
      if (t.empty())
      {
        throw DataError(path.string() + ": PGM pixel data truncated");
      }
      px = static_cast<std::uint8_t>(std::stoi(t));
    }
  }
  return map;
}

void SegmentationMap::SavePgm(const std::filesystem::path& path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

bool DetectOcclusion(const SegmentationMap& map, int instance)
{
  if (instance <= 0 || instance > 255)
  {
    throw DataError("instance id must be in [1, 255]");
  }
  bool any = false;
  for (int y = 0; y < map.height; ++y)
  {
    for (int x = 0; x < map.width; ++x)
    {
      if (map.at(x, y) != instance)
      {
        continue;
      }
      any = true;
      for (int dy = -1; dy <= 1; ++dy)
      {
        for (int dx = -1; dx <= 1; ++dx)
        {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height)
          {
            return true;
          }
          const int other = map.at(nx, ny);
          if (other != 0 && other != instance)
          {
            return true;
          }
        }
      }
    }
  }
  if (!any)
  {
    throw DataError("instance " + std::to_string(instance) + " has an empty mask");
  }
  return false;
}

std::vector<SplitAccuracy> ScorePredictions(std::span<const LabeledCloud> test,
                                            std::span<const std::string> predicted)
{
  if (test.size() != predicted.size())
  {
    throw std::invalid_argument("ScorePredictions: size mismatch");
  }
  std::vector<SplitAccuracy> splits;
  SplitAccuracy overall{"overall", 0, 0};
  for (std::size_t i = 0; i < test.size(); ++i)
  {
    const std::string name = test[i].split.empty() ? "all" : test[i].split;
    auto it = std::find_if(splits.begin(), splits.end(),
                           [&](const SplitAccuracy& s) { return s.split == name; });
    if (it == splits.end())
    {
      splits.push_back({name, 0, 0});
      it = splits.end() - 1;
    }
    const bool hit = predicted[i] == test[i].label;
    ++it->n;
    ++overall.n;
    it->correct += hit;
    overall.correct += hit;
  }
  splits.push_back(overall);
  return splits;
}

std::vector<SplitAccuracy> Evaluate(std::span<const LabeledCloud> test,
                                    const RecognitionModel& model, const ColorNetwork& network,
                                    const SimilarityMatrix& delta, FusionMode mode)
{
  model.CheckArtifacts(network, delta);
  std::vector<std::string> predicted(test.size());
  ParallelFor(test.size(), [&](std::size_t i) {
    predicted[i] = model.Predict(test[i].cloud, test[i].occluded, network, delta, mode).label;
  });
  return ScorePredictions(test, predicted);
}

std::vector<ReportRow> BuildReport(
    std::span<const std::pair<std::uint64_t, std::vector<SplitAccuracy>>> per_seed)
{
  std::vector<ReportRow> rows;
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> by_split;
  for (const auto& [seed, splits] : per_seed)
  {
    for (const auto& s : splits)
    {
      rows.push_back({s.split, std::to_string(seed), s.accuracy()});
      if (by_split.find(s.split) == by_split.end())
      {
        order.push_back(s.split);
      }
      by_split[s.split].push_back(s.accuracy());
    }
  }
  for (const auto& name : order)
  {
    const auto& values = by_split[name];
    double mean = 0.0;
    for (const double v : values)
    {
      mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values)
    {
      var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(values.size());
    rows.push_back({name, "mean", mean});
    rows.push_back({name, "std", std::sqrt(var)});
  }
  return rows;
}

void WriteReportCsv(std::ostream& out, std::span<const ReportRow> rows)
{
  out << "split,seed,accuracy\n";
  char buffer[32];
  for (const auto& r : rows)
  {
    std::snprintf(buffer, sizeof(buffer), "%.6f", r.accuracy);
    out << r.split << ',' << r.seed << ',' << buffer << '\n';
  }
}

}  // namespace thor2
