// thor2: color network, descriptor, and recognition pipeline CLI.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thor2/config.hpp"
#include "thor2/errors.hpp"
#include "thor2/parallel.hpp"
#include "thor2/ply.hpp"
#include "thor2/recognition.hpp"
#include "thor2/similarity.hpp"
#include "thor2/synth.hpp"

using namespace thor2;

namespace
{

struct CommonOptions
{
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<CLI::Option*> override_options;
};

void AddCommon(CLI::App* app, CommonOptions& common)
{
  app->add_option("--config", common.config_path, "Key-value configuration file")
      ;
  app->add_option("--seed", common.seed, "Seed for every stochastic step");
  common.overrides.reserve(ConfigKeys().size());
  for (const auto& key : ConfigKeys())
  {
    if (key == "seed")
    {
      continue;
    }
    common.overrides.emplace_back(key, "");
    common.override_options.push_back(
        app->add_option("--" + key, common.overrides.back().second, "Overrides " + key)
            ->group("Config overrides"));
  }
}

Config ResolveConfig(const CommonOptions& common)
{
  ConfigValues values;
  if (!common.config_path.empty())
  {
    values.ParseFile(common.config_path);
  }
  for (std::size_t i = 0; i < common.overrides.size(); ++i)
  {
    if (common.override_options[i]->count() > 0)
    {
      values.Set(common.overrides[i].first, common.overrides[i].second,
                 "--" + common.overrides[i].first);
    }
  }
  if (common.seed)
  {
    values.Set("seed", std::to_string(*common.seed), "--seed");
  }
  return BuildConfig(values);
}

struct Artifacts
{
  ColorNetwork network;
  SimilarityMatrix delta;
};

Artifacts LoadArtifacts(const Config& config, const std::string& network_path,
                        const std::string& delta_path)
{
  ColorNetwork network = ColorNetwork::Load(network_path);
  const std::string expected = MapperConfigHash(config.mapper);
  if (network.config_hash() != expected)
  {
    throw HashMismatchError("color network vs runtime config", expected, network.config_hash());
  }
  SimilarityMatrix delta = SimilarityMatrix::Load(delta_path, network);
  return {std::move(network), std::move(delta)};
}

void CheckModelConfig(const RecognitionModel& model, const Config& config)
{
  const std::string runtime =
      DescriptorConfigHash(model.network_hash(), model.delta_hash(), config.slicing,
                           config.image, model.layout());
  if (runtime != model.config_hash())
  {
    throw HashMismatchError("model descriptor config vs runtime config", model.config_hash(),
                            runtime);
  }
}

std::vector<ColoredCloud> LoadClouds(const std::vector<std::filesystem::path>& paths)
{
  std::vector<ColoredCloud> clouds(paths.size());
  ParallelFor(paths.size(), [&](std::size_t i) { clouds[i] = LoadPly(paths[i]); });
  return clouds;
}

std::vector<ManifestEntry> SelectSplit(std::vector<ManifestEntry> entries,
                                       const std::string& split)
{
  if (split.empty() || split == "all")
  {
    return entries;
  }
  std::vector<ManifestEntry> out;
  for (auto& e : entries)
  {
    if (e.split == split)
    {
      out.push_back(std::move(e));
    }
  }
  if (out.empty())
  {
    throw DataError("manifest has no entries in split '" + split + "'");
  }
  return out;
}

std::string OcclusionSplit(double f)
{
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "occlusion_%.2f", f);
  return buffer;
}

/// Output file or stdout.
class Sink
{
public:
  explicit Sink(const std::string& path)
  {
    if (!path.empty() && path != "-")
    {
      file_.open(path, std::ios::binary);
      if (!file_)
      {
        throw DataError("cannot write " + path);
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
  std::ofstream file_;
};

int Run(int argc, char** argv)
{
  CLI::App app{"Color-network shape+color descriptors and occlusion-robust recognition"};
  app.require_subcommand(1);

  // build-network
  CommonOptions build_common;
  std::string build_network_out = "network.json";
  std::string build_delta_out = "delta.json";
  auto* build = app.add_subcommand("build-network", "Build the color network and its similarity matrix");
  AddCommon(build, build_common);
  build->add_option("--network-out", build_network_out, "Network file")->capture_default_str();
  build->add_option("--delta-out", build_delta_out, "Similarity matrix file")->capture_default_str();

  // describe
  CommonOptions describe_common;
  std::string describe_ply;
  std::string describe_network = "network.json";
  std::string describe_delta = "delta.json";
  std::string describe_model;
  std::string describe_out;
  std::string describe_dump;
  bool describe_occluded = false;
  auto* describe = app.add_subcommand("describe", "Compute TOPS and TOPS2 descriptors of a cloud");
  AddCommon(describe, describe_common);
  describe->add_option("--ply", describe_ply, "Input point cloud")->required();
  describe->add_option("--network", describe_network)->capture_default_str();
  describe->add_option("--delta", describe_delta)->capture_default_str();
  describe->add_option("--model", describe_model, "Take layout and preprocessing from a model");
  describe->add_option("--out", describe_out, "Descriptor file")->required();
  describe->add_option("--dump-slices", describe_dump, "Per-strip diagnostics CSV");
  describe->add_flag("--occluded", describe_occluded, "Flip before slicing");

  // train
  CommonOptions train_common;
  std::string train_manifest;
  std::string train_network = "network.json";
  std::string train_delta = "delta.json";
  std::string train_out = "model.bin";
  std::string train_split = "train";
  auto* train = app.add_subcommand("train", "Train both classifiers on unoccluded clouds");
  AddCommon(train, train_common);
  train->add_option("--manifest", train_manifest)->required();
  train->add_option("--network", train_network)->capture_default_str();
  train->add_option("--delta", train_delta)->capture_default_str();
  train->add_option("--out", train_out)->capture_default_str();
  train->add_option("--split", train_split, "Manifest split to train on ('all' for every row)")
      ->capture_default_str();

  // predict
  CommonOptions predict_common;
  std::string predict_model = "model.bin";
  std::string predict_network = "network.json";
  std::string predict_delta = "delta.json";
  std::string predict_manifest;
  std::string predict_split = "all";
  std::vector<std::string> predict_plys;
  bool predict_occluded = false;
  std::string predict_segmentation;
  std::vector<int> predict_instances;
  std::string predict_mode;
  std::string predict_out;
  auto* predict = app.add_subcommand("predict", "Classify clouds; one JSON record per object");
  AddCommon(predict, predict_common);
  predict->add_option("--model", predict_model)->capture_default_str();
  predict->add_option("--network", predict_network)->capture_default_str();
  predict->add_option("--delta", predict_delta)->capture_default_str();
  auto* predict_manifest_opt =
      predict->add_option("--manifest", predict_manifest, "Manifest; occlusion > 0 sets the flag")
          ;
  predict->add_option("--split", predict_split)->capture_default_str();
  auto* predict_ply_opt = predict->add_option("--ply", predict_plys, "Object clouds of one scene")
                              ;
  predict_ply_opt->excludes(predict_manifest_opt);
  predict->add_flag("--occluded", predict_occluded, "Mark every --ply object occluded");
  auto* seg_opt = predict->add_option("--segmentation", predict_segmentation,
                                      "8-bit PGM instance map used to detect occlusion")
                      ;
  predict->add_option("--instance", predict_instances, "Instance id per --ply object")
      ->needs(seg_opt);
  predict->add_option("--mode", predict_mode, "m1, m2 or fused (default: model.mode)");
  predict->add_option("--out", predict_out, "JSON-lines output (default stdout)");

  // eval
  CommonOptions eval_common;
  std::vector<std::string> eval_models{"model.bin"};
  std::string eval_network = "network.json";
  std::string eval_delta = "delta.json";
  std::string eval_manifest;
  std::string eval_split = "test";
  std::string eval_mode;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Accuracy per occlusion split; one model per seed");
  AddCommon(eval, eval_common);
  eval->add_option("--model", eval_models, "Model files (repeat for several seeds)")
      ->capture_default_str();
  eval->add_option("--network", eval_network)->capture_default_str();
  eval->add_option("--delta", eval_delta)->capture_default_str();
  eval->add_option("--manifest", eval_manifest)->required();
  eval->add_option("--split", eval_split)->capture_default_str();
  eval->add_option("--mode", eval_mode, "m1, m2 or fused (default: model.mode)");
  eval->add_option("--out", eval_out, "Report CSV (default stdout)");

  // synth
  CommonOptions synth_common;
  std::string synth_out = "bench";
  auto* synth = app.add_subcommand("synth", "Write the synthetic primitive benchmark");
  AddCommon(synth, synth_common);
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (build->parsed())
  {
    const Config config = ResolveConfig(build_common);
    const ColorNetwork network = ColorNetwork::Build(config.mapper);
    const SimilarityMatrix delta = SimilarityMatrix::FromNetwork(network);
    network.Save(build_network_out);
    delta.Save(build_delta_out);
    std::cout << "regions " << network.size() << "\nedges " << network.edges().size()
              << "\ncyclic_edges " << network.graph().CyclicEdgeCount() << "\nnetwork_hash "
              << network.content_hash() << "\n";
    return 0;
  }

  if (describe->parsed())
  {
    const Config config = ResolveConfig(describe_common);
    const Artifacts art = LoadArtifacts(config, describe_network, describe_delta);
    const ColoredCloud cloud = LoadPly(describe_ply);
    DescriptorFile file;
    SlicingParams slicing = config.slicing;
    if (!describe_model.empty())
    {
      const RecognitionModel model = RecognitionModel::Load(describe_model);
      model.CheckArtifacts(art.network, art.delta);
      CheckModelConfig(model, config);
      file.layout = model.layout();
      file.config_hash = model.config_hash();
      slicing = model.slicing();
    }
    const SlicedCloud sliced = PrepareCloud(cloud, slicing, describe_occluded);
    if (describe_model.empty())
    {
      file.layout.n_c = art.network.size();
      file.layout.pi_resolution = config.image.resolution;
      file.layout.n_slices_max = static_cast<int>(sliced.slices.size()) + config.layout_margin;
      file.layout.n_s_max = static_cast<int>(sliced.MaxStripCount()) + config.layout_margin;
      file.config_hash = DescriptorConfigHash(art.network.content_hash(), art.delta.content_hash(),
                                              slicing, config.image, file.layout);
    }
    file.descriptors =
        ComputeDescriptors(sliced, art.network, art.delta, file.layout, config.image);
    file.Save(describe_out);
    if (!describe_dump.empty())
    {
      Sink sink(describe_dump);
      WriteSliceDiagnostics(sink.stream(), sliced, art.network.size(),
                            NetworkMembership(art.network));
    }
    std::cout << "tops " << file.descriptors.tops.size() << "\ntops2 "
              << file.descriptors.tops2.size() << "\nconfig_hash " << file.config_hash << "\n";
    return 0;
  }

  if (train->parsed())
  {
    const Config config = ResolveConfig(train_common);
    const Artifacts art = LoadArtifacts(config, train_network, train_delta);
    const auto entries = SelectSplit(ReadManifest(train_manifest), train_split);
    std::vector<std::filesystem::path> paths;
    for (const auto& e : entries)
    {
      paths.push_back(e.path);
    }
    auto clouds = LoadClouds(paths);
    std::vector<LabeledCloud> data;
    for (std::size_t i = 0; i < entries.size(); ++i)
    {
      data.push_back({std::move(clouds[i]), entries[i].label, entries[i].occlusion > 0.0,
                      entries[i].split});
    }
    const RecognitionModel model =
        RecognitionModel::Train(data, art.network, art.delta, config.Recognition());
    model.Save(train_out);
    std::cout << "classes " << model.labels().size() << "\nexamples " << data.size()
              << "\nslices_max " << model.layout().n_slices_max << "\nstrips_max "
              << model.layout().n_s_max << "\nconfig_hash " << model.config_hash() << "\n";
    return 0;
  }

  if (predict->parsed())
  {
    const Config config = ResolveConfig(predict_common);
    const Artifacts art = LoadArtifacts(config, predict_network, predict_delta);
    const RecognitionModel model = RecognitionModel::Load(predict_model);
    model.CheckArtifacts(art.network, art.delta);
    CheckModelConfig(model, config);
    const FusionMode mode = predict_mode.empty() ? config.mode : ParseFusionMode(predict_mode);

    std::vector<std::filesystem::path> paths;
    std::vector<bool> occluded;
    if (!predict_manifest.empty())
    {
      for (const auto& e : SelectSplit(ReadManifest(predict_manifest), predict_split))
      {
        paths.push_back(e.path);
        occluded.push_back(e.occlusion > 0.0);
      }
    }
    else
    {
      if (predict_plys.empty())
      {
        throw ConfigError("predict needs --manifest or at least one --ply");
      }
      std::optional<SegmentationMap> map;
      if (!predict_segmentation.empty())
      {
        if (predict_instances.size() != predict_plys.size())
        {
          throw ConfigError("--instance must be given once per --ply");
        }
        map = SegmentationMap::LoadPgm(predict_segmentation);
      }
      for (std::size_t i = 0; i < predict_plys.size(); ++i)
      {
        paths.emplace_back(predict_plys[i]);
        occluded.push_back(map ? DetectOcclusion(*map, predict_instances[i]) : predict_occluded);
      }
    }
    const auto clouds = LoadClouds(paths);
    std::vector<Prediction> predictions(clouds.size());
    ParallelFor(clouds.size(), [&](std::size_t i) {
      predictions[i] = model.Predict(clouds[i], occluded[i], art.network, art.delta, mode);
    });
    Sink sink(predict_out);
    for (std::size_t i = 0; i < predictions.size(); ++i)
    {
      nlohmann::ordered_json record;
      record["path"] = paths[i].string();
      record["label"] = predictions[i].label;
      record["probability"] = predictions[i].probability;
      record["source"] = ToString(predictions[i].source);
      record["occluded"] = static_cast<bool>(occluded[i]);
      sink.stream() << record.dump() << '\n';
    }
    return 0;
  }

  if (eval->parsed())
  {
    const Config config = ResolveConfig(eval_common);
    const Artifacts art = LoadArtifacts(config, eval_network, eval_delta);
    const FusionMode mode = eval_mode.empty() ? config.mode : ParseFusionMode(eval_mode);
    const auto entries = SelectSplit(ReadManifest(eval_manifest), eval_split);
    std::vector<std::filesystem::path> paths;
    for (const auto& e : entries)
    {
      paths.push_back(e.path);
    }
    auto clouds = LoadClouds(paths);
    std::vector<LabeledCloud> test;
    for (std::size_t i = 0; i < entries.size(); ++i)
    {
      test.push_back({std::move(clouds[i]), entries[i].label, entries[i].occlusion > 0.0,
                      OcclusionSplit(entries[i].occlusion)});
    }
    std::vector<std::pair<std::uint64_t, std::vector<SplitAccuracy>>> per_seed;
    for (const auto& path : eval_models)
    {
      const RecognitionModel model = RecognitionModel::Load(path);
      model.CheckArtifacts(art.network, art.delta);
      CheckModelConfig(model, config);
      const std::set<std::string> known(model.labels().begin(), model.labels().end());
      for (const auto& item : test)
      {
        if (known.count(item.label) == 0)
        {
          throw DataError("label-table mismatch: '" + item.label + "' is not a label of " + path);
        }
      }
      per_seed.emplace_back(model.mlp_params().seed,
                            Evaluate(test, model, art.network, art.delta, mode));
    }
    Sink sink(eval_out);
    WriteReportCsv(sink.stream(), BuildReport(per_seed));
    return 0;
  }

  if (synth->parsed())
  {
    const Config config = ResolveConfig(synth_common);
    const auto classes = DefaultBenchmarkClasses();
    const auto items = GenerateBenchmark(classes, config.synth);
    WriteBenchmark(synth_out, items);
    std::cout << "classes " << classes.size() << "\nitems " << items.size() << "\nmanifest "
              << (std::filesystem::path(synth_out) / "manifest.csv").string() << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  try
  {
    return Run(argc, argv);
  }
  catch (const ConfigError& e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  catch (const HashMismatchError& e)
  {
    std::cerr << "hash mismatch: " << e.what() << "\n";
    return 4;
  }
  catch (const DataError& e)
  {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
  catch (const std::invalid_argument& e)
  {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
