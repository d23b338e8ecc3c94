#include "thor2/mapper_network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "thor2/dbscan.hpp"
#include "thor2/errors.hpp"
#include "thor2/hashing.hpp"
#include "thor2/lab_index.hpp"

namespace thor2
{

std::vector<ColorSample> SampleSrgbCube(int stride, const WhitePoint& white)
{
  if (stride <= 0)
  {
    throw std::invalid_argument("sample stride must be positive");
  }
  std::vector<int> axis;
  for (int v = 0; v < 256; v += stride)
  {
    axis.push_back(v);
  }
  if (axis.back() != 255)
  {
    axis.push_back(255);
  }
  std::vector<ColorSample> samples;
  samples.reserve(axis.size() * axis.size() * axis.size());
  for (const int r : axis)
  {
    for (const int g : axis)
    {
      for (const int b : axis)
      {
        const RgbColor rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                           static_cast<std::uint8_t>(b)};
        samples.push_back({rgb, SrgbToLab(rgb, white)});
      }
    }
  }
  return samples;
}

std::vector<Interval> CoverIntervals(double min, double max, int n, double gain_percent)
{
  if (n < 1)
  {
    throw std::invalid_argument("cover needs at least one interval per dimension");
  }
  if (!(gain_percent >= 0.0 && gain_percent < 100.0))
  {
    throw std::invalid_argument("cover gain must be in [0, 100)");
  }
  if (!(max > min) || n == 1)
  {
    return {Interval{min, max}};
  }
  const double g = gain_percent / 100.0;
  const double length = (max - min) / (n - (n - 1) * g);
  const double step = length * (1.0 - g);
  std::vector<Interval> intervals(n);
  for (int k = 0; k < n; ++k)
  {
    intervals[k].lo = min + k * step;
    intervals[k].hi = intervals[k].lo + length;
  }
  intervals.back().hi = max;
  return intervals;
}

Cover BuildCover(std::span<const LensPoint> lens_points, const CoverSpec& spec)
{
  if (lens_points.empty())
  {
    throw std::invalid_argument("cover over an empty lens image");
  }
  double c_min = lens_points[0].chroma, c_max = c_min;
  double h_min = lens_points[0].hue, h_max = h_min;
  for (const auto& p : lens_points)
  {
    c_min = std::min(c_min, p.chroma);
    c_max = std::max(c_max, p.chroma);
    h_min = std::min(h_min, p.hue);
    h_max = std::max(h_max, p.hue);
  }
  Cover cover;
  cover.chroma = CoverIntervals(c_min, c_max, spec.n_intervals_chroma, spec.gain_chroma);
  cover.hue = CoverIntervals(h_min, h_max, spec.n_intervals_hue, spec.gain_hue);
  for (int c = 0; c < static_cast<int>(cover.chroma.size()); ++c)
  {
    for (int h = 0; h < static_cast<int>(cover.hue.size()); ++h)
    {
      cover.cells.push_back({c, h, cover.chroma[c], cover.hue[h]});
    }
  }
  return cover;
}

std::string MapperConfigHash(const MapperParams& p)
{
  Digest d;
  d.Add(std::string_view("thor2.mapper.v1"))
      .Add(std::int64_t{p.stride})
      .Add(p.xi)
      .Add(std::int64_t{p.cover.n_intervals_chroma})
      .Add(std::int64_t{p.cover.n_intervals_hue})
      .Add(p.cover.gain_chroma)
      .Add(p.cover.gain_hue)
      .Add(p.dbscan_eps)
      .Add(std::int64_t{p.dbscan_min_pts})
      .Add(p.white.X)
      .Add(p.white.Y)
      .Add(p.white.Z);
  return d.Hex();
}

const NetworkEdge* ColorGraph::FindEdge(int u, int v) const
{
  if (u > v)
  {
    std::swap(u, v);
  }
  const auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{u, v},
                                   [](const NetworkEdge& e, const std::pair<int, int>& key) {
                                     return std::pair{e.u, e.v} < key;
                                   });
  return (it != edges.end() && it->u == u && it->v == v) ? &*it : nullptr;
}

std::size_t ColorGraph::CyclicEdgeCount() const
{
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [](const NetworkEdge& e) { return e.cyclic; }));
}

LabColor MeanColor(std::span<const ColorSample> samples, std::span<const std::uint32_t> members)
{
  LabColor sum;
  for (const std::uint32_t m : members)
  {
    sum.L += samples[m].lab.L;
    sum.a += samples[m].lab.a;
    sum.b += samples[m].lab.b;
  }
  const double n = static_cast<double>(members.size());
  return {sum.L / n, sum.a / n, sum.b / n};
}

std::vector<ColorRegion> RefinePullback(std::span<const ColorSample> samples,
                                        std::span<const LensPoint> lens_points,
                                        const Cover& cover, double eps, int min_pts)
{
  if (samples.size() != lens_points.size())
  {
    throw std::invalid_argument("RefinePullback: samples and lens points differ in size");
  }
  std::vector<ColorRegion> regions;
  std::vector<std::uint32_t> preimage;
  std::vector<LabColor> labs;
  for (const CoverCell& cell : cover.cells)
  {
    preimage.clear();
    labs.clear();
    for (std::uint32_t i = 0; i < lens_points.size(); ++i)
    {
      if (cell.Contains(lens_points[i]))
      {
        preimage.push_back(i);
        labs.push_back(samples[i].lab);
      }
    }
    if (preimage.empty())
    {
      continue;
    }
    const DbscanResult clusters = Dbscan(labs, eps, min_pts);
    std::vector<ColorRegion> local(clusters.n_clusters);
    for (std::size_t k = 0; k < preimage.size(); ++k)
    {
      if (clusters.labels[k] != kNoise)
      {
        local[clusters.labels[k]].members.push_back(preimage[k]);
      }
    }
    for (ColorRegion& region : local)
    {
      region.id = static_cast<int>(regions.size());
      region.mean = MeanColor(samples, region.members);
      region.chroma_index = cell.chroma_index;
      region.hue_index = cell.hue_index;
      regions.push_back(std::move(region));
    }
  }
  return regions;
}

namespace
{
void SortEdges(std::vector<NetworkEdge>& edges)
{
  std::sort(edges.begin(), edges.end(), [](const NetworkEdge& x, const NetworkEdge& y) {
    return std::pair{x.u, x.v} < std::pair{y.u, y.v};
  });
}
}  // namespace

ColorGraph BuildNerve(std::vector<ColorRegion> regions)
{
  ColorGraph graph;
  std::unordered_map<std::uint32_t, std::vector<int>> owners;
  for (const ColorRegion& r : regions)
  {
    for (const std::uint32_t m : r.members)
    {
      owners[m].push_back(r.id);
    }
  }
  std::set<std::pair<int, int>> pairs;
  for (const auto& [sample, ids] : owners)
  {
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
      for (std::size_t j = i + 1; j < ids.size(); ++j)
      {
        pairs.insert({std::min(ids[i], ids[j]), std::max(ids[i], ids[j])});
      }
    }
  }
  for (const auto& [u, v] : pairs)
  {
    graph.edges.push_back({u, v, 0.0, false});
  }
  graph.regions = std::move(regions);
  return graph;
}

ColorGraph CloseHueCycle(ColorGraph graph, int n_intervals_hue)
{
  if (n_intervals_hue < 2)
  {
    return graph;
  }
  const int last = n_intervals_hue - 1;
  std::vector<NetworkEdge> added;
  for (const ColorRegion& first : graph.regions)
  {
    if (first.hue_index != 0)
    {
      continue;
    }
    for (const ColorRegion& other : graph.regions)
    {
      if (other.hue_index != last || other.chroma_index != first.chroma_index)
      {
        continue;
      }
      if (graph.FindEdge(first.id, other.id) == nullptr)
      {
        added.push_back({std::min(first.id, other.id), std::max(first.id, other.id), 0.0, true});
      }
    }
  }
  graph.edges.insert(graph.edges.end(), added.begin(), added.end());
  SortEdges(graph.edges);
  return graph;
}

ColorGraph EliminateRedundant(ColorGraph graph)
{
  const int n = graph.size();
  auto contains = [&](int outer, int inner) {
    const auto& a = graph.regions[outer].members;
    const auto& b = graph.regions[inner].members;
    return a.size() >= b.size() && std::includes(a.begin(), a.end(), b.begin(), b.end());
  };
  // Each region maps to the largest region containing it (lowest id among
  // equals), which is never itself redundant.
  std::vector<int> target(n);
  for (int i = 0; i < n; ++i)
  {
    target[i] = i;
    for (int j = 0; j < n; ++j)
    {
      if (j == i || !contains(j, i))
      {
        continue;
      }
      const auto& best = graph.regions[target[i]].members;
      const auto& cand = graph.regions[j].members;
      if (cand.size() > best.size() || (cand.size() == best.size() && j < target[i]))
      {
        target[i] = j;
      }
    }
  }
  std::vector<int> new_id(n, -1);
  ColorGraph out;
  for (int i = 0; i < n; ++i)
  {
    if (target[i] == i)
    {
      new_id[i] = static_cast<int>(out.regions.size());
      ColorRegion region = std::move(graph.regions[i]);
      region.id = new_id[i];
      out.regions.push_back(std::move(region));
    }
  }
  std::map<std::pair<int, int>, bool> rewired;  // value: cyclic
  for (const NetworkEdge& e : graph.edges)
  {
    int u = new_id[target[e.u]];
    int v = new_id[target[e.v]];
    if (u == v)
    {
      continue;
    }
    if (u > v)
    {
      std::swap(u, v);
    }
    const auto [it, inserted] = rewired.try_emplace({u, v}, e.cyclic);
    if (!inserted)
    {
      it->second = it->second && e.cyclic;
    }
  }
  for (const auto& [key, cyclic] : rewired)
  {
    out.edges.push_back({key.first, key.second, 0.0, cyclic});
  }
  return out;
}

ColorGraph AssignWeights(ColorGraph graph)
{
  for (NetworkEdge& e : graph.edges)
  {
    e.weight = Hyab(graph.regions[e.u].mean, graph.regions[e.v].mean);
  }
  return graph;
}

struct ColorNetwork::Lookup
{
  std::vector<LabColor> labs;
  std::vector<std::uint32_t> offsets;  // CSR: regions of sample s are ids[offsets[s]..offsets[s+1])
  std::vector<int> ids;
  std::unique_ptr<LabGridIndex> index;
  std::unordered_map<std::uint32_t, std::uint32_t> grid_position;  // packed rgb -> sample
  mutable std::mutex mutex;
  mutable std::unordered_map<std::uint32_t, std::uint32_t> nearest;
};

ColorNetwork::ColorNetwork(MapperParams params, ColorGraph graph)
    : ColorNetwork(params, SampleSrgbCube(params.stride, params.white), std::move(graph),
                   MapperConfigHash(params))
{
}

ColorNetwork::ColorNetwork(MapperParams params, std::vector<ColorSample> samples,
                           ColorGraph graph, std::string config_hash)
    : params_(params),
      samples_(std::move(samples)),
      graph_(std::move(graph)),
      config_hash_(std::move(config_hash))
{
  Index();
}

namespace
{
ColorGraph RunMapper(const MapperParams& params, std::span<const ColorSample> samples)
{
  std::vector<LensPoint> lens(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
  {
    lens[i] = Lens(samples[i].lab, params.xi);
  }
  const Cover cover = BuildCover(lens, params.cover);
  auto regions =
      RefinePullback(samples, lens, cover, params.dbscan_eps, params.dbscan_min_pts);
  ColorGraph graph = BuildNerve(std::move(regions));
  graph = CloseHueCycle(std::move(graph), static_cast<int>(cover.hue.size()));
  graph = EliminateRedundant(std::move(graph));
  return AssignWeights(std::move(graph));
}

std::string CustomSampleHash(const MapperParams& params, std::span<const ColorSample> samples)
{
  Digest d;
  d.Add(MapperConfigHash(params));
  std::vector<std::uint32_t> packed;
  packed.reserve(samples.size());
  for (const auto& s : samples)
  {
    packed.push_back(s.rgb.Packed());
  }
  d.Add(std::span<const std::uint32_t>(packed));
  return d.Hex();
}
}  // namespace

ColorNetwork ColorNetwork::Build(const MapperParams& params)
{
  auto samples = SampleSrgbCube(params.stride, params.white);
  ColorGraph graph = RunMapper(params, samples);
  return ColorNetwork(params, std::move(samples), std::move(graph), MapperConfigHash(params));
}

ColorNetwork ColorNetwork::BuildFromSamples(const MapperParams& params,
                                            std::vector<ColorSample> samples)
{
  if (samples.empty())
  {
    throw std::invalid_argument("BuildFromSamples: no samples");
  }
  ColorGraph graph = RunMapper(params, samples);
  std::string hash = CustomSampleHash(params, samples);
  ColorNetwork network(params, std::move(samples), std::move(graph), std::move(hash));
  network.custom_samples_ = true;
  return network;
}

void ColorNetwork::Index()
{
  auto lookup = std::make_shared<Lookup>();
  lookup->labs.reserve(samples_.size());
  for (std::uint32_t i = 0; i < samples_.size(); ++i)
  {
    lookup->labs.push_back(samples_[i].lab);
    lookup->grid_position.try_emplace(samples_[i].rgb.Packed(), i);
  }
  std::vector<std::vector<int>> per_sample(samples_.size());
  for (const ColorRegion& r : graph_.regions)
  {
    for (const std::uint32_t m : r.members)
    {
      if (m >= samples_.size())
      {
        throw DataError("color network: region member index out of range");
      }
      per_sample[m].push_back(r.id);
    }
  }
  lookup->offsets.reserve(samples_.size() + 1);
  lookup->offsets.push_back(0);
  for (const auto& ids : per_sample)
  {
    lookup->ids.insert(lookup->ids.end(), ids.begin(), ids.end());
    lookup->offsets.push_back(static_cast<std::uint32_t>(lookup->ids.size()));
  }
  lookup->index = std::make_unique<LabGridIndex>(lookup->labs, 4.0);
  lookup_ = std::move(lookup);

  Digest d;
  d.Add(config_hash_).Add(std::int64_t{size()});
  for (const ColorRegion& r : graph_.regions)
  {
    d.Add(std::int64_t{r.chroma_index}).Add(std::int64_t{r.hue_index});
    d.Add(r.mean.L).Add(r.mean.a).Add(r.mean.b);
    d.Add(std::span<const std::uint32_t>(r.members));
  }
  for (const NetworkEdge& e : graph_.edges)
  {
    d.Add(std::int64_t{e.u}).Add(std::int64_t{e.v}).Add(e.weight).Add(std::int64_t{e.cyclic});
  }
  content_hash_ = d.Hex();
}

std::uint32_t ColorNetwork::NearestSample(const RgbColor& c) const
{
  const std::uint32_t key = c.Packed();
  if (const auto it = lookup_->grid_position.find(key); it != lookup_->grid_position.end())
  {
    return it->second;
  }
  {
    std::lock_guard lock(lookup_->mutex);
    if (const auto it = lookup_->nearest.find(key); it != lookup_->nearest.end())
    {
      return it->second;
    }
  }
  const std::uint32_t nearest = lookup_->index->Nearest(SrgbToLab(c, params_.white));
  std::lock_guard lock(lookup_->mutex);
  lookup_->nearest.emplace(key, nearest);
  return nearest;
}

std::vector<int> ColorNetwork::Membership(const RgbColor& c) const
{
  const std::uint32_t s = NearestSample(c);
  return {lookup_->ids.begin() + lookup_->offsets[s], lookup_->ids.begin() + lookup_->offsets[s + 1]};
}

namespace
{
constexpr const char* kNetworkFormat = "thor2-color-network";
constexpr int kNetworkVersion = 1;

nlohmann::json ParamsToJson(const MapperParams& p)
{
  return {{"stride", p.stride},
          {"xi", p.xi},
          {"n_intervals_chroma", p.cover.n_intervals_chroma},
          {"n_intervals_hue", p.cover.n_intervals_hue},
          {"gain_chroma", p.cover.gain_chroma},
          {"gain_hue", p.cover.gain_hue},
          {"dbscan_eps", p.dbscan_eps},
          {"dbscan_min_pts", p.dbscan_min_pts},
          {"white", {p.white.X, p.white.Y, p.white.Z}}};
}

MapperParams ParamsFromJson(const nlohmann::json& j)
{
  MapperParams p;
  p.stride = j.at("stride").get<int>();
  p.xi = j.at("xi").get<double>();
  p.cover.n_intervals_chroma = j.at("n_intervals_chroma").get<int>();
  p.cover.n_intervals_hue = j.at("n_intervals_hue").get<int>();
  p.cover.gain_chroma = j.at("gain_chroma").get<double>();
  p.cover.gain_hue = j.at("gain_hue").get<double>();
  p.dbscan_eps = j.at("dbscan_eps").get<double>();
  p.dbscan_min_pts = j.at("dbscan_min_pts").get<int>();
  const auto& w = j.at("white");
  p.white = {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()};
  return p;
}
}  // namespace

std::string ColorNetwork::Serialize() const
{
  nlohmann::json doc;
  doc["format"] = kNetworkFormat;
  doc["version"] = kNetworkVersion;
  doc["config_hash"] = config_hash_;
  doc["content_hash"] = content_hash_;
  doc["params"] = ParamsToJson(params_);
  if (custom_samples_)
  {
    auto& rgb = doc["samples"] = nlohmann::json::array();
    for (const auto& s : samples_)
    {
      rgb.push_back({s.rgb.r, s.rgb.g, s.rgb.b});
    }
  }
  auto& regions = doc["regions"] = nlohmann::json::array();
  for (const ColorRegion& r : graph_.regions)
  {
    regions.push_back({{"id", r.id},
                       {"cell", {r.chroma_index, r.hue_index}},
                       {"mean", {r.mean.L, r.mean.a, r.mean.b}},
                       {"members", r.members}});
  }
  auto& edges = doc["edges"] = nlohmann::json::array();
  for (const NetworkEdge& e : graph_.edges)
  {
    edges.push_back({e.u, e.v, e.weight, e.cyclic});
  }
  return doc.dump() + "\n";
}

ColorNetwork ColorNetwork::Deserialize(const std::string& text)
{
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse(text);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(std::string("color network: ") + e.what());
  }
  try
  {
    if (doc.at("format") != kNetworkFormat)
    {
      throw DataError("color network: not a color network file");
    }
    if (doc.at("version").get<int>() != kNetworkVersion)
    {
      throw DataError("color network: unsupported version");
    }
    const MapperParams params = ParamsFromJson(doc.at("params"));
    ColorGraph graph;
    for (const auto& r : doc.at("regions"))
    {
      ColorRegion region;
      region.id = r.at("id").get<int>();
      region.chroma_index = r.at("cell").at(0).get<int>();
      region.hue_index = r.at("cell").at(1).get<int>();
      const auto& m = r.at("mean");
      region.mean = {m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>()};
      region.members = r.at("members").get<std::vector<std::uint32_t>>();
      if (region.id != graph.size())
      {
        throw DataError("color network: region ids are not compact");
      }
      graph.regions.push_back(std::move(region));
    }
    for (const auto& e : doc.at("edges"))
    {
      NetworkEdge edge{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>(),
                       e.at(3).get<bool>()};
      if (edge.u < 0 || edge.v >= graph.size() || edge.u >= edge.v)
      {
        throw DataError("color network: invalid edge");
      }
      graph.edges.push_back(edge);
    }

    const std::string stored = doc.at("config_hash").get<std::string>();
    std::optional<ColorNetwork> network;
    if (doc.contains("samples"))
    {
      std::vector<ColorSample> samples;
      for (const auto& s : doc.at("samples"))
      {
        const RgbColor rgb{s.at(0).get<std::uint8_t>(), s.at(1).get<std::uint8_t>(),
                           s.at(2).get<std::uint8_t>()};
        samples.push_back({rgb, SrgbToLab(rgb, params.white)});
      }
      const std::string expected = CustomSampleHash(params, samples);
      if (expected != stored)
      {
        throw HashMismatchError("color network config", expected, stored);
      }
      network.emplace(ColorNetwork(params, std::move(samples), std::move(graph), stored));
      network->custom_samples_ = true;
    }
    else
    {
      const std::string expected = MapperConfigHash(params);
      if (expected != stored)
      {
        throw HashMismatchError("color network config", expected, stored);
      }
      network.emplace(params, std::move(graph));
    }
    const std::string content = doc.at("content_hash").get<std::string>();
    if (content != network->content_hash())
    {
      throw HashMismatchError("color network content", network->content_hash(), content);
    }
    return std::move(*network);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(std::string("color network: ") + e.what());
  }
}

void ColorNetwork::Save(const std::filesystem::path& path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out << Serialize();
}

ColorNetwork ColorNetwork::Load(const std::filesystem::path& path)
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

}  // namespace thor2
