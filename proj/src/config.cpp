#include "thor2/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "thor2/errors.hpp"

namespace thor2
{
namespace
{

std::string Trim(const std::string& s)
{
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos)
  {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string Fmt(double v)
{
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

struct Reader
{
  const ConfigValues::Entry& entry;

  [[noreturn]] void Fail(const std::string& what) const
  {
    throw ConfigError(entry.origin + ": " + what + " (got '" + entry.value + "')");
  }

  double Real() const
  {
    try
    {
      std::size_t used = 0;
      const double v = std::stod(entry.value, &used);
      if (used != entry.value.size() || !std::isfinite(v)) Fail("expected a finite number");
      return v;
    }
    catch (const std::logic_error&)
    {
      Fail("expected a number");
    }
  }

  double Positive() const
  {
    const double v = Real();
    if (!(v > 0.0)) Fail("expected a positive number");
    return v;
  }

  long long Integer(long long min) const
  {
    try
    {
      std::size_t used = 0;
      const long long v = std::stoll(entry.value, &used);
      if (used != entry.value.size()) Fail("expected an integer");
      if (v < min) Fail("expected an integer >= " + std::to_string(min));
      return v;
    }
    catch (const std::logic_error&)
    {
      Fail("expected an integer");
    }
  }

  bool Bool() const
  {
    if (entry.value == "true" || entry.value == "1" || entry.value == "yes") return true;
    if (entry.value == "false" || entry.value == "0" || entry.value == "no") return false;
    Fail("expected true or false");
  }

  std::vector<double> RealList() const
  {
    std::vector<double> out;
    std::stringstream ss(entry.value);
    std::string item;
    while (std::getline(ss, item, ','))
    {
      const ConfigValues::Entry e{Trim(item), entry.origin};
      out.push_back(Reader{e}.Real());
    }
    return out;
  }
};

using Setter = std::function<void(Config&, const Reader&)>;

const std::vector<std::pair<std::string, Setter>>& Setters()
{
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"colorspace.illuminant",
       [](Config& c, const Reader& r) {
         if (r.entry.value == "D65")
           c.mapper.white = kD65;
         else if (r.entry.value == "D50")
           c.mapper.white = WhitePoint{0.96422, 1.0, 0.82521};
         else
           r.Fail("expected D65 or D50");
       }},
      {"colorspace.xi", [](Config& c, const Reader& r) { c.mapper.xi = r.Real(); }},
      {"mapper.stride",
       [](Config& c, const Reader& r) {
         const auto v = r.Integer(1);
         if (v > 255) r.Fail("stride must be at most 255");
         c.mapper.stride = static_cast<int>(v);
       }},
      {"mapper.chroma_intervals",
       [](Config& c, const Reader& r) {
         c.mapper.cover.n_intervals_chroma = static_cast<int>(r.Integer(1));
       }},
      {"mapper.hue_intervals",
       [](Config& c, const Reader& r) {
         c.mapper.cover.n_intervals_hue = static_cast<int>(r.Integer(1));
       }},
      {"mapper.chroma_gain",
       [](Config& c, const Reader& r) {
         const double g = r.Real();
         if (g < 0.0 || g >= 100.0) r.Fail("gain must be in [0, 100)");
         c.mapper.cover.gain_chroma = g;
       }},
      {"mapper.hue_gain",
       [](Config& c, const Reader& r) {
         const double g = r.Real();
         if (g < 0.0 || g >= 100.0) r.Fail("gain must be in [0, 100)");
         c.mapper.cover.gain_hue = g;
       }},
      {"mapper.dbscan_eps", [](Config& c, const Reader& r) { c.mapper.dbscan_eps = r.Positive(); }},
      {"mapper.dbscan_min_pts",
       [](Config& c, const Reader& r) { c.mapper.dbscan_min_pts = static_cast<int>(r.Integer(1)); }},
      {"slicing.sigma_s", [](Config& c, const Reader& r) { c.slicing.sigma_s = r.Positive(); }},
      {"slicing.sigma1", [](Config& c, const Reader& r) { c.slicing.sigma1 = r.Positive(); }},
      {"slicing.sigma2", [](Config& c, const Reader& r) { c.slicing.sigma2 = r.Positive(); }},
      {"slicing.alpha", [](Config& c, const Reader& r) { c.slicing.alpha = r.Real(); }},
      {"slicing.auto_alpha", [](Config& c, const Reader& r) { c.slicing.auto_alpha = r.Bool(); }},
      {"descriptor.resolution",
       [](Config& c, const Reader& r) { c.image.resolution = static_cast<int>(r.Integer(1)); }},
      {"descriptor.sigma_pi", [](Config& c, const Reader& r) { c.image.sigma = r.Positive(); }},
      {"descriptor.birth_min", [](Config& c, const Reader& r) { c.image.birth_min = r.Real(); }},
      {"descriptor.birth_max", [](Config& c, const Reader& r) { c.image.birth_max = r.Real(); }},
      {"descriptor.persistence_max",
       [](Config& c, const Reader& r) { c.image.persistence_max = r.Positive(); }},
      {"descriptor.layout_margin",
       [](Config& c, const Reader& r) { c.layout_margin = static_cast<int>(r.Integer(0)); }},
      {"model.hidden_units",
       [](Config& c, const Reader& r) { c.mlp.hidden_units = static_cast<int>(r.Integer(1)); }},
      {"model.epochs",
       [](Config& c, const Reader& r) { c.mlp.epochs = static_cast<int>(r.Integer(1)); }},
      {"model.batch_size",
       [](Config& c, const Reader& r) { c.mlp.batch_size = static_cast<int>(r.Integer(1)); }},
      {"model.learning_rate", [](Config& c, const Reader& r) { c.mlp.learning_rate = r.Positive(); }},
      {"model.weight_decay",
       [](Config& c, const Reader& r) {
         const double v = r.Real();
         if (v < 0.0) r.Fail("expected a non-negative number");
         c.mlp.weight_decay = v;
       }},
      {"model.mode",
       [](Config& c, const Reader& r) {
         try
         {
           c.mode = ParseFusionMode(r.entry.value);
         }
         catch (const ConfigError&)
         {
           r.Fail("expected m1, m2 or fused");
         }
       }},
      {"synth.train_views",
       [](Config& c, const Reader& r) { c.synth.train_views = static_cast<int>(r.Integer(1)); }},
      {"synth.test_views",
       [](Config& c, const Reader& r) { c.synth.test_views = static_cast<int>(r.Integer(1)); }},
      {"synth.n_points",
       [](Config& c, const Reader& r) { c.synth.n_points = static_cast<int>(r.Integer(100)); }},
      {"synth.occlusions",
       [](Config& c, const Reader& r) {
         c.synth.occlusions = r.RealList();
         for (const double f : c.synth.occlusions)
         {
           if (!(f >= 0.0 && f < 1.0)) r.Fail("occlusion fractions must be in [0, 1)");
         }
       }},
      {"synth.occlusion_axis",
       [](Config& c, const Reader& r) {
         const auto v = r.RealList();
         if (v.size() != 3) r.Fail("expected three comma-separated numbers");
         const Eigen::Vector3d axis(v[0], v[1], v[2]);
         if (!(axis.norm() > 0.0)) r.Fail("axis must be non-zero");
         c.synth.occlusion_axis = axis;
       }},
      {"synth.occlusion_frame",
       [](Config& c, const Reader& r) {
         if (r.entry.value == "object")
           c.synth.occlusion_in_view_frame = false;
         else if (r.entry.value == "view")
           c.synth.occlusion_in_view_frame = true;
         else
           r.Fail("expected object or view");
       }},
      {"seed",
       [](Config& c, const Reader& r) {
         c.seed = static_cast<std::uint64_t>(r.Integer(0));
       }},
  };
  return table;
}

}  // namespace

void ConfigValues::Parse(const std::string& text, const std::string& source)
{
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    const std::string origin = source + ":" + std::to_string(line_no);
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos)
    {
      line.erase(comment);
    }
    line = Trim(line);
    if (line.empty())
    {
      continue;
    }
    if (line.front() == '[')
    {
      if (line.back() != ']')
      {
        throw ConfigError(origin + ": unterminated section header");
      }
      section = Trim(line.substr(1, line.size() - 2));
      if (section.empty())
      {
        throw ConfigError(origin + ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
      throw ConfigError(origin + ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty())
    {
      throw ConfigError(origin + ": missing key");
    }
    Set(section.empty() ? key : section + "." + key, Trim(line.substr(eq + 1)), origin);
  }
}

void ConfigValues::ParseFile(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  Parse(buffer.str(), path.string());
}

void ConfigValues::Set(const std::string& dotted_key, const std::string& value,
                       const std::string& origin)
{
  entries_[dotted_key] = Entry{value, origin};
}

const std::vector<std::string>& ConfigKeys()
{
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : Setters())
    {
      k.push_back(name);
    }
    return k;
  }();
  return keys;
}

Config BuildConfig(const ConfigValues& values)
{
  Config config;
  std::map<std::string, const Setter*> index;
  for (const auto& [name, setter] : Setters())
  {
    index.emplace(name, &setter);
  }
  for (const auto& [key, entry] : values.entries())
  {
    if (index.find(key) == index.end())
    {
      throw ConfigError(entry.origin + ": unknown key '" + key + "'");
    }
  }
  // Table order, so any cross-field defaults see their inputs.
  for (const auto& [name, setter] : Setters())
  {
    const auto it = values.entries().find(name);
    if (it != values.entries().end())
    {
      setter(config, Reader{it->second});
    }
  }
  if (values.entries().find("descriptor.sigma_pi") == values.entries().end())
  {
    config.image.sigma = 0.5 * config.slicing.sigma2;
  }
  if (!(config.image.birth_max > config.image.birth_min))
  {
    const auto it = values.entries().find("descriptor.birth_max");
    throw ConfigError((it != values.entries().end() ? it->second.origin : std::string("config")) +
                      ": birth_max must exceed birth_min");
  }
  config.mlp.seed = config.seed;
  config.synth.seed = config.seed;
  return config;
}

RecognitionConfig Config::Recognition() const
{
  RecognitionConfig r;
  r.slicing = slicing;
  r.image = image;
  r.mlp = mlp;
  r.layout_margin = layout_margin;
  return r;
}

std::string FormatConfig(const Config& c)
{
  std::ostringstream out;
  const bool d50 = c.mapper.white.Z != kD65.Z;
  out << "seed = " << c.seed << "\n";
  out << "\n[colorspace]\nilluminant = " << (d50 ? "D50" : "D65") << "\nxi = " << Fmt(c.mapper.xi)
      << "\n";
  out << "\n[mapper]\nstride = " << c.mapper.stride
      << "\nchroma_intervals = " << c.mapper.cover.n_intervals_chroma
      << "\nhue_intervals = " << c.mapper.cover.n_intervals_hue
      << "\nchroma_gain = " << Fmt(c.mapper.cover.gain_chroma)
      << "\nhue_gain = " << Fmt(c.mapper.cover.gain_hue)
      << "\ndbscan_eps = " << Fmt(c.mapper.dbscan_eps)
      << "\ndbscan_min_pts = " << c.mapper.dbscan_min_pts << "\n";
  out << "\n[slicing]\nsigma_s = " << Fmt(c.slicing.sigma_s) << "\nsigma1 = " << Fmt(c.slicing.sigma1)
      << "\nsigma2 = " << Fmt(c.slicing.sigma2) << "\nalpha = " << Fmt(c.slicing.alpha)
      << "\nauto_alpha = " << (c.slicing.auto_alpha ? "true" : "false") << "\n";
  out << "\n[descriptor]\nresolution = " << c.image.resolution
      << "\nsigma_pi = " << Fmt(c.image.sigma) << "\nbirth_min = " << Fmt(c.image.birth_min)
      << "\nbirth_max = " << Fmt(c.image.birth_max)
      << "\npersistence_max = " << Fmt(c.image.persistence_max)
      << "\nlayout_margin = " << c.layout_margin << "\n";
  out << "\n[model]\nhidden_units = " << c.mlp.hidden_units << "\nepochs = " << c.mlp.epochs
      << "\nbatch_size = " << c.mlp.batch_size << "\nlearning_rate = " << Fmt(c.mlp.learning_rate)
      << "\nweight_decay = " << Fmt(c.mlp.weight_decay) << "\nmode = " << ToString(c.mode)
      << "\n";
  out << "\n[synth]\ntrain_views = " << c.synth.train_views
      << "\ntest_views = " << c.synth.test_views << "\nn_points = " << c.synth.n_points
      << "\nocclusions = ";
  for (std::size_t i = 0; i < c.synth.occlusions.size(); ++i)
  {
    out << (i ? ", " : "") << Fmt(c.synth.occlusions[i]);
  }
  out << "\nocclusion_axis = " << Fmt(c.synth.occlusion_axis.x()) << ", "
      << Fmt(c.synth.occlusion_axis.y()) << ", " << Fmt(c.synth.occlusion_axis.z())
      << "\nocclusion_frame = " << (c.synth.occlusion_in_view_frame ? "view" : "object") << "\n";
  return out.str();
}

}  // namespace thor2
