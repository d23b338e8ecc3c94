#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "thor2/descriptor.hpp"
#include "thor2/mapper_network.hpp"
#include "thor2/mlp.hpp"
#include "thor2/persistence.hpp"
#include "thor2/recognition.hpp"
#include "thor2/synth.hpp"

namespace thor2
{

/// Raw `section.key -> value` pairs with the place each value came from
/// ("file:line" or "--section.key"), for diagnostics.
class ConfigValues
{
public:
  struct Entry
  {
    std::string value;
    std::string origin;
  };

  /// Parses INI-style text: `[section]` headers, `key = value` lines, `#` or
  /// `;` comments. Later definitions override earlier ones.
  void Parse(const std::string& text, const std::string& source);
  void ParseFile(const std::filesystem::path& path);
  void Set(const std::string& dotted_key, const std::string& value, const std::string& origin);

  const std::map<std::string, Entry>& entries() const { return entries_; }

private:
  std::map<std::string, Entry> entries_;
};

struct Config
{
  MapperParams mapper;
  SlicingParams slicing;
  PersistenceImageParams image;
  int layout_margin = 1;
  MlpParams mlp;
  FusionMode mode = FusionMode::kFused;
  BenchmarkParams synth;
  std::uint64_t seed = 0;

  RecognitionConfig Recognition() const;
};

/// Every recognized `section.key`, in documentation order.
const std::vector<std::string>& ConfigKeys();

/// Builds a config from defaults plus the given values. Unknown keys and
/// malformed values raise ConfigError naming their origin. The persistence
/// image spread defaults to half the strip thickness.
Config BuildConfig(const ConfigValues& values);

/// The effective configuration as INI text (round-trips through Parse).
std::string FormatConfig(const Config& config);

}  // namespace thor2
