#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace thor2
{

/// Incremental SHA-256 used for every artifact's config and content hashes.
/// Numeric values are fed in little-endian byte order so digests are stable
/// across runs.
class Digest
{
public:
  Digest();
  ~Digest();
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  Digest& Add(std::string_view text);
  Digest& Add(double value);
  Digest& Add(std::int64_t value);
  Digest& Add(std::span<const double> values);
  Digest& Add(std::span<const std::uint32_t> values);

  /// Lower-case hex digest; the object cannot be updated afterwards.
  std::string Hex();

private:
  void* ctx_;
  bool finished_ = false;
};

/// Plain SHA-256 of a byte string.
std::string Sha256Hex(std::string_view bytes);

}  // namespace thor2
