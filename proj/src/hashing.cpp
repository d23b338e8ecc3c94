#include "thor2/hashing.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <stdexcept>

namespace thor2
{

static_assert(std::endian::native == std::endian::little,
              "artifact formats assume a little-endian host");

namespace
{
std::string ToHex(const unsigned char* md, unsigned int len)
{
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i)
  {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}
}  // namespace

Digest::Digest() : ctx_(EVP_MD_CTX_new())
{
  if (ctx_ == nullptr ||
      EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
  {
    throw std::runtime_error("SHA-256 initialization failed");
  }
}

Digest::~Digest() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Digest& Digest::Add(std::string_view text)
{
  if (finished_)
  {
    throw std::logic_error("digest already finalized");
  }
  // Length prefix keeps ("ab","c") and ("a","bc") distinct.
  const std::uint64_t n = text.size();
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), &n, sizeof(n));
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), text.data(), text.size());
  return *this;
}

Digest& Digest::Add(double value)
{
  if (value == 0.0)
  {
    value = 0.0;  // fold -0.0
  }
  return Add(std::string_view(reinterpret_cast<const char*>(&value), sizeof(value)));
}

Digest& Digest::Add(std::int64_t value)
{
  return Add(std::string_view(reinterpret_cast<const char*>(&value), sizeof(value)));
}

Digest& Digest::Add(std::span<const double> values)
{
  return Add(std::string_view(reinterpret_cast<const char*>(values.data()),
                              values.size_bytes()));
}

Digest& Digest::Add(std::span<const std::uint32_t> values)
{
  return Add(std::string_view(reinterpret_cast<const char*>(values.data()),
                              values.size_bytes()));
}

std::string Digest::Hex()
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), md, &len);
  finished_ = true;
  return ToHex(md, len);
}


std::string Sha256Hex(std::string_view bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
  {
    throw std::runtime_error("SHA-256 failed");
  }
  return ToHex(md, len);
}

}  // namespace thor2
