#pragma once

#include <stdexcept>
#include <string>

namespace thor2
{

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data or a violated data contract (CLI exit code 3).
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Artifacts built from different upstream configurations (CLI exit code 4).
class HashMismatchError : public std::runtime_error
{
public:
  HashMismatchError(const std::string& what_artifact, const std::string& expected,
                    const std::string& actual)
      : std::runtime_error(what_artifact + ": hash mismatch (expected " + expected +
                           ", found " + actual + ")")
  {
  }
};

}  // namespace thor2
