#pragma once

#include <filesystem>
#include <iosfwd>

#include "thor2/geometry.hpp"

namespace thor2
{

enum class PlyEncoding
{
  kAscii,
  kBinaryFloat,   ///< binary little-endian, float32 coordinates
  kBinaryDouble,  ///< binary little-endian, float64 coordinates (lossless)
};

/// Reads the vertex element of an ASCII or binary little-endian PLY file.
/// Requires x/y/z and red/green/blue properties; everything else is skipped.
/// Errors are DataError with the offending header line or byte offset.
ColoredCloud ReadPly(std::istream& in);
ColoredCloud LoadPly(const std::filesystem::path& path);

void WritePly(std::ostream& out, const ColoredCloud& cloud,
              PlyEncoding encoding = PlyEncoding::kBinaryDouble);
void SavePly(const std::filesystem::path& path, const ColoredCloud& cloud,
             PlyEncoding encoding = PlyEncoding::kBinaryDouble);

}  // namespace thor2
