#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace thor2
{

/// 8-bit sRGB color.
struct RgbColor
{
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const RgbColor&, const RgbColor&) = default;

  /// Packs the color as 0xRRGGBB.
  std::uint32_t Packed() const
  {
    return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | std::uint32_t{b};
  }
};

/// Real-valued sRGB triple (channels nominally in [0, 255]); the continuous
/// image of the inverse conversion before quantization.
struct SrgbTriple
{
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

struct LabColor
{
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabColor&, const LabColor&) = default;
};

/// Reference white in CIE XYZ (Y normalized to 1).
struct WhitePoint
{
  double X = 0.95047;
  double Y = 1.0;
  double Z = 1.08883;
};

/// CIE standard illuminant D65, 2 degree observer.
inline constexpr WhitePoint kD65{0.95047, 1.0, 1.08883};

/// Default hue offset of the lens.
inline constexpr double kDefaultHueOffset = std::numbers::pi / 8.0;

/// Below this chroma the hue angle is treated as undefined and the lens
/// reports hue = xi.
inline constexpr double kAchromaticChroma = 0.5;

/// Lens image of a color: chroma and offset hue angle.
struct LensPoint
{
  double chroma = 0.0;
  double hue = 0.0;  ///< in [xi, xi + 2 pi)
};

LabColor SrgbToLab(const RgbColor& c, const WhitePoint& white = kD65);

/// Continuous sRGB to CIELAB; accepts out-of-range channel values.
LabColor SrgbToLab(const SrgbTriple& c, const WhitePoint& white = kD65);

/// Inverse of SrgbToLab without clamping or quantization.
SrgbTriple LabToSrgb(const LabColor& c, const WhitePoint& white = kD65);

/// Inverse conversion rounded and clamped to 8 bits.
RgbColor LabToRgb(const LabColor& c, const WhitePoint& white = kD65);

/// HyAB color difference: city-block in lightness, Euclidean in (a*, b*).
inline double Hyab(const LabColor& m, const LabColor& n)
{
  return std::abs(m.L - n.L) + std::hypot(m.a - n.a, m.b - n.b);
}

LensPoint Lens(const LabColor& k, double xi = kDefaultHueOffset);

}  // namespace thor2
