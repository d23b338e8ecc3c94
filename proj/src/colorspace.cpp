#include "thor2/colorspace.hpp"

#include <algorithm>

namespace thor2
{
namespace
{
// IEC 61966-2-1 primaries to XYZ (D65).
constexpr double kRgbToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                    {0.2126729, 0.7151522, 0.0721750},
                                    {0.0193339, 0.1191920, 0.9503041}};

constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;

double GammaExpand(double v)
{
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double GammaCompress(double v)
{
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double LabF(double t)
{
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

double LabFInverse(double f)
{
  const double cube = f * f * f;
  return cube > kEpsilon ? cube : (116.0 * f - 16.0) / kKappa;
}

// The inverse linear matrix above is only rounded to 7 digits, so invert the
// forward matrix exactly to keep the round trip tight.
struct InverseMatrix
{
  double m[3][3];
  InverseMatrix()
  {
    const auto& a = kRgbToXyz;
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
    m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
    m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
    m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  }
};

const InverseMatrix& XyzToRgb()
{
  static const InverseMatrix inverse;
  return inverse;
}
}  // namespace

LabColor SrgbToLab(const SrgbTriple& c, const WhitePoint& white)
{
  const double lin[3] = {GammaExpand(c.r / 255.0), GammaExpand(c.g / 255.0),
                         GammaExpand(c.b / 255.0)};
  double xyz[3];
  for (int i = 0; i < 3; ++i)
  {
    xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] +
             kRgbToXyz[i][2] * lin[2];
  }
  const double fx = LabF(xyz[0] / white.X);
  const double fy = LabF(xyz[1] / white.Y);
  const double fz = LabF(xyz[2] / white.Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabColor SrgbToLab(const RgbColor& c, const WhitePoint& white)
{
  LabColor lab = SrgbToLab(SrgbTriple{double(c.r), double(c.g), double(c.b)}, white);
  // Black is exact zero; 116 * (16/116) - 16 leaves rounding residue in L*.
  if (c.r == 0 && c.g == 0 && c.b == 0)
  {
    lab = LabColor{};
  }
  return lab;
}

SrgbTriple LabToSrgb(const LabColor& c, const WhitePoint& white)
{
  const double fy = (c.L + 16.0) / 116.0;
  const double fx = fy + c.a / 500.0;
  const double fz = fy - c.b / 200.0;
  const double xyz[3] = {white.X * LabFInverse(fx), white.Y * LabFInverse(fy),
                         white.Z * LabFInverse(fz)};
  const auto& m = XyzToRgb().m;
  double rgb[3];
  for (int i = 0; i < 3; ++i)
  {
    const double lin = m[i][0] * xyz[0] + m[i][1] * xyz[1] + m[i][2] * xyz[2];
    rgb[i] = 255.0 * GammaCompress(lin);
  }
  return {rgb[0], rgb[1], rgb[2]};
}

RgbColor LabToRgb(const LabColor& c, const WhitePoint& white)
{
  const SrgbTriple t = LabToSrgb(c, white);
  auto quantize = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  return {quantize(t.r), quantize(t.g), quantize(t.b)};
}

LensPoint Lens(const LabColor& k, double xi)
{
  LensPoint p;
  p.chroma = std::hypot(k.a, k.b);
  if (p.chroma < kAchromaticChroma)
  {
    p.hue = xi;
    return p;
  }
  double theta = std::atan2(k.b, k.a);
  if (theta < 0.0)
  {
    theta += 2.0 * std::numbers::pi;
  }
  if (theta >= 2.0 * std::numbers::pi)
  {
    theta = 0.0;
  }
  p.hue = xi + theta;
  return p;
}

}  // namespace thor2
