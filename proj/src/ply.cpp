#include "thor2/ply.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "thor2/errors.hpp"

namespace thor2
{
namespace
{
enum class ScalarType
{
  kInt8,
  kUint8,
  kInt16,
  kUint16,
  kInt32,
  kUint32,
  kFloat32,
  kFloat64,
};

std::optional<ScalarType> ParseScalarType(const std::string& name)
{
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUint8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUint16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUint32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t SizeOf(ScalarType t)
{
  switch (t)
  {
    case ScalarType::kInt8:
    case ScalarType::kUint8:
      return 1;
    case ScalarType::kInt16:
    case ScalarType::kUint16:
      return 2;
    case ScalarType::kInt32:
    case ScalarType::kUint32:
    case ScalarType::kFloat32:
      return 4;
    case ScalarType::kFloat64:
      return 8;
  }
  return 0;
}

double Decode(ScalarType t, const unsigned char* bytes)
{
  auto as = [bytes]<typename T>(T) {
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return static_cast<double>(value);
  };
  switch (t)
  {
    case ScalarType::kInt8: return as(std::int8_t{});
    case ScalarType::kUint8: return as(std::uint8_t{});
    case ScalarType::kInt16: return as(std::int16_t{});
    case ScalarType::kUint16: return as(std::uint16_t{});
    case ScalarType::kInt32: return as(std::int32_t{});
    case ScalarType::kUint32: return as(std::uint32_t{});
    case ScalarType::kFloat32: return as(float{});
    case ScalarType::kFloat64: return as(double{});
  }
  return 0.0;
}

struct Property
{
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUint8;
};

struct Element
{
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header
{
  bool ascii = false;
  std::vector<Element> elements;
};

Header ParseHeader(std::istream& in)
{
  Header header;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError("ply header line " + std::to_string(line_no) + ": " + msg);
  };
  bool have_format = false;
  while (true)
  {
    if (!std::getline(in, line))
    {
      ++line_no;
      throw fail("unexpected end of file before end_header");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line_no == 1)
    {
      if (line != "ply")
      {
        throw fail("missing 'ply' magic");
      }
      continue;
    }
    std::istringstream tokens(line);
    std::string keyword;
    tokens >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info")
    {
      continue;
    }
    if (keyword == "end_header")
    {
      break;
    }
    if (keyword == "format")
    {
      std::string kind, version;
      tokens >> kind >> version;
      if (kind == "ascii")
      {
        header.ascii = true;
      }
      else if (kind == "binary_little_endian")
      {
        header.ascii = false;
      }
      else if (kind == "binary_big_endian")
      {
        throw fail("binary_big_endian is not supported");
      }
      else
      {
        throw fail("malformed format line");
      }
      have_format = true;
    }
    else if (keyword == "element")
    {
      Element element;
      long long count = -1;
      tokens >> element.name >> count;
      if (element.name.empty() || !tokens || count < 0)
      {
        throw fail("malformed element line");
      }
      element.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(element));
    }
    else if (keyword == "property")
    {
      if (header.elements.empty())
      {
        throw fail("property before any element");
      }
      Property property;
      std::string type;
      tokens >> type;
      if (type == "list")
      {
        std::string count_type, item_type;
        tokens >> count_type >> item_type >> property.name;
        const auto ct = ParseScalarType(count_type);
        const auto it = ParseScalarType(item_type);
        if (!ct || !it || property.name.empty())
        {
          throw fail("malformed list property");
        }
        property.is_list = true;
        property.count_type = *ct;
        property.type = *it;
      }
      else
      {
        tokens >> property.name;
        const auto t = ParseScalarType(type);
        if (!t || property.name.empty())
        {
          throw fail("malformed property '" + line + "'");
        }
        property.type = *t;
      }
      header.elements.back().properties.push_back(std::move(property));
    }
    else
    {
      throw fail("unknown keyword '" + keyword + "'");
    }
  }
  if (!have_format)
  {
    throw DataError("ply header: missing format line");
  }
  return header;
}

struct VertexLayout
{
  std::array<int, 6> slot{-1, -1, -1, -1, -1, -1};  // x y z red green blue
};

VertexLayout ResolveVertex(const Element& vertex)
{
  static constexpr std::array<const char*, 6> kNames = {"x", "y", "z", "red", "green", "blue"};
  VertexLayout layout;
  for (int p = 0; p < static_cast<int>(vertex.properties.size()); ++p)
  {
    for (int k = 0; k < 6; ++k)
    {
      if (vertex.properties[p].name == kNames[k])
      {
        if (vertex.properties[p].is_list)
        {
          throw DataError(std::string("ply: property ") + kNames[k] + " must be scalar");
        }
        layout.slot[k] = p;
      }
    }
  }
  if (layout.slot[0] < 0 || layout.slot[1] < 0 || layout.slot[2] < 0)
  {
    throw DataError("ply: missing coordinates (x, y, z)");
  }
  if (layout.slot[3] < 0 || layout.slot[4] < 0 || layout.slot[5] < 0)
  {
    throw DataError("ply: missing color (red, green, blue)");
  }
  return layout;
}

std::uint8_t ToChannel(double v, ScalarType t)
{
  if (t == ScalarType::kFloat32 || t == ScalarType::kFloat64)
  {
    v = v <= 1.0 ? v * 255.0 : v;
  }
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

ColoredPoint MakePoint(const double values[6], const Element& vertex,
                       const VertexLayout& layout)
{
  ColoredPoint point;
  point.position = {values[0], values[1], values[2]};
  if (!point.position.allFinite())
  {
    throw DataError("ply: non-finite coordinate");
  }
  point.color = {ToChannel(values[3], vertex.properties[layout.slot[3]].type),
                 ToChannel(values[4], vertex.properties[layout.slot[4]].type),
                 ToChannel(values[5], vertex.properties[layout.slot[5]].type)};
  return point;
}

ColoredCloud ReadAscii(std::istream& in, const Header& header)
{
  ColoredCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  bool found_vertex = false;
  for (const Element& element : header.elements)
  {
    const bool is_vertex = element.name == "vertex";
    VertexLayout layout;
    if (is_vertex)
    {
      layout = ResolveVertex(element);
      cloud.points.reserve(element.count);
      found_vertex = true;
    }
    for (std::size_t item = 0; item < element.count; ++item)
    {
      do
      {
        if (!std::getline(in, line))
        {
          throw DataError("ply: element '" + element.name + "' declares " +
                          std::to_string(element.count) + " items but data ends after " +
                          std::to_string(item));
        }
        ++line_no;
      } while (line.find_first_not_of(" \t\r") == std::string::npos);
      if (!is_vertex)
      {
        continue;
      }
      std::istringstream tokens(line);
      double values[6] = {};
      for (int p = 0; p < static_cast<int>(element.properties.size()); ++p)
      {
        const Property& prop = element.properties[p];
        std::size_t n = 1;
        if (prop.is_list)
        {
          double count = 0;
          tokens >> count;
          n = static_cast<std::size_t>(count);
        }
        for (std::size_t k = 0; k < n; ++k)
        {
          double v = 0.0;
          if (!(tokens >> v))
          {
            throw DataError("ply data line " + std::to_string(line_no) +
                            " (after header): too few values");
          }
          for (int s = 0; s < 6; ++s)
          {
            if (layout.slot[s] == p)
            {
              values[s] = v;
            }
          }
        }
      }
      cloud.points.push_back(MakePoint(values, element, layout));
    }
    if (is_vertex)
    {
      break;
    }
  }
  if (!found_vertex)
  {
    throw DataError("ply: no vertex element");
  }
  return cloud;
}

ColoredCloud ReadBinary(std::istream& in, const Header& header)
{
  ColoredCloud cloud;
  const std::streamoff data_start = in.tellg();
  unsigned char buffer[8];
  auto read = [&](std::size_t n, const Element& element, std::size_t item) {
    if (!in.read(reinterpret_cast<char*>(buffer), static_cast<std::streamsize>(n)))
    {
      const std::streamoff offset = data_start >= 0 ? data_start : 0;
      throw DataError("ply: element '" + element.name + "' declares " +
                      std::to_string(element.count) + " items but data ends in item " +
                      std::to_string(item) + " (data starts at byte " +
                      std::to_string(offset) + ")");
    }
  };
  bool found_vertex = false;
  for (const Element& element : header.elements)
  {
    const bool is_vertex = element.name == "vertex";
    VertexLayout layout;
    if (is_vertex)
    {
      layout = ResolveVertex(element);
      cloud.points.reserve(element.count);
      found_vertex = true;
    }
    for (std::size_t item = 0; item < element.count; ++item)
    {
      double values[6] = {};
      for (int p = 0; p < static_cast<int>(element.properties.size()); ++p)
      {
        const Property& prop = element.properties[p];
        std::size_t n = 1;
        if (prop.is_list)
        {
          read(SizeOf(prop.count_type), element, item);
          n = static_cast<std::size_t>(Decode(prop.count_type, buffer));
        }
        for (std::size_t k = 0; k < n; ++k)
        {
          read(SizeOf(prop.type), element, item);
          if (is_vertex && !prop.is_list)
          {
            const double v = Decode(prop.type, buffer);
            for (int s = 0; s < 6; ++s)
            {
              if (layout.slot[s] == p)
              {
                values[s] = v;
              }
            }
          }
        }
      }
      if (is_vertex)
      {
        cloud.points.push_back(MakePoint(values, element, layout));
      }
    }
    if (is_vertex)
    {
      break;
    }
  }
  if (!found_vertex)
  {
    throw DataError("ply: no vertex element");
  }
  return cloud;
}
}  // namespace

ColoredCloud ReadPly(std::istream& in)
{
  const Header header = ParseHeader(in);
  return header.ascii ? ReadAscii(in, header) : ReadBinary(in, header);
}

ColoredCloud LoadPly(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw DataError("cannot open " + path.string());
  }
  try
  {
    return ReadPly(in);
  }
  catch (const DataError& e)
  {
    throw DataError(path.string() + ": " + e.what());
  }
}

void WritePly(std::ostream& out, const ColoredCloud& cloud, PlyEncoding encoding)
{
  const char* coord = encoding == PlyEncoding::kBinaryFloat ? "float" : "double";
  out << "ply\n"
      << "format " << (encoding == PlyEncoding::kAscii ? "ascii" : "binary_little_endian")
      << " 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property " << coord << " x\nproperty " << coord << " y\nproperty " << coord
      << " z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  if (encoding == PlyEncoding::kAscii)
  {
    out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : cloud.points)
    {
      out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
          << int{p.color.r} << ' ' << int{p.color.g} << ' ' << int{p.color.b} << '\n';
    }
    return;
  }
  for (const auto& p : cloud.points)
  {
    if (encoding == PlyEncoding::kBinaryFloat)
    {
      const float xyz[3] = {static_cast<float>(p.position.x()),
                            static_cast<float>(p.position.y()),
                            static_cast<float>(p.position.z())};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    else
    {
      const double xyz[3] = {p.position.x(), p.position.y(), p.position.z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    const unsigned char rgb[3] = {p.color.r, p.color.g, p.color.b};
    out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
  }
}

void SavePly(const std::filesystem::path& path, const ColoredCloud& cloud, PlyEncoding encoding)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  WritePly(out, cloud, encoding);
}

}  // namespace thor2
