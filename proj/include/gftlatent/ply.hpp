// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_PLY_HPP
#define GFTLATENT_PLY_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gftlatent/byte_io.hpp"
#include "gftlatent/color.hpp"
#include "gftlatent/error.hpp"
#include "gftlatent/point_cloud.hpp"

namespace gftl {

enum class ColorSpace { kRgb, kYuv };
enum class PlyFormat { kAscii, kBinaryLittleEndian };

struct PlyReadOptions {
  /// Declared bit depth; inferred from the largest coordinate when unset.
  std::optional<int> bit_depth;
  ColorMatrix color_matrix = ColorMatrix::bt709();
};

struct PlyWriteOptions {
  PlyFormat format = PlyFormat::kBinaryLittleEndian;
  ColorMatrix color_matrix = ColorMatrix::bt709();
};

namespace ply_detail {

enum class ScalarType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

inline std::optional<ScalarType> parse_scalar_type(const std::string& name) {
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

inline std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUint8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUint16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUint32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

inline double decode_scalar(ScalarType t, const char* p) {
  using byte_io::from_le_bytes;
  switch (t) {
    case ScalarType::kInt8: return from_le_bytes<std::int8_t>(p);
    case ScalarType::kUint8: return from_le_bytes<std::uint8_t>(p);
    case ScalarType::kInt16: return from_le_bytes<std::int16_t>(p);
    case ScalarType::kUint16: return from_le_bytes<std::uint16_t>(p);
    case ScalarType::kInt32: return from_le_bytes<std::int32_t>(p);
    case ScalarType::kUint32: return from_le_bytes<std::uint32_t>(p);
    case ScalarType::kFloat32: return from_le_bytes<float>(p);
    case ScalarType::kFloat64: return from_le_bytes<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;

  std::size_t record_size() const {
    std::size_t n = 0;
    for (const auto& p : properties) n += scalar_size(p.type);
    return n;
  }
  int index_of(const std::string& prop) const {
    for (std::size_t i = 0; i < properties.size(); ++i) {
      if (properties[i].name == prop) return static_cast<int>(i);
    }
    return -1;
  }
};

struct Header {
  PlyFormat format = PlyFormat::kAscii;
  std::vector<Element> elements;
  std::optional<int> declared_bit_depth;  // from a "comment bit_depth N" line
};

inline Header parse_header(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || (line != "ply" && line != "ply\r")) {
    throw parse_error("missing 'ply' magic line");
  }
  Header header;
  bool have_format = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "comment") {
      std::string tag;
      int depth = 0;
      if (ls >> tag >> depth && tag == "bit_depth") header.declared_bit_depth = depth;
      continue;
    }
    if (keyword.empty() || keyword == "obj_info") continue;
    if (keyword == "end_header") {
      if (!have_format) throw parse_error("PLY header has no format line");
      return header;
    }
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        header.format = PlyFormat::kAscii;
      } else if (fmt == "binary_little_endian") {
        header.format = PlyFormat::kBinaryLittleEndian;
      } else if (fmt == "binary_big_endian") {
        throw parse_error("big-endian PLY is not supported; convert to binary_little_endian");
      } else {
        throw parse_error("unknown PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) throw parse_error("malformed element line: " + line);
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) throw parse_error("property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        auto ct = parse_scalar_type(count_type);
        auto it = parse_scalar_type(item_type);
        if (!ct || !it) throw parse_error("unknown list property types: " + line);
        p.type = *it;
      } else {
        auto t = parse_scalar_type(type);
        if (!t) throw parse_error("unknown property type '" + type + "'");
        p.type = *t;
        ls >> p.name;
      }
      if (p.name.empty()) throw parse_error("malformed property line: " + line);
      header.elements.back().properties.push_back(std::move(p));
    } else {
      throw parse_error("unexpected PLY header line: " + line);
    }
  }
  throw parse_error("PLY header not terminated by end_header");
}

inline Coord to_coord(double x, double y, double z) {
  Coord c{};
  const double v[3] = {x, y, z};
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(v[k]) || v[k] < 0.0) {
      throw parse_error("negative or non-finite coordinate component " + std::to_string(v[k]));
    }
    const double r = std::round(v[k]);
    if (std::abs(r - v[k]) > 1e-6) {
      throw parse_error("non-integer coordinate component " + std::to_string(v[k]) +
                        " (cloud must be voxelized)");
    }
    if (r > (1 << kMaxBitDepth) - 1) {
      throw parse_error("coordinate component " + std::to_string(v[k]) +
                        " overflows 16 bits");
    }
    c[k] = static_cast<std::int32_t>(r);
  }
  return c;
}

}  // namespace ply_detail

/// Reads a voxelized cloud from ASCII or binary_little_endian PLY.
///
/// Accepts `x y z` of any scalar type plus either uchar `red green blue`
/// (converted to YUV) or scalar `Y U V`. A vertex element without color
/// properties yields a geometry-only cloud. Duplicate coordinates are merged
/// with averaged attributes.
inline PointCloud read_ply(std::istream& is, const PlyReadOptions& options = {}) {
  using namespace ply_detail;
  const Header header = parse_header(is);

  std::size_t vertex_element = header.elements.size();
  for (std::size_t i = 0; i < header.elements.size(); ++i) {
    if (header.elements[i].name == "vertex") {
      vertex_element = i;
      break;
    }
  }
  if (vertex_element == header.elements.size()) throw parse_error("PLY has no vertex element");
  const Element& vertex = header.elements[vertex_element];

  const int ix = vertex.index_of("x"), iy = vertex.index_of("y"), iz = vertex.index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) throw parse_error("vertex element lacks x, y, z");
  int icolor[3] = {vertex.index_of("red"), vertex.index_of("green"), vertex.index_of("blue")};
  bool rgb = icolor[0] >= 0 && icolor[1] >= 0 && icolor[2] >= 0;
  if (!rgb) {
    icolor[0] = vertex.index_of("Y");
    icolor[1] = vertex.index_of("U");
    icolor[2] = vertex.index_of("V");
  }
  const bool yuv = !rgb && icolor[0] >= 0 && icolor[1] >= 0 && icolor[2] >= 0;
  for (const auto& p : vertex.properties) {
    if (p.is_list) throw parse_error("list property '" + p.name + "' in vertex element");
  }

  // Elements preceding the vertex element are skipped.
  for (std::size_t e = 0; e < vertex_element; ++e) {
    const Element& skip = header.elements[e];
    if (header.format == PlyFormat::kAscii) {
      std::string line;
      for (std::size_t r = 0; r < skip.count; ++r) {
        if (!std::getline(is, line)) throw parse_error("truncated PLY body");
      }
    } else {
      for (const auto& p : skip.properties) {
        if (p.is_list) {
          throw parse_error("cannot skip list property in element '" + skip.name +
                            "' preceding vertices");
        }
      }
      is.ignore(static_cast<std::streamsize>(skip.count * skip.record_size()));
    }
  }

  std::vector<Coord> coords;
  std::vector<Yuv> attrs;
  coords.reserve(vertex.count);
  if (rgb || yuv) attrs.reserve(vertex.count);
  std::vector<double> values(vertex.properties.size());

  const std::size_t record = vertex.record_size();
  std::vector<char> buf(record);
  std::string line;
  for (std::size_t r = 0; r < vertex.count; ++r) {
    if (header.format == PlyFormat::kAscii) {
      if (!std::getline(is, line)) throw parse_error("truncated PLY body");
      const char* p = line.c_str();
      for (std::size_t k = 0; k < values.size(); ++k) {
        char* end = nullptr;
        values[k] = std::strtod(p, &end);
        if (end == p) throw parse_error("malformed vertex line " + std::to_string(r));
        p = end;
      }
    } else {
      if (!is.read(buf.data(), static_cast<std::streamsize>(record))) {
        throw parse_error("truncated PLY body");
      }
      std::size_t off = 0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] = decode_scalar(vertex.properties[k].type, buf.data() + off);
        off += scalar_size(vertex.properties[k].type);
      }
    }
    coords.push_back(to_coord(values[ix], values[iy], values[iz]));
    if (rgb) {
      attrs.push_back(rgb_to_yuv({values[icolor[0]], values[icolor[1]], values[icolor[2]]},
                                 options.color_matrix));
    } else if (yuv) {
      attrs.push_back({values[icolor[0]], values[icolor[1]], values[icolor[2]]});
    }
  }

  std::int32_t max_coord = 0;
  for (const Coord& c : coords) max_coord = std::max({max_coord, c[0], c[1], c[2]});
  int bit_depth = required_bit_depth(max_coord);
  if (!options.bit_depth && header.declared_bit_depth &&
      *header.declared_bit_depth >= bit_depth && *header.declared_bit_depth <= kMaxBitDepth) {
    bit_depth = *header.declared_bit_depth;
  }
  if (options.bit_depth) {
    if (*options.bit_depth < bit_depth || *options.bit_depth > kMaxBitDepth) {
      throw config_error("bit depth override " + std::to_string(*options.bit_depth) +
                         " cannot hold max coordinate " + std::to_string(max_coord));
    }
    bit_depth = *options.bit_depth;
  }
  return PointCloud::merge_duplicates(coords, attrs, bit_depth);
}

inline PointCloud read_ply(const std::filesystem::path& path, const PlyReadOptions& options = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open '" + path.string() + "' for reading");
  return read_ply(is, options);
}

/// Writes integer `x y z` plus uchar RGB or double YUV colors. Geometry-only
/// clouds are written without color properties.
inline void write_ply(const PointCloud& pc, std::ostream& os, ColorSpace color_space,
                      const PlyWriteOptions& options = {}) {
  const bool binary = options.format == PlyFormat::kBinaryLittleEndian;
  os << "ply\n"
     << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
     << "comment bit_depth " << pc.bit_depth() << "\n"
     << "element vertex " << pc.size() << "\n"
     << "property int x\nproperty int y\nproperty int z\n";
  if (pc.has_attributes()) {
    if (color_space == ColorSpace::kRgb) {
      os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    } else {
      os << "property double Y\nproperty double U\nproperty double V\n";
    }
  }
  os << "end_header\n";
  if (!binary) os << std::setprecision(std::numeric_limits<double>::max_digits10);

  for (std::size_t i = 0; i < pc.size(); ++i) {
    const Coord& c = pc.coord(i);
    if (binary) {
      for (std::int32_t v : c) byte_io::write_le(os, v);
    } else {
      os << c[0] << ' ' << c[1] << ' ' << c[2];
    }
    if (!pc.has_attributes()) {
      if (!binary) os << '\n';
      continue;
    }
    if (color_space == ColorSpace::kRgb) {
      const Rgb rgb = yuv_to_rgb(pc.attr(i), options.color_matrix);
      for (double v : rgb) {
        const auto u8 = static_cast<std::uint8_t>(std::lround(v));
        if (binary) {
          byte_io::write_le(os, u8);
        } else {
          os << ' ' << static_cast<int>(u8);
        }
      }
    } else {
      for (double v : pc.attr(i)) {
        if (binary) {
          byte_io::write_le(os, v);
        } else {
          os << ' ' << v;
        }
      }
    }
    if (!binary) os << '\n';
  }
}

inline void write_ply(const PointCloud& pc, const std::filesystem::path& path,
                      ColorSpace color_space, const PlyWriteOptions& options = {}) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path.string() + "' for writing");
  write_ply(pc, os, color_space, options);
  os.flush();
  if (!os) throw io_error("write to '" + path.string() + "' failed");
}

}  // namespace gftl

#endif  // GFTLATENT_PLY_HPP
