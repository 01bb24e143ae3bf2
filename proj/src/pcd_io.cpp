#include "uavloc/pcd_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uavloc/error.hpp"

namespace uavloc {

namespace {

struct FieldSpec {
  std::string name;
  int size = 4;   // bytes per element
  char type = 'F';
  int count = 1;
};

struct PcdHeader {
  std::vector<FieldSpec> fields;
  long width = -1;
  long height = -1;
  long points = -1;
  std::string data;  // ascii | binary | binary_compressed
};

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

long parse_long(const std::string& s, const std::string& line) {
  char* end = nullptr;
  errno = 0;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError("PCD header: bad integer '" + s + "' in line: " + line);
  }
  return v;
}

// Reads one \n-terminated header line starting at pos; advances pos past it.
std::string next_line(std::string_view bytes, std::size_t& pos) {
  std::size_t nl = bytes.find('\n', pos);
  if (nl == std::string_view::npos) {
    throw ParseError("PCD header: unexpected end of data before DATA line");
  }
  std::string line(bytes.substr(pos, nl - pos));
  pos = nl + 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

PcdHeader parse_header(std::string_view bytes, std::size_t& pos) {
  PcdHeader h;
  while (true) {
    std::string line = next_line(bytes, pos);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];

    if (key == "VERSION") {
      // accepted as-is; 0.7 is the only version seen in practice
    } else if (key == "FIELDS") {
      h.fields.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) {
        FieldSpec f;
        f.name = tok[i];
        h.fields.push_back(f);
      }
      if (h.fields.empty()) throw ParseError("PCD header: FIELDS line empty: " + line);
    } else if (key == "SIZE") {
      if (tok.size() != h.fields.size() + 1) {
        throw ParseError("PCD header: SIZE count mismatch: " + line);
      }
      for (std::size_t i = 1; i < tok.size(); ++i) {
        long s = parse_long(tok[i], line);
        if (s != 1 && s != 2 && s != 4 && s != 8) {
          throw ParseError("PCD header: unsupported SIZE in line: " + line);
        }
        h.fields[i - 1].size = static_cast<int>(s);
      }
    } else if (key == "TYPE") {
      if (tok.size() != h.fields.size() + 1) {
        throw ParseError("PCD header: TYPE count mismatch: " + line);
      }
      for (std::size_t i = 1; i < tok.size(); ++i) {
        if (tok[i].size() != 1 || (tok[i] != "F" && tok[i] != "I" && tok[i] != "U")) {
          throw ParseError("PCD header: unsupported TYPE in line: " + line);
        }
        h.fields[i - 1].type = tok[i][0];
      }
    } else if (key == "COUNT") {
      if (tok.size() != h.fields.size() + 1) {
        throw ParseError("PCD header: COUNT count mismatch: " + line);
      }
      for (std::size_t i = 1; i < tok.size(); ++i) {
        long c = parse_long(tok[i], line);
        if (c < 1 || c > 1024) {
          throw ParseError("PCD header: bad COUNT in line: " + line);
        }
        h.fields[i - 1].count = static_cast<int>(c);
      }
    } else if (key == "WIDTH") {
      if (tok.size() != 2) throw ParseError("PCD header: bad WIDTH line: " + line);
      h.width = parse_long(tok[1], line);
    } else if (key == "HEIGHT") {
      if (tok.size() != 2) throw ParseError("PCD header: bad HEIGHT line: " + line);
      h.height = parse_long(tok[1], line);
    } else if (key == "VIEWPOINT") {
      // sensor pose, unused
    } else if (key == "POINTS") {
      if (tok.size() != 2) throw ParseError("PCD header: bad POINTS line: " + line);
      h.points = parse_long(tok[1], line);
      if (h.points < 0) throw ParseError("PCD header: negative POINTS: " + line);
    } else if (key == "DATA") {
      if (tok.size() != 2) throw ParseError("PCD header: bad DATA line: " + line);
      h.data = tok[1];
      break;
    } else {
      throw ParseError("PCD header: unknown keyword in line: " + line);
    }
  }
  if (h.fields.empty()) throw ParseError("PCD header: missing FIELDS");
  if (h.points < 0) {
    if (h.width >= 0 && h.height >= 0) {
      h.points = h.width * h.height;
    } else {
      throw ParseError("PCD header: missing POINTS");
    }
  }
  return h;
}

// Decodes one scalar from raw little-endian bytes.
double decode_scalar(const unsigned char* p, const FieldSpec& f) {
  switch (f.type) {
    case 'F':
      if (f.size == 4) {
        float v;
        std::memcpy(&v, p, 4);
        return v;
      } else {
        double v;
        std::memcpy(&v, p, 8);
        return v;
      }
    case 'I': {
      std::int64_t v = 0;
      if (f.size == 1) { std::int8_t t; std::memcpy(&t, p, 1); v = t; }
      else if (f.size == 2) { std::int16_t t; std::memcpy(&t, p, 2); v = t; }
      else if (f.size == 4) { std::int32_t t; std::memcpy(&t, p, 4); v = t; }
      else { std::int64_t t; std::memcpy(&t, p, 8); v = t; }
      return static_cast<double>(v);
    }
    default: {  // 'U'
      std::uint64_t v = 0;
      if (f.size == 1) { std::uint8_t t; std::memcpy(&t, p, 1); v = t; }
      else if (f.size == 2) { std::uint16_t t; std::memcpy(&t, p, 2); v = t; }
      else if (f.size == 4) { std::uint32_t t; std::memcpy(&t, p, 4); v = t; }
      else { std::uint64_t t; std::memcpy(&t, p, 8); v = t; }
      return static_cast<double>(v);
    }
  }
}

float parse_ascii_scalar(const std::string& tok) {
  char* end = nullptr;
  float v = std::strtof(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw ParseError("PCD body: bad numeric token '" + tok + "'");
  }
  return v;
}

}  // namespace

PointCloud parse_pcd(std::string_view bytes) {
  std::size_t pos = 0;
  PcdHeader h = parse_header(bytes, pos);

  if (h.data == "binary_compressed") {
    throw UnsupportedError("PCD: binary_compressed encoding is not supported");
  }
  if (h.data != "ascii" && h.data != "binary") {
    throw ParseError("PCD header: unknown DATA encoding '" + h.data + "'");
  }

  int xi = -1, yi = -1, zi = -1, ri = -1;
  for (std::size_t i = 0; i < h.fields.size(); ++i) {
    if (h.fields[i].name == "x") xi = static_cast<int>(i);
    else if (h.fields[i].name == "y") yi = static_cast<int>(i);
    else if (h.fields[i].name == "z") zi = static_cast<int>(i);
    else if (h.fields[i].name == "intensity") ri = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0) {
    throw ParseError("PCD header: FIELDS must include x y z");
  }

  PointCloud cloud;
  const std::size_t n = static_cast<std::size_t>(h.points);

  if (h.data == "binary") {
    std::size_t record = 0;
    std::vector<std::size_t> offset(h.fields.size());
    for (std::size_t i = 0; i < h.fields.size(); ++i) {
      offset[i] = record;
      record += static_cast<std::size_t>(h.fields[i].size) * h.fields[i].count;
    }
    std::size_t avail = bytes.size() - pos;
    std::size_t expected = record * n;
    if (avail < expected) {
      throw ParseError("PCD body: truncated binary data, expected " +
                       std::to_string(expected) + " bytes, got " +
                       std::to_string(avail));
    }
    cloud.points.resize(n);
    const unsigned char* base =
        reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char* rec = base + i * record;
      LidarPoint p;
      p.x = static_cast<float>(decode_scalar(rec + offset[xi], h.fields[xi]));
      p.y = static_cast<float>(decode_scalar(rec + offset[yi], h.fields[yi]));
      p.z = static_cast<float>(decode_scalar(rec + offset[zi], h.fields[zi]));
      p.r = ri >= 0
                ? static_cast<float>(decode_scalar(rec + offset[ri], h.fields[ri]))
                : 0.0f;
      cloud.points[i] = p;
    }
  } else {
    // token index of the first element of each field within a record line
    std::vector<std::size_t> tok_off(h.fields.size());
    std::size_t ntok = 0;
    for (std::size_t i = 0; i < h.fields.size(); ++i) {
      tok_off[i] = ntok;
      ntok += static_cast<std::size_t>(h.fields[i].count);
    }
    cloud.points.reserve(std::min<std::size_t>(n, 1u << 20));
    std::size_t got = 0;
    while (got < n) {
      if (pos >= bytes.size()) {
        throw ParseError("PCD body: truncated ascii data, expected " +
                         std::to_string(n) + " records, got " +
                         std::to_string(got));
      }
      std::size_t nl = bytes.find('\n', pos);
      std::string line(bytes.substr(
          pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos));
      pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> tok = split_ws(line);
      if (tok.size() != ntok) {
        throw ParseError("PCD body: record " + std::to_string(got) + " has " +
                         std::to_string(tok.size()) + " values, expected " +
                         std::to_string(ntok));
      }
      LidarPoint p;
      p.x = parse_ascii_scalar(tok[tok_off[xi]]);
      p.y = parse_ascii_scalar(tok[tok_off[yi]]);
      p.z = parse_ascii_scalar(tok[tok_off[zi]]);
      p.r = ri >= 0 ? parse_ascii_scalar(tok[tok_off[ri]]) : 0.0f;
      cloud.points.push_back(p);
      ++got;
    }
  }
  return cloud;
}

PointCloud parse_pcd_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open PCD file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_pcd(ss.str());
}

std::string write_pcd(const PointCloud& cloud, PcdEncoding encoding) {
  std::ostringstream out;
  const std::size_t n = cloud.points.size();
  out << "# .PCD v0.7 - Point Cloud Data file format\n"
      << "VERSION 0.7\n"
      << "FIELDS x y z intensity\n"
      << "SIZE 4 4 4 4\n"
      << "TYPE F F F F\n"
      << "COUNT 1 1 1 1\n"
      << "WIDTH " << n << "\n"
      << "HEIGHT 1\n"
      << "VIEWPOINT 0 0 0 1 0 0 0\n"
      << "POINTS " << n << "\n"
      << "DATA " << (encoding == PcdEncoding::kAscii ? "ascii" : "binary")
      << "\n";

  if (encoding == PcdEncoding::kAscii) {
    char buf[160];
    for (const LidarPoint& p : cloud.points) {
      // %.9g round-trips every finite float exactly
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g\n", p.x, p.y, p.z,
                    p.r);
      out << buf;
    }
  } else {
    static_assert(sizeof(LidarPoint) == 16, "LidarPoint must be packed xyzr");
    out.write(reinterpret_cast<const char*>(cloud.points.data()),
              static_cast<std::streamsize>(n * sizeof(LidarPoint)));
  }
  return out.str();
}

void write_pcd_file(const PointCloud& cloud, const std::string& path,
                    PcdEncoding encoding) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open PCD file for writing: " + path);
  std::string data = write_pcd(cloud, encoding);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw ParseError("I/O failure writing PCD file: " + path);
}

PointCloud crop(const PointCloud& cloud, const CropBounds& bounds) {
  if (!bounds.valid()) {
    throw ContractError("crop: bounds must satisfy min < max on every axis");
  }
  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.frame_id = cloud.frame_id;
  for (const LidarPoint& p : cloud.points) {
    if (!p.finite()) continue;
    if (bounds.contains(p.x, p.y, p.z)) out.points.push_back(p);
  }
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line(text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) {
      throw ParseError("manifest line " + std::to_string(lineno) +
                       ": expected '<path>,<timestamp>': " + line);
    }
    ManifestEntry e;
    e.pcd_path = line.substr(0, comma);
    std::string ts = line.substr(comma + 1);
    char* end = nullptr;
    e.timestamp = std::strtod(ts.c_str(), &end);
    if (end == ts.c_str() || *end != '\0') {
      throw ParseError("manifest line " + std::to_string(lineno) +
                       ": bad timestamp: " + ts);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open manifest: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str());
}

std::string write_manifest(const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  char buf[64];
  for (const ManifestEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.timestamp);
    out << e.pcd_path << ',' << buf << '\n';
  }
  return out.str();
}

const char* to_string(EstimateSource s) {
  switch (s) {
    case EstimateSource::kClustering: return "clustering";
    case EstimateSource::kNetwork: return "network";
    case EstimateSource::kTruth: return "truth";
  }
  return "unknown";
}

EstimateSource estimate_source_from_string(const std::string& s) {
  if (s == "clustering") return EstimateSource::kClustering;
  if (s == "network") return EstimateSource::kNetwork;
  if (s == "truth") return EstimateSource::kTruth;
  throw ParseError("unknown estimate source: " + s);
}

}  // namespace uavloc
