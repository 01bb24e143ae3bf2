#ifndef UAVLOC_PCD_IO_HPP
#define UAVLOC_PCD_IO_HPP

#include <string>
#include <string_view>
#include <vector>

#include "uavloc/types.hpp"

namespace uavloc {

enum class PcdEncoding { kAscii, kBinary };

// Parse a PCD v0.7 byte stream (ASCII or binary). FIELDS must include
// x y z; intensity is optional and defaults to 0. NaN points are kept
// as-is; drop them with crop(). Throws ParseError on malformed input and
// UnsupportedError on binary_compressed data.
PointCloud parse_pcd(std::string_view bytes);
PointCloud parse_pcd_file(const std::string& path);

// Serialize a cloud so that parse_pcd(write_pcd(c)) == c field-for-field.
std::string write_pcd(const PointCloud& cloud, PcdEncoding encoding);
void write_pcd_file(const PointCloud& cloud, const std::string& path,
                    PcdEncoding encoding);

// Keep points inside the half-open box [min, max) on every axis.
// Non-finite points are dropped; order of survivors is preserved.
PointCloud crop(const PointCloud& cloud, const CropBounds& bounds);

// Dataset manifest: one `<relative_pcd_path>,<timestamp_seconds>` record
// per scan, comma-separated, LF line endings.
struct ManifestEntry {
  std::string pcd_path;  // relative to the manifest file's directory
  double timestamp = 0.0;
};

std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::vector<ManifestEntry> read_manifest(const std::string& path);
std::string write_manifest(const std::vector<ManifestEntry>& entries);

}  // namespace uavloc

#endif
