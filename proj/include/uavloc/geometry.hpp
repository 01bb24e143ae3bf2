#ifndef UAVLOC_GEOMETRY_HPP
#define UAVLOC_GEOMETRY_HPP

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "uavloc/types.hpp"

namespace uavloc {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

// 3D position error d between a predicted and a truth position estimate.
double position_error(const PositionEstimate& predicted,
                      const PositionEstimate& truth);

// Intersection-over-union of the two boxes' footprints in the x-y plane.
// Requires yaw-only rotation; throws ContractError otherwise and throws
// on degenerate (non-positive length) boxes.
double bev_iou(const Cuboid& a, const Cuboid& b);

// The 8 corners of the yaw-rotated box. Corner order: z-bottom face then
// z-top face, each counter-clockwise.
std::array<Vec3, 8> cuboid_corners(const Cuboid& c);

// Footprint of the box in the x-y plane as 4 CCW corners.
std::array<std::array<double, 2>, 4> bev_footprint(const Cuboid& c);

// Label file: one CSV row per annotated object,
// <timestamp>,<x_ctr>,<y_ctr>,<z_ctr>,<x_len>,<y_len>,<z_len>,<x_rot>,<y_rot>,<z_rot>
enum class AngleUnit { kRadians, kDegrees };

struct LabelEntry {
  double timestamp = 0.0;
  Cuboid box;  // rotations in radians after ingestion
};

std::vector<LabelEntry> parse_labels(std::string_view text,
                                     AngleUnit unit = AngleUnit::kRadians);
std::vector<LabelEntry> read_labels(const std::string& path,
                                    AngleUnit unit = AngleUnit::kRadians);
std::string write_labels(const std::vector<LabelEntry>& labels);

}  // namespace uavloc

#endif
