#ifndef UAVLOC_TYPES_HPP
#define UAVLOC_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace uavloc {

// Single LiDAR return in the sensor frame. r is the (unitless) intensity.
struct LidarPoint {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float r = 0.0f;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
           std::isfinite(r);
  }
};

// Unorganized point cloud. Immutable by convention after construction;
// safe to share read-only across workers.
struct PointCloud {
  std::vector<LidarPoint> points;
  double timestamp = 0.0;  // seconds, monotonic epoch time
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Axis-aligned crop region, half-open on every axis: [min, max).
struct CropBounds {
  double x_min, x_max;
  double y_min, y_max;
  double z_min, z_max;

  bool valid() const {
    return x_min < x_max && y_min < y_max && z_min < z_max;
  }
  bool contains(double x, double y, double z) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max &&
           z >= z_min && z < z_max;
  }
};

// Oriented 3D bounding box in the nine-element cuboid parameterization:
// center, lengths, per-axis rotation. All geometry ops assume yaw-only
// rotation (x_rot = y_rot = 0); the other two angles are carried through
// label files untouched.
struct Cuboid {
  double x_ctr = 0, y_ctr = 0, z_ctr = 0;  // meters
  double x_len = 0, y_len = 0, z_len = 0;  // meters
  double x_rot = 0, y_rot = 0, z_rot = 0;  // radians

  double volume() const { return x_len * y_len * z_len; }
};

// One detector output: a box plus class confidence.
struct Detection {
  Cuboid box;
  double score = 0.0;  // in [0, 1]
  int class_id = 0;    // single class: UAV = 0
};

enum class EstimateSource { kClustering, kNetwork, kTruth };

const char* to_string(EstimateSource s);
EstimateSource estimate_source_from_string(const std::string& s);

// Relative UAV position in the sensor frame.
struct PositionEstimate {
  double x = 0, y = 0, z = 0;  // meters
  double timestamp = 0;        // seconds
  EstimateSource source = EstimateSource::kClustering;
};

}  // namespace uavloc

#endif
