#ifndef UAVLOC_CLUSTER_HPP
#define UAVLOC_CLUSTER_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "uavloc/geometry.hpp"
#include "uavloc/types.hpp"

namespace uavloc {

// Hollow-sphere segmentation around the sensor, seeded by a UWB-style
// range measurement. Inner radius is max(range - margin, 0), outer is
// range + margin.
struct ShellParams {
  double range = 0.0;   // meters
  double margin = 2.0;  // meters

  double inner() const { return range > margin ? range - margin : 0.0; }
  double outer() const { return range + margin; }
};

// Cluster-level acceptance tests: altitude window, minimum bounding-box
// volume, and a shape constraint on the allowed spread between box
// length, width and height.
struct HeuristicConfig {
  double altimeter_height = 1.0;  // meters
  double height_tolerance = 0.3;  // meters
  double min_volume = 0.01;       // cubic meters
  double max_aspect_diff = 0.5;   // meters
};

struct ClusterParams {
  double link_radius = 0.3;  // meters
  std::size_t min_points = 5;
};

struct Cluster {
  std::vector<std::size_t> point_indices;  // into the source cloud
  Cuboid bbox;                             // tight, axis-aligned, zero yaw
  Vec3 centroid;                           // arithmetic mean of member points
};

// Keep points p with inner <= ||p|| <= outer, distances from the sensor
// origin. Non-finite points are dropped.
PointCloud shell_segment(const PointCloud& cloud, const ShellParams& shell);

// Connected components of the graph linking points within link_radius
// (single-link Euclidean clustering over a uniform spatial hash grid).
// Components smaller than min_points are discarded. Clusters are ordered
// by their smallest member index.
std::vector<Cluster> euclidean_cluster(const PointCloud& cloud,
                                       double link_radius,
                                       std::size_t min_points);

// Lloyd's k-means over point positions, exposed behind the same Cluster
// interface for comparison with the Euclidean mode. Empty clusters and
// clusters smaller than min_points are dropped.
std::vector<Cluster> kmeans_cluster(const PointCloud& cloud, std::size_t k,
                                    std::size_t min_points, int iterations,
                                    std::uint64_t seed);

// Keep clusters passing all three heuristics; input order preserved.
std::vector<Cluster> apply_heuristics(const std::vector<Cluster>& clusters,
                                      const HeuristicConfig& cfg);

// Full baseline pipeline: shell -> cluster -> heuristics. With multiple
// survivors the one whose centroid range is closest to shell.range wins.
std::optional<PositionEstimate> localize_clustering(
    const PointCloud& cloud, const ShellParams& shell,
    const HeuristicConfig& cfg, const ClusterParams& params = {});

// Velocity-threshold acceptance filter. Owns the last accepted estimate;
// one instance per tracked flight. Note the documented failure mode: a
// long data gap inflates the allowed displacement, and a wrong accepted
// estimate can then cause every later candidate to be rejected.
class VelocityGate {
 public:
  explicit VelocityGate(double max_speed = 0.5) : max_speed_(max_speed) {}

  // Accepts when no prior estimate exists or when the implied speed is
  // within max_speed; acceptance updates the stored estimate. Throws
  // ContractError on a non-monotonic timestamp.
  bool offer(const PositionEstimate& candidate);

  const std::optional<PositionEstimate>& last_estimate() const {
    return last_;
  }
  double max_speed() const { return max_speed_; }

 private:
  double max_speed_;
  std::optional<PositionEstimate> last_;
};

}  // namespace uavloc

#endif
