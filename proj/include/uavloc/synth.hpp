#ifndef UAVLOC_SYNTH_HPP
#define UAVLOC_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "uavloc/config.hpp"
#include "uavloc/eval.hpp"
#include "uavloc/geometry.hpp"
#include "uavloc/pcd_io.hpp"
#include "uavloc/types.hpp"

namespace uavloc {

struct Waypoint {
  double t = 0.0;  // seconds
  Vec3 position;
};

// Synthetic tunnel flight with exact ground truth. The drone is modeled
// as points sampled on a cuboid surface; wall points that would fall
// inside the drone box (inflated by 0.1 m) are dropped.
struct SceneSpec {
  double tunnel_length = 18.0;  // x extent, meters, starting at x = 1
  double tunnel_width = 6.0;    // y extent, centered on y = 0
  double tunnel_height = 3.0;   // z extent above the floor at z = 0
  double wall_density = 40.0;   // points per square meter
  double drone_x_len = 0.5, drone_y_len = 0.5, drone_z_len = 0.3;
  int drone_points = 60;
  std::vector<Waypoint> trajectory;
  double noise_sigma = 0.0;  // isotropic Gaussian, meters
  int clutter_blobs = 0;
  double clutter_min_size = 0.2, clutter_max_size = 1.5;
  std::uint64_t seed = 0;

  double t_begin() const;
  double t_end() const;
  Vec3 position_at(double t) const;  // piecewise-linear interpolation

  void validate() const;
  static SceneSpec from_config(const Config& cfg);
};

struct Frame {
  PointCloud cloud;
  Cuboid truth_box;
  PositionEstimate truth;
  double range_m = 0.0;  // simulated UWB range: ||drone center||
};

// Deterministic per (spec, t). Throws ContractError when t lies outside
// the trajectory span.
Frame generate_frame(const SceneSpec& spec, double t);

struct Dataset {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<Frame> frames;
  std::vector<double> timestamps;
};

// Frames at the given rate over the trajectory span, seeded shuffle, then
// a train/test split (train fraction = split).
Dataset generate_dataset(const SceneSpec& spec, double frame_rate,
                         double split);

// Writes PCDs plus manifest / labels / truth / range files in the formats
// the rest of the toolkit consumes. Produces manifest.csv (all frames),
// train_manifest.csv, test_manifest.csv, labels.csv, truth.csv, range.csv.
void write_dataset(const Dataset& ds, const std::string& out_dir,
                   PcdEncoding encoding = PcdEncoding::kBinary);

}  // namespace uavloc

#endif
