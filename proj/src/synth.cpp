#include "uavloc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "uavloc/error.hpp"
#include "uavloc/rng.hpp"

namespace uavloc {

namespace {

std::uint64_t time_key(double t) {
  std::uint64_t bits;
  std::memcpy(&bits, &t, sizeof(bits));
  return bits;
}

bool inside_inflated(const Cuboid& box, double inflate, double x, double y,
                     double z) {
  return std::abs(x - box.x_ctr) <= 0.5 * box.x_len + inflate &&
         std::abs(y - box.y_ctr) <= 0.5 * box.y_len + inflate &&
         std::abs(z - box.z_ctr) <= 0.5 * box.z_len + inflate;
}

// Uniform point on the surface of an axis-aligned box (local frame,
// centered at origin).
Vec3 sample_box_surface(double lx, double ly, double lz, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double axy = lx * ly, axz = lx * lz, ayz = ly * lz;
  double total = 2.0 * (axy + axz + ayz);
  double pick = u01(rng) * total;
  double a = u01(rng) - 0.5, b = u01(rng) - 0.5;
  double sign = u01(rng) < 0.5 ? -0.5 : 0.5;
  if (pick < 2.0 * axy) return {a * lx, b * ly, sign * lz};        // top/bottom
  if (pick < 2.0 * (axy + axz)) return {a * lx, sign * ly, b * lz};  // sides y
  return {sign * lx, a * ly, b * lz};                               // sides x
}

void append_plane(PointCloud& cloud, const Cuboid& avoid, double density,
                  std::mt19937_64& rng,
                  // plane given by origin corner and two in-plane extents;
                  // axis = 0 plane normal to x, 1 to y, 2 to z
                  int axis, double fixed, double u0, double u1, double v0,
                  double v1) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double area = (u1 - u0) * (v1 - v0);
  int n = static_cast<int>(std::floor(area * density));
  for (int i = 0; i < n; ++i) {
    double u = u0 + u01(rng) * (u1 - u0);
    double v = v0 + u01(rng) * (v1 - v0);
    double x, y, z;
    if (axis == 0) {
      x = fixed; y = u; z = v;
    } else if (axis == 1) {
      x = u; y = fixed; z = v;
    } else {
      x = u; y = v; z = fixed;
    }
    if (inside_inflated(avoid, 0.1, x, y, z)) continue;
    LidarPoint p;
    p.x = float(x);
    p.y = float(y);
    p.z = float(z);
    p.r = float(u01(rng) * 255.0);
    cloud.points.push_back(p);
  }
}

}  // namespace

double SceneSpec::t_begin() const {
  return trajectory.empty() ? 0.0 : trajectory.front().t;
}

double SceneSpec::t_end() const {
  return trajectory.empty() ? 0.0 : trajectory.back().t;
}

Vec3 SceneSpec::position_at(double t) const {
  if (trajectory.empty()) throw ContractError("scene: empty trajectory");
  if (t <= trajectory.front().t) return trajectory.front().position;
  if (t >= trajectory.back().t) return trajectory.back().position;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (t <= trajectory[i].t) {
      const Waypoint& a = trajectory[i - 1];
      const Waypoint& b = trajectory[i];
      double span = b.t - a.t;
      double f = span > 0 ? (t - a.t) / span : 0.0;
      return {a.position.x + f * (b.position.x - a.position.x),
              a.position.y + f * (b.position.y - a.position.y),
              a.position.z + f * (b.position.z - a.position.z)};
    }
  }
  return trajectory.back().position;
}

void SceneSpec::validate() const {
  if (tunnel_length <= 0 || tunnel_width <= 0 || tunnel_height <= 0) {
    throw ConfigError("scene: tunnel dimensions must be positive");
  }
  if (drone_x_len <= 0 || drone_y_len <= 0 || drone_z_len <= 0) {
    throw ConfigError("scene: drone extents must be positive");
  }
  if (drone_points < 1) throw ConfigError("scene: drone_points must be >= 1");
  if (wall_density < 0) throw ConfigError("scene: wall_density must be >= 0");
  if (trajectory.empty()) throw ConfigError("scene: trajectory is empty");
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (trajectory[i].t < trajectory[i - 1].t) {
      throw ConfigError("scene: trajectory waypoints must be time-sorted");
    }
  }
}

SceneSpec SceneSpec::from_config(const Config& cfg) {
  SceneSpec s;
  s.tunnel_length = cfg.get_double("scene.tunnel_length", s.tunnel_length);
  s.tunnel_width = cfg.get_double("scene.tunnel_width", s.tunnel_width);
  s.tunnel_height = cfg.get_double("scene.tunnel_height", s.tunnel_height);
  s.wall_density = cfg.get_double("scene.wall_density", s.wall_density);
  s.drone_x_len = cfg.get_double("scene.drone_x_len", s.drone_x_len);
  s.drone_y_len = cfg.get_double("scene.drone_y_len", s.drone_y_len);
  s.drone_z_len = cfg.get_double("scene.drone_z_len", s.drone_z_len);
  s.drone_points = int(cfg.get_int("scene.drone_points", s.drone_points));
  s.noise_sigma = cfg.get_double("scene.noise_sigma", s.noise_sigma);
  s.clutter_blobs = int(cfg.get_int("scene.clutter_blobs", s.clutter_blobs));
  s.clutter_min_size = cfg.get_double("scene.clutter_min_size", s.clutter_min_size);
  s.clutter_max_size = cfg.get_double("scene.clutter_max_size", s.clutter_max_size);
  s.seed = std::uint64_t(cfg.get_int("scene.seed", 0));
  if (cfg.has("scene.trajectory")) {
    // "t:x:y:z;t:x:y:z;..."
    s.trajectory.clear();
    std::istringstream ss(cfg.get_string("scene.trajectory"));
    std::string item;
    while (std::getline(ss, item, ';')) {
      Waypoint w;
      if (std::sscanf(item.c_str(), "%lf:%lf:%lf:%lf", &w.t, &w.position.x,
                      &w.position.y, &w.position.z) != 4) {
        throw ConfigError("scene.trajectory: expected 't:x:y:z' items, got: " +
                          item);
      }
      s.trajectory.push_back(w);
    }
  } else {
    // default pass down the tunnel at hover height; stays under the
    // 0.5 m/s velocity gate bound (~0.41 m/s)
    s.trajectory = {{0.0, {4.0, -1.0, 1.2}}, {20.0, {12.0, 0.5, 1.2}}};
  }
  s.validate();
  return s;
}

Frame generate_frame(const SceneSpec& spec, double t) {
  spec.validate();
  if (t < spec.t_begin() || t > spec.t_end()) {
    throw ContractError("generate_frame: t outside the trajectory span");
  }
  std::mt19937_64 rng(mix_seed(spec.seed, time_key(t)));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Frame f;
  f.cloud.timestamp = t;
  f.cloud.frame_id = "lidar";

  Vec3 ctr = spec.position_at(t);
  f.truth_box.x_ctr = ctr.x;
  f.truth_box.y_ctr = ctr.y;
  f.truth_box.z_ctr = ctr.z;
  f.truth_box.x_len = spec.drone_x_len;
  f.truth_box.y_len = spec.drone_y_len;
  f.truth_box.z_len = spec.drone_z_len;
  f.truth = {ctr.x, ctr.y, ctr.z, t, EstimateSource::kTruth};
  f.range_m = std::sqrt(ctr.x * ctr.x + ctr.y * ctr.y + ctr.z * ctr.z);

  // tunnel shell: floor, ceiling, two side walls
  const double x0 = 1.0, x1 = 1.0 + spec.tunnel_length;
  const double hw = 0.5 * spec.tunnel_width;
  const double hz = spec.tunnel_height;
  append_plane(f.cloud, f.truth_box, spec.wall_density, rng, 2, 0.0, x0, x1,
               -hw, hw);
  append_plane(f.cloud, f.truth_box, spec.wall_density, rng, 2, hz, x0, x1,
               -hw, hw);
  append_plane(f.cloud, f.truth_box, spec.wall_density, rng, 1, -hw, x0, x1,
               0.0, hz);
  append_plane(f.cloud, f.truth_box, spec.wall_density, rng, 1, hw, x0, x1,
               0.0, hz);

  // clutter blobs on the floor
  for (int b = 0; b < spec.clutter_blobs; ++b) {
    double sx = spec.clutter_min_size +
                u01(rng) * (spec.clutter_max_size - spec.clutter_min_size);
    double sy = spec.clutter_min_size +
                u01(rng) * (spec.clutter_max_size - spec.clutter_min_size);
    double sz = spec.clutter_min_size +
                u01(rng) * (spec.clutter_max_size - spec.clutter_min_size);
    double bx = x0 + 0.5 + u01(rng) * (spec.tunnel_length - 1.0);
    double by = -hw + 0.5 + u01(rng) * (spec.tunnel_width - 1.0);
    double bz = u01(rng) * (hz - sz) + 0.5 * sz;
    int n = 30 + int(u01(rng) * 40);
    for (int i = 0; i < n; ++i) {
      Vec3 s = sample_box_surface(sx, sy, sz, rng);
      double x = bx + s.x, y = by + s.y, z = bz + s.z;
      if (inside_inflated(f.truth_box, 0.1, x, y, z)) continue;
      LidarPoint p;
      p.x = float(x);
      p.y = float(y);
      p.z = float(z);
      p.r = float(u01(rng) * 255.0);
      f.cloud.points.push_back(p);
    }
  }

  // drone surface returns, sampled in antipodal pairs so the zero-noise
  // centroid is exactly the box center
  int pairs = spec.drone_points / 2;
  for (int i = 0; i < pairs; ++i) {
    Vec3 s = sample_box_surface(spec.drone_x_len, spec.drone_y_len,
                                spec.drone_z_len, rng);
    for (int sgn : {+1, -1}) {
      LidarPoint p;
      p.x = float(ctr.x + sgn * s.x);
      p.y = float(ctr.y + sgn * s.y);
      p.z = float(ctr.z + sgn * s.z);
      p.r = float(u01(rng) * 255.0);
      f.cloud.points.push_back(p);
    }
  }
  if (spec.drone_points % 2 == 1) {
    LidarPoint p;
    p.x = float(ctr.x);
    p.y = float(ctr.y);
    p.z = float(ctr.z + 0.5 * spec.drone_z_len);
    p.r = float(u01(rng) * 255.0);
    f.cloud.points.push_back(p);
  }

  if (spec.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (LidarPoint& p : f.cloud.points) {
      p.x += float(noise(rng));
      p.y += float(noise(rng));
      p.z += float(noise(rng));
    }
  }
  return f;
}

Dataset generate_dataset(const SceneSpec& spec, double frame_rate,
                         double split) {
  spec.validate();
  if (frame_rate <= 0) throw ConfigError("dataset: frame_rate must be positive");
  if (split <= 0 || split >= 1) {
    throw ConfigError("dataset: split must lie in (0, 1)");
  }
  Dataset ds;
  const double span = spec.t_end() - spec.t_begin();
  const std::size_t n = std::size_t(std::floor(span * frame_rate)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    double t = spec.t_begin() + double(i) / frame_rate;
    ds.timestamps.push_back(t);
    ds.frames.push_back(generate_frame(spec, t));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(spec.seed, 0x53504C54ULL));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t ntrain = std::size_t(std::lround(split * double(n)));
  ds.train_indices.assign(order.begin(), order.begin() + ntrain);
  ds.test_indices.assign(order.begin() + ntrain, order.end());
  std::sort(ds.train_indices.begin(), ds.train_indices.end());
  std::sort(ds.test_indices.begin(), ds.test_indices.end());
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& out_dir,
                   PcdEncoding encoding) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/clouds");

  auto atomic_write = [](const std::string& path, const std::string& data) {
    std::string tmp = path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw ParseError("cannot open for writing: " + tmp);
      f.write(data.data(), std::streamsize(data.size()));
    }
    fs::rename(tmp, path);
  };

  std::vector<ManifestEntry> all, train, test;
  std::vector<LabelEntry> labels;
  std::vector<PositionEstimate> truth;
  std::vector<RangeSample> ranges;
  char name[64];
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "clouds/frame_%06zu.pcd", i);
    atomic_write(out_dir + "/" + name, write_pcd(ds.frames[i].cloud, encoding));
    ManifestEntry e{name, ds.timestamps[i]};
    all.push_back(e);
    labels.push_back({ds.timestamps[i], ds.frames[i].truth_box});
    truth.push_back(ds.frames[i].truth);
    ranges.push_back({ds.timestamps[i], ds.frames[i].range_m});
  }
  for (std::size_t i : ds.train_indices) train.push_back(all[i]);
  for (std::size_t i : ds.test_indices) test.push_back(all[i]);

  atomic_write(out_dir + "/manifest.csv", write_manifest(all));
  atomic_write(out_dir + "/train_manifest.csv", write_manifest(train));
  atomic_write(out_dir + "/test_manifest.csv", write_manifest(test));
  atomic_write(out_dir + "/labels.csv", write_labels(labels));
  atomic_write(out_dir + "/truth.csv", write_estimates(truth));
  atomic_write(out_dir + "/range.csv", write_ranges(ranges));
}

}  // namespace uavloc
