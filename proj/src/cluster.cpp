#include "uavloc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <unordered_map>

#include "uavloc/error.hpp"

namespace uavloc {

namespace {

Cluster make_cluster(const PointCloud& cloud,
                     std::vector<std::size_t> indices) {
  Cluster c;
  c.point_indices = std::move(indices);
  double lo[3] = {std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  double hi[3] = {-lo[0], -lo[1], -lo[2]};
  double sum[3] = {0, 0, 0};
  for (std::size_t i : c.point_indices) {
    const LidarPoint& p = cloud.points[i];
    double v[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
      sum[a] += v[a];
    }
  }
  const double n = static_cast<double>(c.point_indices.size());
  c.centroid = {sum[0] / n, sum[1] / n, sum[2] / n};
  c.bbox.x_ctr = 0.5 * (lo[0] + hi[0]);
  c.bbox.y_ctr = 0.5 * (lo[1] + hi[1]);
  c.bbox.z_ctr = 0.5 * (lo[2] + hi[2]);
  c.bbox.x_len = hi[0] - lo[0];
  c.bbox.y_len = hi[1] - lo[1];
  c.bbox.z_len = hi[2] - lo[2];
  return c;
}

struct CellKey {
  std::int32_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint32_t>(k.x);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(k.y);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(k.z);
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

}  // namespace

PointCloud shell_segment(const PointCloud& cloud, const ShellParams& shell) {
  if (shell.range <= 0 || shell.margin <= 0) {
    throw ContractError("shell_segment: range and margin must be positive");
  }
  const double inner2 = shell.inner() * shell.inner();
  const double outer2 = shell.outer() * shell.outer();
  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.frame_id = cloud.frame_id;
  for (const LidarPoint& p : cloud.points) {
    if (!p.finite()) continue;
    double d2 = double(p.x) * p.x + double(p.y) * p.y + double(p.z) * p.z;
    if (d2 >= inner2 && d2 <= outer2) out.points.push_back(p);
  }
  return out;
}

std::vector<Cluster> euclidean_cluster(const PointCloud& cloud,
                                       double link_radius,
                                       std::size_t min_points) {
  if (link_radius <= 0) {
    throw ContractError("euclidean_cluster: link_radius must be positive");
  }
  if (min_points < 1) {
    throw ContractError("euclidean_cluster: min_points must be >= 1");
  }
  const std::size_t n = cloud.points.size();
  std::vector<Cluster> result;
  if (n == 0) return result;

  // Uniform grid with cell size = link_radius; neighbors within the
  // radius are confined to the 27 surrounding cells.
  const double inv = 1.0 / link_radius;
  auto cell_of = [&](const LidarPoint& p) {
    return CellKey{static_cast<std::int32_t>(std::floor(p.x * inv)),
                   static_cast<std::int32_t>(std::floor(p.y * inv)),
                   static_cast<std::int32_t>(std::floor(p.z * inv))};
  };
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) grid[cell_of(cloud.points[i])].push_back(i);

  const double r2 = link_radius * link_radius;
  std::vector<int> label(n, -1);
  std::vector<std::size_t> stack;
  int next_label = 0;

  for (std::size_t seed = 0; seed < n; ++seed) {
    if (label[seed] >= 0) continue;
    int lbl = next_label++;
    label[seed] = lbl;
    stack.assign(1, seed);
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      const LidarPoint& pi = cloud.points[i];
      CellKey c = cell_of(pi);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            auto it = grid.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
            if (it == grid.end()) continue;
            for (std::size_t j : it->second) {
              if (label[j] >= 0) continue;
              double ddx = double(pi.x) - cloud.points[j].x;
              double ddy = double(pi.y) - cloud.points[j].y;
              double ddz = double(pi.z) - cloud.points[j].z;
              if (ddx * ddx + ddy * ddy + ddz * ddz <= r2) {
                label[j] = lbl;
                stack.push_back(j);
              }
            }
          }
    }
  }

  std::vector<std::vector<std::size_t>> members(next_label);
  for (std::size_t i = 0; i < n; ++i) {
    members[label[i]].push_back(i);  // ascending order by construction
  }
  for (auto& m : members) {
    if (m.size() >= min_points) result.push_back(make_cluster(cloud, std::move(m)));
  }
  // labels are assigned in order of smallest member index, so result is
  // already ordered that way
  return result;
}

std::vector<Cluster> kmeans_cluster(const PointCloud& cloud, std::size_t k,
                                    std::size_t min_points, int iterations,
                                    std::uint64_t seed) {
  const std::size_t n = cloud.points.size();
  std::vector<Cluster> result;
  if (n == 0 || k == 0) return result;
  k = std::min(k, n);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec3> centers(k);
  for (std::size_t c = 0; c < k; ++c) {
    const LidarPoint& p = cloud.points[perm[c]];
    centers[c] = {p.x, p.y, p.z};
  }

  std::vector<std::size_t> assign(n, 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const LidarPoint& p = cloud.points[i];
      double best = std::numeric_limits<double>::infinity();
      std::size_t bc = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double dx = p.x - centers[c].x, dy = p.y - centers[c].y,
               dz = p.z - centers[c].z;
        double d = dx * dx + dy * dy + dz * dz;
        if (d < best) {
          best = d;
          bc = c;
        }
      }
      if (assign[i] != bc) {
        assign[i] = bc;
        changed = true;
      }
    }
    std::vector<Vec3> sums(k);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const LidarPoint& p = cloud.points[i];
      sums[assign[i]].x += p.x;
      sums[assign[i]].y += p.y;
      sums[assign[i]].z += p.z;
      ++cnt[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] > 0) {
        centers[c] = {sums[c].x / cnt[c], sums[c].y / cnt[c],
                      sums[c].z / cnt[c]};
      }
    }
    if (!changed && it > 0) break;
  }

  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < n; ++i) members[assign[i]].push_back(i);
  for (auto& m : members) {
    if (m.size() >= min_points) result.push_back(make_cluster(cloud, std::move(m)));
  }
  return result;
}

std::vector<Cluster> apply_heuristics(const std::vector<Cluster>& clusters,
                                      const HeuristicConfig& cfg) {
  std::vector<Cluster> out;
  for (const Cluster& c : clusters) {
    bool height_ok =
        std::abs(c.bbox.z_ctr - cfg.altimeter_height) <= cfg.height_tolerance;
    bool volume_ok = c.bbox.volume() >= cfg.min_volume;
    double mx = std::max({c.bbox.x_len, c.bbox.y_len, c.bbox.z_len});
    double mn = std::min({c.bbox.x_len, c.bbox.y_len, c.bbox.z_len});
    bool shape_ok = (mx - mn) <= cfg.max_aspect_diff;
    if (height_ok && volume_ok && shape_ok) out.push_back(c);
  }
  return out;
}

std::optional<PositionEstimate> localize_clustering(
    const PointCloud& cloud, const ShellParams& shell,
    const HeuristicConfig& cfg, const ClusterParams& params) {
  PointCloud shelled = shell_segment(cloud, shell);
  std::vector<Cluster> clusters =
      euclidean_cluster(shelled, params.link_radius, params.min_points);
  std::vector<Cluster> survivors = apply_heuristics(clusters, cfg);
  if (survivors.empty()) return std::nullopt;

  const Cluster* pick = &survivors[0];
  if (survivors.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    for (const Cluster& c : survivors) {
      double range = std::sqrt(c.centroid.x * c.centroid.x +
                               c.centroid.y * c.centroid.y +
                               c.centroid.z * c.centroid.z);
      double dev = std::abs(range - shell.range);
      if (dev < best) {
        best = dev;
        pick = &c;
      }
    }
  }
  PositionEstimate est;
  est.x = pick->bbox.x_ctr;
  est.y = pick->bbox.y_ctr;
  est.z = pick->bbox.z_ctr;
  est.timestamp = cloud.timestamp;
  est.source = EstimateSource::kClustering;
  return est;
}

bool VelocityGate::offer(const PositionEstimate& candidate) {
  if (!last_) {
    last_ = candidate;
    return true;
  }
  if (candidate.timestamp < last_->timestamp) {
    throw ContractError("velocity_gate: candidate timestamp precedes the "
                        "last accepted estimate");
  }
  double dt = candidate.timestamp - last_->timestamp;
  double dx = candidate.x - last_->x;
  double dy = candidate.y - last_->y;
  double dz = candidate.z - last_->z;
  double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
  // dt == 0 with zero displacement is a duplicate sample; accept it
  bool ok = dt > 0 ? (dist / dt <= max_speed_) : (dist == 0.0);
  if (ok) last_ = candidate;
  return ok;
}

}  // namespace uavloc
