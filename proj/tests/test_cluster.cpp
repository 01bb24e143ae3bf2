#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "uavloc/cluster.hpp"
#include "uavloc/error.hpp"
#include "uavloc/rng.hpp"

using namespace uavloc;

namespace {

PointCloud random_cloud(std::uint64_t seed, std::size_t n, double extent) {
  std::mt19937_64 rng(mix_seed(seed, 0xB0B));
  std::uniform_real_distribution<float> d(-float(extent), float(extent));
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.points.push_back({d(rng), d(rng), d(rng), 0.0f});
  return c;
}

// O(n^2) union-find reference for single-link clustering
std::vector<std::vector<std::size_t>> brute_components(const PointCloud& c,
                                                       double radius,
                                                       std::size_t min_points) {
  std::vector<std::size_t> parent(c.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      double dx = double(c.points[i].x) - c.points[j].x;
      double dy = double(c.points[i].y) - c.points[j].y;
      double dz = double(c.points[i].z) - c.points[j].z;
      if (dx * dx + dy * dy + dz * dz <= r2) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < c.size(); ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) {
    if (members.size() >= min_points) out.push_back(members);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

Cluster make_cluster(double zc, double xl, double yl, double zl) {
  Cluster c;
  c.bbox = {0, 0, zc, xl, yl, zl, 0, 0, 0};
  c.centroid = {0, 0, zc};
  c.point_indices = {0};
  return c;
}

}  // namespace

TEST_CASE("shell_segment keeps the closed annulus and drops non-finite") {
  PointCloud c;
  c.points.push_back({3.0f, 0, 0, 0});                      // inside
  c.points.push_back({0.5f, 0, 0, 0});                      // too close
  c.points.push_back({20.0f, 0, 0, 0});                     // too far
  c.points.push_back({5.0f, 0, 0, 0});                      // on outer bound
  c.points.push_back({NAN, 0, 0, 0});                       // dropped
  ShellParams shell{3.0, 2.0};
  CHECK(shell.inner() == doctest::Approx(1.0));
  CHECK(shell.outer() == doctest::Approx(5.0));
  PointCloud out = shell_segment(c, shell);
  REQUIRE(out.size() == 2);
  CHECK(out.points[0].x == 3.0f);
  CHECK(out.points[1].x == 5.0f);
  // inner radius clamps at zero
  CHECK(ShellParams{1.0, 2.0}.inner() == 0.0);
}

TEST_CASE("euclidean_cluster equals the union-find oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PointCloud c = random_cloud(seed, 500, 4.0);
    double radius = 0.25 + 0.05 * double(seed % 5);
    auto got = euclidean_cluster(c, radius, 5);
    auto want = brute_components(c, radius, 5);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      std::vector<std::size_t> gi = got[i].point_indices;
      std::sort(gi.begin(), gi.end());
      std::vector<std::size_t> wi = want[i];
      std::sort(wi.begin(), wi.end());
      CHECK(gi == wi);
    }
  }
}

TEST_CASE("cluster bbox and centroid arithmetic") {
  PointCloud c;
  c.points.push_back({0, 0, 0, 0});
  c.points.push_back({1, 2, 3, 0});
  c.points.push_back({0.5f, 1, 1.5f, 0});
  c.points.push_back({0.2f, 0.5f, 2, 0});
  c.points.push_back({0.9f, 1.5f, 0.5f, 0});
  auto clusters = euclidean_cluster(c, 10.0, 5);
  REQUIRE(clusters.size() == 1);
  const Cluster& k = clusters[0];
  CHECK(k.bbox.x_ctr == doctest::Approx(0.5));
  CHECK(k.bbox.y_ctr == doctest::Approx(1.0));
  CHECK(k.bbox.z_ctr == doctest::Approx(1.5));
  CHECK(k.bbox.x_len == doctest::Approx(1.0));
  CHECK(k.bbox.y_len == doctest::Approx(2.0));
  CHECK(k.bbox.z_len == doctest::Approx(3.0));
  CHECK(k.centroid.x == doctest::Approx(2.6 / 5));
  CHECK(k.bbox.z_rot == 0.0);
}

TEST_CASE("kmeans_cluster is deterministic and covers the points") {
  PointCloud c = random_cloud(33, 300, 5.0);
  auto a = kmeans_cluster(c, 6, 5, 20, 99);
  auto b = kmeans_cluster(c, 6, 5, 20, 99);
  REQUIRE(a.size() == b.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].point_indices == b[i].point_indices);
    CHECK(a[i].point_indices.size() >= 5);
    total += a[i].point_indices.size();
  }
  CHECK(total <= c.size());
}

TEST_CASE("apply_heuristics implements the three predicates") {
  HeuristicConfig cfg;
  cfg.altimeter_height = 1.2;
  cfg.height_tolerance = 0.3;
  cfg.min_volume = 0.01;
  cfg.max_aspect_diff = 0.5;

  Cluster good = make_cluster(1.2, 0.5, 0.5, 0.3);
  Cluster too_low = make_cluster(0.5, 0.5, 0.5, 0.3);
  Cluster too_high = make_cluster(1.6, 0.5, 0.5, 0.3);
  Cluster too_small = make_cluster(1.2, 0.2, 0.2, 0.2);  // volume 0.008
  Cluster too_long = make_cluster(1.2, 1.2, 0.5, 0.4);   // aspect diff 0.8

  auto out = apply_heuristics({too_low, good, too_small, too_long, too_high},
                              cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].bbox.x_len == 0.5);

  // boundary: exactly at tolerance passes (values chosen to be exact in
  // binary so the closed bound is actually exercised)
  HeuristicConfig exact = cfg;
  exact.altimeter_height = 1.0;
  exact.height_tolerance = 0.5;
  Cluster edge = make_cluster(1.5, 0.5, 0.5, 0.3);
  CHECK(apply_heuristics({edge}, exact).size() == 1);
}

TEST_CASE("localize_clustering picks the survivor nearest the range") {
  // two separated blobs, both heuristic-passing, at ranges ~3 and ~6
  PointCloud c;
  // 27 points per blob, spaced under the default 0.3 link radius
  auto add_blob = [&](float cx) {
    for (float dx : {-0.25f, 0.0f, 0.25f})
      for (float dy : {-0.25f, 0.0f, 0.25f})
        for (float dz : {-0.15f, 0.0f, 0.15f})
          c.points.push_back({cx + dx, dy, 1.2f + dz, 0});
  };
  add_blob(3.0f);
  add_blob(6.0f);
  HeuristicConfig h;
  h.altimeter_height = 1.2;
  ShellParams shell{6.2, 2.0};
  auto est = localize_clustering(c, shell, h);
  REQUIRE(est.has_value());
  CHECK(est->x == doctest::Approx(6.0));
  CHECK(est->y == doctest::Approx(0.0));
  CHECK(est->z == doctest::Approx(1.2));
  CHECK(est->source == EstimateSource::kClustering);

  ShellParams near{3.1, 2.0};
  auto est2 = localize_clustering(c, near, h);
  REQUIRE(est2.has_value());
  CHECK(est2->x == doctest::Approx(3.0));

  // nothing passes when the shell excludes both blobs
  auto none = localize_clustering(c, ShellParams{30.0, 2.0}, h);
  CHECK(!none.has_value());
}

TEST_CASE("velocity gate accepts and rejects on speed") {
  VelocityGate gate(0.5);
  PositionEstimate e0{0, 0, 0, 0.0, EstimateSource::kClustering};
  CHECK(gate.offer(e0));  // first ever is always accepted
  PositionEstimate ok{0.4, 0, 0, 1.0, EstimateSource::kClustering};
  CHECK(gate.offer(ok));  // 0.4 m/s
  PositionEstimate fast{2.0, 0, 0, 2.0, EstimateSource::kClustering};
  CHECK(!gate.offer(fast));  // 1.6 m/s
  CHECK(gate.last_estimate()->x == 0.4);
  // boundary speed passes
  PositionEstimate edge{0.9, 0, 0, 2.0, EstimateSource::kClustering};
  CHECK(gate.offer(edge));
  // rejection keeps the stored estimate, so a gap widens the budget
  PositionEstimate later{2.9, 0, 0, 6.0, EstimateSource::kClustering};
  CHECK(gate.offer(later));  // 2.0 m over 4 s
}

TEST_CASE("velocity gate timestamp contract") {
  VelocityGate gate(0.5);
  PositionEstimate a{0, 0, 0, 5.0, EstimateSource::kClustering};
  CHECK(gate.offer(a));
  PositionEstimate back_in_time{0, 0, 0, 4.0, EstimateSource::kClustering};
  CHECK_THROWS_AS(gate.offer(back_in_time), ContractError);
  // same timestamp: duplicate position accepted, moved position not
  PositionEstimate dup{0, 0, 0, 5.0, EstimateSource::kClustering};
  CHECK(gate.offer(dup));
  PositionEstimate moved{1, 0, 0, 5.0, EstimateSource::kClustering};
  CHECK(!gate.offer(moved));
}
