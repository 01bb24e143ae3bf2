// Acceptance gate: ten end-to-end checks, one PASS/FAIL line each.
// Exit code is the number of failed checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "uavloc/cluster.hpp"
#include "uavloc/detector.hpp"
#include "uavloc/eval.hpp"
#include "uavloc/geometry.hpp"
#include "uavloc/nn/network.hpp"
#include "uavloc/pcd_io.hpp"
#include "uavloc/pillars.hpp"
#include "uavloc/rng.hpp"
#include "uavloc/synth.hpp"

using namespace uavloc;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const char* what, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s%s%s\n", ok ? "PASS" : "FAIL", idx, what,
              detail.empty() ? "" : ": ", detail.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PositionEstimate est(double t, double x, double y, double z) {
  PositionEstimate e;
  e.timestamp = t;
  e.x = x;
  e.y = y;
  e.z = z;
  return e;
}

// ---- 1: pseudo-image dimensions ------------------------------------------

void check_dims() {
  GridParams g = tunnel_grid();
  auto [x_n, y_n] = pseudo_image_dims(g);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "got (%d, %d)", x_n, y_n);
  report(1, "pseudo-image dimensions (438, 496)", x_n == 438 && y_n == 496,
         buf);
}

// ---- 2: classification boundaries ----------------------------------------

void check_classify() {
  PositionEstimate truth = est(0, 0, 0, 0);
  bool ok =
      classify(est(0, 0.15, 0, 0), truth) == PredictionOutcome::kRP &&
      classify(est(0, 0.30, 0, 0), truth) == PredictionOutcome::kCP &&
      classify(est(0, 0.50, 0, 0), truth) == PredictionOutcome::kWP &&
      classify(std::nullopt, truth) == PredictionOutcome::kNP;
  report(2, "classification thresholds RP/CP/WP/NP", ok, "");
}

// ---- 3: encoder conservation + bucketing oracle ---------------------------

void check_encoder() {
  auto t0 = Clock::now();
  GridParams g = desk_grid();
  bool ok = true;
  std::string why;
  for (std::uint64_t seed = 0; seed < 100 && ok; ++seed) {
    std::mt19937_64 rng(mix_seed(seed, 0xACCE));
    std::uniform_int_distribution<std::size_t> nd(100, 10000);
    std::uniform_real_distribution<float> xs(0.0f, 19.99f), ys(-9.99f, 9.99f),
        zs(-1.99f, 2.99f);
    PointCloud c;
    std::size_t n = nd(rng);
    for (std::size_t i = 0; i < n; ++i)
      c.points.push_back({xs(rng), ys(rng), zs(rng), 0.0f});

    // generous limits so nothing is dropped (conservation would catch it)
    PillarTensor t = encode_pillars(c, g, 6400, 256, seed);
    std::size_t total = 0;
    for (int cnt : t.counts) total += std::size_t(cnt);
    if (total != n) {
      ok = false;
      why = "count conservation failed";
      break;
    }
    std::map<std::pair<int, int>, int> oracle;
    for (const LidarPoint& p : c.points) {
      int col = int(std::floor((p.x - g.x_min) / g.x_step));
      int row = int(std::floor((p.y - g.y_min) / g.y_step));
      ++oracle[{std::min(row, g.y_n - 1), std::min(col, g.x_n - 1)}];
    }
    if (oracle.size() != t.indices.size()) {
      ok = false;
      why = "pillar set mismatch";
      break;
    }
    for (int p = 0; p < t.num_pillars(); ++p) {
      if (oracle[t.indices[std::size_t(p)]] != t.counts[std::size_t(p)]) {
        ok = false;
        why = "bucketing oracle mismatch";
        break;
      }
      double sx = 0, sy = 0, sz = 0;
      for (int k = 0; k < t.counts[std::size_t(p)]; ++k) {
        const double* f = t.point_features(p, k);
        sx += f[4];
        sy += f[5];
        sz += f[6];
      }
      if (std::abs(sx) > 1e-9 || std::abs(sy) > 1e-9 || std::abs(sz) > 1e-9) {
        ok = false;
        why = "centroid offsets do not cancel";
        break;
      }
    }
  }
  double dt = seconds_since(t0);
  if (ok && dt >= 10.0) {
    ok = false;
    why = "over the 10 s budget";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s(%.1f s)", why.empty() ? "" : (why + " ").c_str(), dt);
  report(3, "encoder conservation + bucketing oracle, 100 clouds", ok, buf);
}

// ---- 4: gradient check -----------------------------------------------------

void check_gradients() {
  auto t0 = Clock::now();
  GridParams g = desk_grid();
  NetworkConfig cfg;

  std::mt19937_64 rng(mix_seed(99, 0xFEED));
  std::uniform_real_distribution<float> xs(0.1f, 19.9f), ys(-9.9f, 9.9f),
      zs(-1.9f, 2.9f);
  PointCloud c;
  for (int i = 0; i < 120; ++i)
    c.points.push_back({xs(rng), ys(rng), zs(rng), 0.5f});
  for (int i = 0; i < 25; ++i)
    c.points.push_back({5.0f + 0.02f * float(i % 5),
                        1.0f + 0.02f * float(i / 5), 1.0f, 0.5f});
  PillarTensor pillars = encode_pillars(c, g, 12000, 100, 0);

  AnchorGrid anchors = make_anchors(g, cfg);
  Cuboid truth{5.04, 1.04, 1.0, 0.5, 0.5, 0.3, 0, 0, 0};
  RegressionTargets targets = assign_targets(anchors, {truth}, cfg);

  nn::PointPillarsNet<double> net(cfg, g, 31337);
  auto loss = [&](bool bwd) {
    auto out = net.forward(pillars, true);
    nn::Tensor<double> gcls, greg;
    double L = nn::detection_loss<double>(out, targets, cfg, 1.0, &gcls, &greg);
    if (bwd) net.backward(gcls, greg);
    return L;
  };
  net.zero_grad();
  loss(true);

  std::vector<nn::Tensor<double>> grads;
  net.visit_params([&](const std::string&, nn::Param<double>& p) {
    grads.push_back(p.grad);
  });

  const double h = 1e-5;
  double worst = 0;
  std::string worst_name;
  std::size_t gi = 0;
  std::mt19937_64 pick(4242);
  net.visit_params([&](const std::string& name, nn::Param<double>& p) {
    const nn::Tensor<double>& gr = grads[gi++];
    std::size_t best = 0;
    for (std::size_t i = 0; i < gr.data.size(); ++i)
      if (std::abs(gr.data[i]) > std::abs(gr.data[best])) best = i;
    std::size_t entries[2] = {best, pick() % gr.data.size()};
    for (std::size_t idx : entries) {
      double save = p.value.data[idx];
      p.value.data[idx] = save + h;
      double up = loss(false);
      p.value.data[idx] = save - h;
      double dn = loss(false);
      p.value.data[idx] = save;
      double numeric = (up - dn) / (2 * h);
      double denom = std::max({std::abs(numeric), std::abs(gr.data[idx]), 1e-6});
      // zero-up-to-roundoff gradients (conv bias under batch norm) pass
      double rel = std::abs(numeric - gr.data[idx]) < 1e-8
                       ? 0.0
                       : std::abs(numeric - gr.data[idx]) / denom;
      if (rel > worst) {
        worst = rel;
        worst_name = name;
      }
    }
  });
  double dt = seconds_since(t0);
  bool ok = worst < 1e-4 && dt < 60.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst rel err %.2e (%s), %.1f s", worst,
                worst_name.c_str(), dt);
  report(4, "float64 gradient check, every parameter group", ok, buf);
}

// ---- 5: oracle equivalences -----------------------------------------------

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
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      double dx = double(c.points[i].x) - c.points[j].x;
      double dy = double(c.points[i].y) - c.points[j].y;
      double dz = double(c.points[i].z) - c.points[j].z;
      if (dx * dx + dy * dy + dz * dz <= r2) parent[find(i)] = find(j);
    }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < c.size(); ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups)
    if (members.size() >= min_points) out.push_back(members);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

void check_oracles() {
  auto t0 = Clock::now();
  bool ok = true;
  std::string why;

  // clustering vs union-find
  for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x5EED));
    std::uniform_real_distribution<float> d(-4.0f, 4.0f);
    PointCloud c;
    for (int i = 0; i < 500; ++i) c.points.push_back({d(rng), d(rng), d(rng), 0});
    auto got = euclidean_cluster(c, 0.3, 5);
    auto want = brute_components(c, 0.3, 5);
    if (got.size() != want.size()) {
      ok = false;
      why = "cluster count mismatch";
      break;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      auto gi = got[i].point_indices;
      std::sort(gi.begin(), gi.end());
      if (gi != want[i]) {
        ok = false;
        why = "cluster membership mismatch";
        break;
      }
    }
  }

  // nms vs reference greedy
  for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x40B5));
    std::uniform_real_distribution<double> xs(-5, 5), ls(0.4, 2.0), sc(0, 1);
    std::vector<Detection> dets;
    for (int i = 0; i < 50; ++i) {
      Detection d;
      d.box = {xs(rng), xs(rng), 0, ls(rng), ls(rng), 1, 0, 0, 0};
      d.score = sc(rng);
      dets.push_back(d);
    }
    auto got = nms(dets, 0.3, 0.2);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (dets[i].score >= 0.2) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dets[a].score > dets[b].score;
    });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
      bool keep = true;
      for (std::size_t k : kept)
        if (bev_iou(dets[i].box, dets[k].box) > 0.3) keep = false;
      if (keep) kept.push_back(i);
    }
    if (got.size() != kept.size()) {
      ok = false;
      why = "nms size mismatch";
      break;
    }
    for (std::size_t i = 0; i < kept.size(); ++i)
      if (got[i].score != dets[kept[i]].score) {
        ok = false;
        why = "nms order mismatch";
        break;
      }
  }

  // assign_targets vs all-pairs thresholding (away from the force-match)
  if (ok) {
    GridParams g = desk_grid();
    NetworkConfig cfg;
    AnchorGrid anchors = make_anchors(g, cfg);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> xs(2, 18), ys(-8, 8), ls(0.3, 1.2);
    std::vector<Cuboid> truths;
    for (int i = 0; i < 4; ++i)
      truths.push_back({xs(rng), ys(rng), 1.0, ls(rng), ls(rng), 0.3, 0, 0, 0});
    RegressionTargets got = assign_targets(anchors, truths, cfg);
    int npos = 0;
    for (int a = 0; a < anchors.count() && ok; ++a) {
      double best = 0;
      for (const Cuboid& t : truths)
        best = std::max(best, bev_iou(anchors.anchors[std::size_t(a)], t));
      int want = best >= cfg.match_iou_pos ? 1
                 : best < cfg.match_iou_neg ? -1
                                            : 0;
      int label = got.labels[std::size_t(a)];
      if (label == 1) ++npos;
      if (label != want && !(label == 1 && want != 1)) {
        ok = false;
        why = "assign_targets oracle mismatch";
      }
      // promotions above the threshold rule must be best-anchor matches
      if (label == 1 && want != 1) {
        bool is_best = false;
        for (const Cuboid& t : truths) {
          double ti = bev_iou(anchors.anchors[std::size_t(a)], t);
          if (ti <= 0) continue;
          bool top = true;
          for (int o = 0; o < anchors.count(); ++o)
            if (bev_iou(anchors.anchors[std::size_t(o)], t) > ti) {
              top = false;
              break;
            }
          if (top) is_best = true;
        }
        if (!is_best) {
          ok = false;
          why = "illegal positive promotion";
        }
      }
    }
    if (ok && npos != got.num_positive) {
      ok = false;
      why = "positive count mismatch";
    }
  }

  double dt = seconds_since(t0);
  if (ok && dt >= 30.0) {
    ok = false;
    why = "over the 30 s budget";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s(%.1f s)", why.empty() ? "" : (why + " ").c_str(), dt);
  report(5, "oracle equivalences: clustering, nms, target assignment", ok, buf);
}

// ---- shared synthetic dataset for 6 and 7 ----------------------------------

struct SynthData {
  Dataset ds;
  SceneSpec spec;
};

SynthData make_dataset() {
  SynthData d;
  d.spec.trajectory = {{0.0, {4.0, -1.0, 1.2}}, {20.0, {12.0, 0.5, 1.2}}};
  d.spec.seed = 7;
  // 20 s span at 9.95 Hz -> floor(199) + 1 = 200 frames, 150/50 split
  d.ds = generate_dataset(d.spec, 9.95, 0.75);
  return d;
}

// ---- 6: clustering end-to-end ----------------------------------------------

void check_clustering(const SynthData& sd) {
  auto t0 = Clock::now();
  HeuristicConfig heur;
  heur.altimeter_height = 1.2;
  std::size_t updates = 0;
  std::vector<double> errs;
  for (const Frame& f : sd.ds.frames) {
    ShellParams shell{f.range_m, 2.0};
    auto e = localize_clustering(f.cloud, shell, heur);
    if (!e) continue;
    ++updates;
    double dx = e->x - f.truth.x, dy = e->y - f.truth.y, dz = e->z - f.truth.z;
    errs.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  double rms = 0;
  if (!errs.empty()) rms = axis_stats(errs).rms;
  double frac = double(updates) / double(sd.ds.frames.size());
  double dt = seconds_since(t0);
  bool ok = frac >= 0.95 && rms < 0.10 && dt < 60.0;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "updates %zu/%zu, rms %.4f m, %.1f s",
                updates, sd.ds.frames.size(), rms, dt);
  report(6, "clustering end-to-end on 200 clean frames", ok, buf);
}

// ---- 7: detector end-to-end -------------------------------------------------

void check_detector(const SynthData& sd) {
  auto t0 = Clock::now();
  GridParams g = desk_grid();
  NetworkConfig ncfg;
  ncfg.score_threshold = 0.3;
  TrainConfig tcfg;
  tcfg.epochs = 70;
  tcfg.learning_rate = 5e-3;
  tcfg.seed = 1;

  std::vector<nn::TrainSample> data;
  for (std::size_t i : sd.ds.train_indices) {
    nn::TrainSample s;
    PointCloud c = crop(sd.ds.frames[i].cloud, g.bounds());
    s.pillars = encode_pillars(c, g, 12000, 100, mix_seed(tcfg.seed, i));
    s.truths.push_back(sd.ds.frames[i].truth_box);
    data.push_back(std::move(s));
  }
  nn::PointPillarsNet<float> net(ncfg, g, tcfg.seed);
  std::vector<double> trace = nn::train_detector(net, data, tcfg);

  std::size_t rp = 0, net_updates = 0;
  for (std::size_t i : sd.ds.test_indices) {
    auto res = nn::run_detect(net, sd.ds.frames[i].cloud, 12000, 100, i);
    if (!res.estimate) continue;
    ++net_updates;
    const Frame& f = sd.ds.frames[i];
    double dx = res.estimate->x - f.truth.x;
    double dy = res.estimate->y - f.truth.y;
    double dz = res.estimate->z - f.truth.z;
    if (std::sqrt(dx * dx + dy * dy + dz * dz) < 0.20) ++rp;
  }

  // clustering on the same held-out frames with a degraded range input:
  // 70% of the range measurements are pushed 5 m off
  HeuristicConfig heur;
  heur.altimeter_height = 1.2;
  std::size_t cluster_updates = 0;
  std::size_t k = 0;
  for (std::size_t i : sd.ds.test_indices) {
    const Frame& f = sd.ds.frames[i];
    double range = f.range_m + ((k++ % 10) < 7 ? 5.0 : 0.0);
    if (localize_clustering(f.cloud, ShellParams{range, 2.0}, heur)) {
      ++cluster_updates;
    }
  }

  double dt = seconds_since(t0);
  double rp_frac = double(rp) / double(sd.ds.test_indices.size());
  bool ok = rp_frac >= 0.90 &&
            double(net_updates) >= 1.5 * double(cluster_updates) &&
            dt < 900.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "RP %zu/%zu, detector updates %zu vs degraded clustering %zu, "
                "final loss %.3f, %.0f s",
                rp, sd.ds.test_indices.size(), net_updates, cluster_updates,
                trace.back(), dt);
  report(7, "detector end-to-end: train 150, evaluate 50 held-out", ok, buf);
}

// ---- 8: z-offset recovery ---------------------------------------------------

void check_z_offset() {
  std::mt19937_64 rng(mix_seed(8, 0x0FF5E7));
  std::normal_distribution<double> noise(0.0, 0.15);
  const double bias = 2.42;
  std::vector<PositionEstimate> truth, measured;
  for (int i = 0; i < 265; ++i) {
    double t = 0.1 * i;
    truth.push_back(est(t, 1, 2, 3));
    measured.push_back(est(t, 1, 2, 3 - bias + noise(rng)));
  }
  auto pairs = align_nearest(measured, truth, 0.05);
  double fitted = fit_z_offset(pairs);
  auto corrected = apply_offset(measured, {0, 0, fitted});
  auto cpairs = align_nearest(corrected, truth, 0.05);
  double residual = 0;
  for (const AlignedPair& p : cpairs) residual += p.truth.z - p.estimate.z;
  residual /= double(cpairs.size());
  bool ok = std::abs(fitted - bias) <= 0.03 && std::abs(residual) < 1e-9;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "fitted %+.4f m, residual %.2e", fitted,
                residual);
  report(8, "z-offset recovery from 265 noisy estimates", ok, buf);
}

// ---- 9: statistics identity -------------------------------------------------

void check_stats_identity() {
  std::mt19937_64 rng(mix_seed(9, 0x57A7));
  std::uniform_real_distribution<double> d(-2, 2);
  std::uniform_int_distribution<int> nd(2, 400);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    int n = nd(rng);
    std::vector<double> e(static_cast<std::size_t>(n));
    for (double& v : e) v = d(rng);
    ErrorStats s = axis_stats(e);
    double lhs = s.rms * s.rms;
    double rhs =
        s.mean * s.mean + s.std_dev * s.std_dev * double(n - 1) / double(n);
    if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(lhs))) ok = false;

    double sum = 0, sumsq = 0, mx = 0;
    for (double v : e) {
      sum += std::abs(v);
      sumsq += v * v;
      mx = std::max(mx, std::abs(v));
    }
    double mean = sum / n, rms = std::sqrt(sumsq / n);
    double svar = (sumsq - n * mean * mean) / (n - 1);
    double sstd = std::sqrt(std::max(svar, 0.0));
    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1.0});
    };
    if (!close(s.mean, mean) || !close(s.rms, rms) || !close(s.max, mx) ||
        !close(s.std_dev, sstd)) {
      ok = false;
    }
  }
  report(9, "statistics identity + duplicate-formula oracle, 1000 series", ok,
         "");
}

// ---- 10: round-trips + fuzz -------------------------------------------------

void check_round_trips() {
  bool ok = true;
  std::string why;

  // PCD, both encodings: write -> read -> write is byte-identical
  std::mt19937_64 rng(mix_seed(10, 0xF00D));
  std::uniform_real_distribution<float> d(-50, 50);
  PointCloud c;
  for (int i = 0; i < 500; ++i) c.points.push_back({d(rng), d(rng), d(rng), d(rng)});
  for (PcdEncoding enc : {PcdEncoding::kAscii, PcdEncoding::kBinary}) {
    std::string b1 = write_pcd(c, enc);
    std::string b2 = write_pcd(parse_pcd(b1), enc);
    if (b1 != b2) {
      ok = false;
      why = "pcd round-trip not bitwise";
    }
  }

  // labels
  std::vector<LabelEntry> labels;
  for (int i = 0; i < 40; ++i) {
    LabelEntry e;
    e.timestamp = d(rng);
    e.box = {d(rng), d(rng), d(rng), std::abs(d(rng)) + 0.1,
             std::abs(d(rng)) + 0.1, std::abs(d(rng)) + 0.1,
             d(rng), d(rng), d(rng)};
    labels.push_back(e);
  }
  std::string l1 = write_labels(labels);
  if (write_labels(parse_labels(l1)) != l1) {
    ok = false;
    why = "label round-trip not bitwise";
  }

  // weights container
  GridParams tiny;
  tiny.x_min = 0;
  tiny.x_max = 4;
  tiny.y_min = -2;
  tiny.y_max = 2;
  tiny.z_min = 0;
  tiny.z_max = 2;
  tiny.x_step = 0.5;
  tiny.y_step = 0.5;
  tiny.ds_factor = 2;
  tiny.finalize();
  NetworkConfig ncfg;
  ncfg.pfn_channels = 4;
  ncfg.blocks = {{1, 4, 2}};
  ncfg.upsample_channels = 4;
  nn::PointPillarsNet<float> net(ncfg, tiny, 123);
  std::string w1 = nn::save_weights(net);
  nn::PointPillarsNet<float> net2(ncfg, tiny, 9);
  nn::load_weights(net2, w1);
  if (nn::save_weights(net2) != w1) {
    ok = false;
    why = "weights round-trip not bitwise";
  }

  // pillar dump
  PointCloud pc;
  std::uniform_real_distribution<float> xs(0.01f, 3.99f), ys(-1.99f, 1.99f),
      zs(0.01f, 1.99f);
  for (int i = 0; i < 300; ++i) pc.points.push_back({xs(rng), ys(rng), zs(rng), 0});
  PillarTensor t = encode_pillars(pc, tiny, 100, 10, 4);
  std::string p1 = write_pillar_dump(t);
  if (write_pillar_dump(parse_pillar_dump(p1)) != p1) {
    ok = false;
    why = "pillar dump round-trip not bitwise";
  }

  // 60 s of parser fuzzing: mutations, truncations, random garbage
  auto t0 = Clock::now();
  std::string ascii = write_pcd(c, PcdEncoding::kAscii);
  std::string binary = write_pcd(c, PcdEncoding::kBinary);
  std::size_t iters = 0;
  while (seconds_since(t0) < 60.0) {
    std::string s;
    switch (rng() % 3) {
      case 0: s = ascii; break;
      case 1: s = binary; break;
      default: {
        s.resize(rng() % 4096);
        for (char& ch : s) ch = char(rng() & 0xFF);
        break;
      }
    }
    if (!s.empty()) {
      int nmut = 1 + int(rng() % 16);
      for (int m = 0; m < nmut; ++m) s[rng() % s.size()] = char(rng() & 0xFF);
      if (rng() % 4 == 0) s.resize(rng() % (s.size() + 1));
    }
    try {
      parse_pcd(s);
    } catch (const ParseError&) {
    } catch (const UnsupportedError&) {
    }
    ++iters;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s%zu fuzz iterations",
                why.empty() ? "" : (why + "; ").c_str(), iters);
  report(10, "round-trip suite + 60 s parser fuzz", ok, buf);
}

}  // namespace

int main() {
  check_dims();
  check_classify();
  check_encoder();
  check_gradients();
  check_oracles();
  SynthData sd = make_dataset();
  check_clustering(sd);
  check_detector(sd);
  check_z_offset();
  check_stats_identity();
  check_round_trips();
  std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures;
}
