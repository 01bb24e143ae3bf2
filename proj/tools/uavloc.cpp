// uavloc: UAV-in-LiDAR localization toolkit.
//
// Subcommands: synth, cluster, encode, train, detect, evaluate.
// Exit codes: 0 success, 2 config error, 3 data error,
//             4 training divergence, 5 evaluation gate failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "uavloc/cluster.hpp"
#include "uavloc/config.hpp"
#include "uavloc/detector.hpp"
#include "uavloc/error.hpp"
#include "uavloc/eval.hpp"
#include "uavloc/geometry.hpp"
#include "uavloc/nn/network.hpp"
#include "uavloc/pcd_io.hpp"
#include "uavloc/pillars.hpp"
#include "uavloc/rng.hpp"
#include "uavloc/synth.hpp"

namespace fs = std::filesystem;
using namespace uavloc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitGate = 5;

void atomic_write(const std::string& path, const std::string& data) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ParseError("cannot open for writing: " + tmp);
    f.write(data.data(), std::streamsize(data.size()));
    if (!f) throw ParseError("I/O failure writing: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Config load_optional_config(const std::string& path) {
  return path.empty() ? Config() : Config::load(path);
}

GridParams resolve_grid(const std::string& preset,
                        const std::string& grid_config) {
  if (!grid_config.empty()) return GridParams::from_config(Config::load(grid_config));
  if (preset == "tunnel") return tunnel_grid();
  if (preset == "desk" || preset.empty()) return desk_grid();
  throw ConfigError("unknown preset '" + preset + "' (expected tunnel|desk)");
}

struct LoadedFrame {
  PointCloud cloud;
  std::string path;
};

std::vector<LoadedFrame> load_manifest_clouds(const std::string& manifest_path) {
  std::vector<LoadedFrame> out;
  fs::path base = fs::path(manifest_path).parent_path();
  for (const ManifestEntry& e : read_manifest(manifest_path)) {
    LoadedFrame f;
    f.path = (base / e.pcd_path).string();
    f.cloud = parse_pcd_file(f.path);
    f.cloud.timestamp = e.timestamp;
    out.push_back(std::move(f));
  }
  return out;
}

ClusterParams cluster_params_from(const Config& cfg) {
  ClusterParams p;
  p.link_radius = cfg.get_double("cluster.link_radius", 0.3);
  p.min_points = std::size_t(cfg.get_int("cluster.min_points", 5));
  return p;
}

HeuristicConfig heuristics_from(const Config& cfg) {
  HeuristicConfig h;
  h.altimeter_height = cfg.get_double("heuristics.altimeter_height", 1.2);
  h.height_tolerance = cfg.get_double("heuristics.height_tolerance", 0.3);
  h.min_volume = cfg.get_double("heuristics.min_volume", 0.01);
  h.max_aspect_diff = cfg.get_double("heuristics.max_aspect_diff", 0.5);
  return h;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              long seed, bool seed_set, double rate, double split,
              const std::string& encoding) {
  Config cfg = load_optional_config(spec_path);
  if (seed_set) cfg.set("scene.seed", std::to_string(seed));
  SceneSpec spec = SceneSpec::from_config(cfg);
  Dataset ds = generate_dataset(spec, rate, split);
  write_dataset(ds, out_dir,
                encoding == "ascii" ? PcdEncoding::kAscii : PcdEncoding::kBinary);
  std::printf("synth: wrote %zu frames (%zu train / %zu test) to %s\n",
              ds.frames.size(), ds.train_indices.size(),
              ds.test_indices.size(), out_dir.c_str());
  return 0;
}

int cmd_cluster(const std::string& manifest, const std::string& range_path,
                const std::string& config_path, const std::string& out_path,
                bool velocity_gate, double max_speed) {
  Config cfg = load_optional_config(config_path);
  ClusterParams params = cluster_params_from(cfg);
  HeuristicConfig heur = heuristics_from(cfg);
  double margin = cfg.get_double("shell.margin", 2.0);
  double range_tol = cfg.get_double("cluster.range_match_tolerance", 0.075);
  std::string algo = cfg.get_string("cluster.algorithm", "euclidean");

  std::vector<RangeSample> ranges = read_ranges(range_path);
  std::vector<ManifestEntry> entries = read_manifest(manifest);
  fs::path base = fs::path(manifest).parent_path();

  VelocityGate gate(max_speed);
  std::vector<PositionEstimate> estimates;
  std::size_t scans = 0;
  for (const ManifestEntry& e : entries) {
    ++scans;
    // nearest range sample within tolerance
    const RangeSample* best = nullptr;
    double best_dt = range_tol;
    for (const RangeSample& r : ranges) {
      double dt = std::abs(r.timestamp - e.timestamp);
      if (dt <= best_dt) {
        best_dt = dt;
        best = &r;
      }
    }
    if (!best) {
      std::fprintf(stderr,
                   "cluster: warning: no range sample within %.3fs of t=%.3f, "
                   "skipping %s\n",
                   range_tol, e.timestamp, e.pcd_path.c_str());
      continue;
    }
    PointCloud cloud = parse_pcd_file((base / e.pcd_path).string());
    cloud.timestamp = e.timestamp;
    ShellParams shell{best->range, margin};

    std::optional<PositionEstimate> est;
    if (algo == "kmeans") {
      PointCloud shelled = shell_segment(cloud, shell);
      auto clusters = kmeans_cluster(
          shelled, std::size_t(cfg.get_int("cluster.kmeans_k", 8)),
          params.min_points, int(cfg.get_int("cluster.kmeans_iterations", 20)),
          std::uint64_t(cfg.get_int("cluster.kmeans_seed", 0)));
      auto survivors = apply_heuristics(clusters, heur);
      if (!survivors.empty()) {
        const Cluster& c = survivors.front();
        est = PositionEstimate{c.bbox.x_ctr, c.bbox.y_ctr, c.bbox.z_ctr,
                               e.timestamp, EstimateSource::kClustering};
      }
    } else {
      est = localize_clustering(cloud, shell, heur, params);
    }
    if (est && velocity_gate && !gate.offer(*est)) continue;
    if (est) estimates.push_back(*est);
  }
  atomic_write(out_path, write_estimates(estimates));
  std::printf("cluster: %zu updates / %zu scans -> %s\n", estimates.size(),
              scans, out_path.c_str());
  return 0;
}

int cmd_encode(const std::string& manifest, const std::string& preset,
               const std::string& grid_config, const std::string& out_dir,
               long seed) {
  GridParams grid = resolve_grid(preset, grid_config);
  Config gcfg = load_optional_config(grid_config);
  int max_pillars = int(gcfg.get_int("encoder.max_pillars", 12000));
  int max_ppp = int(gcfg.get_int("encoder.max_points_per_pillar", 100));
  fs::create_directories(out_dir);
  std::size_t n = 0;
  for (const LoadedFrame& f : load_manifest_clouds(manifest)) {
    PointCloud cropped = crop(f.cloud, grid.bounds());
    PillarTensor t = encode_pillars(cropped, grid, max_pillars, max_ppp,
                                    mix_seed(std::uint64_t(seed), n));
    fs::path name = fs::path(f.path).stem();
    atomic_write((fs::path(out_dir) / (name.string() + ".uplt")).string(),
                 write_pillar_dump(t));
    ++n;
  }
  std::printf("encode: wrote %zu pillar dumps to %s\n", n, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& manifest, const std::string& labels_path,
              const std::string& preset, const std::string& grid_config,
              const std::string& net_config, const std::string& train_config,
              const std::string& out_path, const std::string& trace_path,
              long seed, bool seed_set) {
  GridParams grid = resolve_grid(preset, grid_config);
  Config gcfg = load_optional_config(grid_config);
  int max_pillars = int(gcfg.get_int("encoder.max_pillars", 12000));
  int max_ppp = int(gcfg.get_int("encoder.max_points_per_pillar", 100));
  NetworkConfig net_cfg = NetworkConfig::from_config(load_optional_config(net_config));
  TrainConfig train_cfg = TrainConfig::from_config(load_optional_config(train_config));
  if (seed_set) train_cfg.seed = std::uint64_t(seed);

  Config lcfg = load_optional_config(grid_config);
  AngleUnit unit = lcfg.get_string("labels.angle_unit", "radians") == "degrees"
                       ? AngleUnit::kDegrees
                       : AngleUnit::kRadians;
  std::vector<LabelEntry> labels = read_labels(labels_path, unit);

  std::vector<nn::TrainSample> data;
  std::size_t n = 0;
  for (const LoadedFrame& f : load_manifest_clouds(manifest)) {
    nn::TrainSample s;
    PointCloud cropped = crop(f.cloud, grid.bounds());
    s.pillars = encode_pillars(cropped, grid, max_pillars, max_ppp,
                               mix_seed(train_cfg.seed, n));
    for (const LabelEntry& l : labels) {
      if (std::abs(l.timestamp - f.cloud.timestamp) < 1e-6) {
        s.truths.push_back(l.box);
      }
    }
    data.push_back(std::move(s));
    ++n;
  }

  nn::PointPillarsNet<float> net(net_cfg, grid, train_cfg.seed);
  std::vector<double> trace = train_detector(net, data, train_cfg);
  atomic_write(out_path, nn::save_weights(net));

  std::ostringstream tr;
  tr << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, trace[i]);
    tr << buf;
  }
  atomic_write(trace_path.empty() ? out_path + ".loss.csv" : trace_path,
               tr.str());
  std::printf("train: %zu samples, %d epochs, final loss %.6f -> %s\n",
              data.size(), train_cfg.epochs, trace.back(), out_path.c_str());
  return 0;
}

int cmd_detect(const std::string& manifest, const std::string& weights_path,
               const std::string& preset, const std::string& grid_config,
               const std::string& net_config, const std::string& out_path,
               long seed) {
  GridParams grid = resolve_grid(preset, grid_config);
  Config gcfg = load_optional_config(grid_config);
  int max_pillars = int(gcfg.get_int("encoder.max_pillars", 12000));
  int max_ppp = int(gcfg.get_int("encoder.max_points_per_pillar", 100));
  NetworkConfig net_cfg = NetworkConfig::from_config(load_optional_config(net_config));

  nn::PointPillarsNet<float> net(net_cfg, grid, 0);
  nn::load_weights(net, slurp(weights_path));

  std::vector<PositionEstimate> estimates;
  std::size_t scans = 0, np = 0;
  for (const LoadedFrame& f : load_manifest_clouds(manifest)) {
    auto res = nn::run_detect(net, f.cloud, max_pillars, max_ppp,
                              mix_seed(std::uint64_t(seed), scans));
    ++scans;
    if (res.estimate) {
      estimates.push_back(*res.estimate);
    } else {
      ++np;
    }
  }
  atomic_write(out_path, write_estimates(estimates));
  std::printf("detect: %zu updates / %zu scans (%zu NP) -> %s\n",
              estimates.size(), scans, np, out_path.c_str());
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& estimate_paths,
                 const std::string& truth_path, const std::string& out_prefix,
                 const std::string& z_offset, double max_dt,
                 double rms_ceiling, long scans) {
  std::vector<PositionEstimate> truth = read_estimates(truth_path);
  std::vector<MethodReport> reports;
  for (const std::string& path : estimate_paths) {
    std::vector<PositionEstimate> est = read_estimates(path);
    std::string method = fs::path(path).stem().string();
    if (!z_offset.empty()) {
      double off;
      if (z_offset == "fit") {
        off = fit_z_offset(align_nearest(est, truth, max_dt));
        std::printf("evaluate: fitted z offset for %s: %+.3f m\n",
                    method.c_str(), off);
      } else {
        off = std::stod(z_offset);
      }
      est = apply_offset(est, {0.0, 0.0, off});
      method += "+z";
    }
    std::size_t scan_count = scans > 0 ? std::size_t(scans) : truth.size();
    reports.push_back(evaluate_method(method, est, truth, scan_count, max_dt));
  }
  std::string text = report_text(reports);
  std::fputs(text.c_str(), stdout);
  if (!out_prefix.empty()) {
    atomic_write(out_prefix + ".txt", text);
    atomic_write(out_prefix + ".csv", report_csv(reports));
  }
  for (const MethodReport& r : reports) {
    if (rms_ceiling > 0 && r.err3d.rms > rms_ceiling) {
      std::fprintf(stderr, "evaluate: %s 3D RMS %.3f exceeds ceiling %.3f\n",
                   r.method.c_str(), r.err3d.rms, rms_ceiling);
      return kExitGate;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV localization in LiDAR point clouds"};
  app.require_subcommand(1);

  // shared options
  std::string manifest, labels, truth, range, grid_config, net_config,
      train_config, out, preset, spec_path, weights, trace_path, encoding =
      "binary", z_offset;
  std::vector<std::string> estimate_paths;
  long seed = 0;
  bool velocity_gate = false;
  double rate = 10.0, split = 0.75, max_speed = 0.5, max_dt = 0.15,
         rms_ceiling = 0.0;
  long scans = 0;

  auto add_seed = [&](CLI::App* cmd) {
    return cmd->add_option("--seed", seed, "master RNG seed")
        ->envname("UAVLOC_SEED");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "scene spec config file")
      ->envname("UAVLOC_SPEC");
  synth->add_option("--out", out, "output dataset directory")->required();
  auto* synth_seed = add_seed(synth);
  synth->add_option("--rate", rate, "frame rate, Hz");
  synth->add_option("--split", split, "train fraction");
  synth->add_option("--encoding", encoding, "pcd encoding: ascii|binary");

  CLI::App* cluster = app.add_subcommand("cluster", "clustering baseline");
  cluster->add_option("--manifest", manifest)->required()->envname("UAVLOC_MANIFEST");
  cluster->add_option("--range", range, "range series CSV")->required();
  cluster->add_option("--config", grid_config, "cluster config file");
  cluster->add_option("--out", out, "estimates CSV")->required();
  cluster->add_flag("--velocity-gate", velocity_gate, "enable the velocity gate");
  cluster->add_option("--max-speed", max_speed, "gate speed bound, m/s");

  CLI::App* encode = app.add_subcommand("encode", "dump pillar tensors");
  encode->add_option("--manifest", manifest)->required();
  encode->add_option("--preset", preset, "grid preset: tunnel|desk");
  encode->add_option("--grid-config", grid_config);
  encode->add_option("--out", out, "output directory")->required();
  add_seed(encode);

  CLI::App* train = app.add_subcommand("train", "train the detector");
  train->add_option("--manifest", manifest)->required();
  train->add_option("--labels", labels)->required();
  train->add_option("--preset", preset);
  train->add_option("--grid-config", grid_config);
  train->add_option("--net-config", net_config);
  train->add_option("--train-config", train_config);
  train->add_option("--out", out, "weights file")->required();
  train->add_option("--loss-trace", trace_path, "loss trace CSV path");
  auto* train_seed = add_seed(train);

  CLI::App* detect = app.add_subcommand("detect", "run detector inference");
  detect->add_option("--manifest", manifest)->required();
  detect->add_option("--weights", weights)->required();
  detect->add_option("--preset", preset);
  detect->add_option("--grid-config", grid_config);
  detect->add_option("--net-config", net_config);
  detect->add_option("--out", out, "estimates CSV")->required();
  add_seed(detect);

  CLI::App* evaluate = app.add_subcommand("evaluate", "error statistics report");
  evaluate->add_option("--estimates", estimate_paths, "estimate CSV (repeatable)")
      ->required();
  evaluate->add_option("--truth", truth)->required()->envname("UAVLOC_TRUTH");
  evaluate->add_option("--out", out, "report path prefix");
  evaluate->add_option("--z-offset", z_offset, "meters, or 'fit'");
  evaluate->add_option("--max-dt", max_dt, "alignment window, seconds");
  evaluate->add_option("--rms-ceiling", rms_ceiling,
                       "nonzero: fail (exit 5) when 3D RMS exceeds this");
  evaluate->add_option("--scans", scans, "total scan count for the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(spec_path, out, seed, !synth_seed->empty(), rate, split,
                       encoding);
    }
    if (cluster->parsed()) {
      return cmd_cluster(manifest, range, grid_config, out, velocity_gate,
                         max_speed);
    }
    if (encode->parsed()) {
      return cmd_encode(manifest, preset, grid_config, out, seed);
    }
    if (train->parsed()) {
      return cmd_train(manifest, labels, preset, grid_config, net_config,
                       train_config, out, trace_path, seed,
                       !train_seed->empty());
    }
    if (detect->parsed()) {
      return cmd_detect(manifest, weights, preset, grid_config, net_config,
                        out, seed);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(estimate_paths, truth, out, z_offset, max_dt,
                          rms_ceiling, scans);
    }
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const UnsupportedError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
