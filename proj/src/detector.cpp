#include "uavloc/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "uavloc/error.hpp"
#include "uavloc/geometry.hpp"

namespace uavloc {

void NetworkConfig::validate() const {
  if (pfn_channels < 1) throw ConfigError("net: pfn_channels must be >= 1");
  if (blocks.empty()) throw ConfigError("net: at least one backbone block");
  for (const auto& b : blocks) {
    if (b.layers < 1 || b.channels < 1 || b.stride < 1) {
      throw ConfigError("net: block layers/channels/stride must be positive");
    }
  }
  if (upsample_channels < 1) throw ConfigError("net: upsample_channels >= 1");
  if (anchor.yaws.empty()) throw ConfigError("net: anchor yaw set is empty");
  if (anchor.length <= 0 || anchor.width <= 0 || anchor.height <= 0) {
    throw ConfigError("net: anchor extents must be positive");
  }
  if (!(match_iou_neg < match_iou_pos)) {
    throw ConfigError("net: match_iou_neg must be below match_iou_pos");
  }
  if (match_iou_pos > 1.0 || match_iou_neg < 0.0) {
    throw ConfigError("net: match thresholds must lie in [0, 1]");
  }
}

NetworkConfig NetworkConfig::from_config(const Config& cfg) {
  NetworkConfig n;
  n.pfn_channels = static_cast<int>(cfg.get_int("net.pfn_channels", 16));
  if (cfg.has("net.blocks")) {
    // "layers:channels:stride,layers:channels:stride,..."
    n.blocks.clear();
    std::istringstream ss(cfg.get_string("net.blocks"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      BackboneBlockSpec b;
      if (std::sscanf(item.c_str(), "%d:%d:%d", &b.layers, &b.channels,
                      &b.stride) != 3) {
        throw ConfigError("net.blocks: expected 'layers:channels:stride' "
                          "items, got: " + item);
      }
      n.blocks.push_back(b);
    }
  }
  n.upsample_channels =
      static_cast<int>(cfg.get_int("net.upsample_channels", 16));
  n.anchor.length = cfg.get_double("net.anchor_length", 0.5);
  n.anchor.width = cfg.get_double("net.anchor_width", 0.5);
  n.anchor.height = cfg.get_double("net.anchor_height", 0.3);
  n.anchor.z_center = cfg.get_double("net.anchor_z_center", 1.0);
  if (cfg.has("net.anchor_yaws")) {
    n.anchor.yaws.clear();
    std::istringstream ss(cfg.get_string("net.anchor_yaws"));
    std::string item;
    while (std::getline(ss, item, ',')) n.anchor.yaws.push_back(std::stod(item));
  }
  n.match_iou_pos = cfg.get_double("net.match_iou_pos", 0.5);
  n.match_iou_neg = cfg.get_double("net.match_iou_neg", 0.35);
  std::string loss = cfg.get_string("net.cls_loss", "focal");
  if (loss == "focal") n.cls_loss = nn::ClsLoss::kFocal;
  else if (loss == "cross_entropy") n.cls_loss = nn::ClsLoss::kCrossEntropy;
  else throw ConfigError("net.cls_loss: expected focal|cross_entropy");
  n.focal_alpha = cfg.get_double("net.focal_alpha", 0.25);
  n.focal_gamma = cfg.get_double("net.focal_gamma", 2.0);
  n.smooth_l1_beta = cfg.get_double("net.smooth_l1_beta", 1.0 / 9.0);
  n.loc_weight = cfg.get_double("net.loc_weight", 2.0);
  n.score_threshold = cfg.get_double("net.score_threshold", 0.6);
  n.nms_iou = cfg.get_double("net.nms_iou", 0.5);
  n.validate();
  return n;
}

Config NetworkConfig::to_config() const {
  Config cfg;
  auto put = [&](const std::string& k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    cfg.set(k, buf);
  };
  cfg.set("net.pfn_channels", std::to_string(pfn_channels));
  std::string bs;
  for (const auto& b : blocks) {
    if (!bs.empty()) bs += ',';
    bs += std::to_string(b.layers) + ':' + std::to_string(b.channels) + ':' +
          std::to_string(b.stride);
  }
  cfg.set("net.blocks", bs);
  cfg.set("net.upsample_channels", std::to_string(upsample_channels));
  put("net.anchor_length", anchor.length);
  put("net.anchor_width", anchor.width);
  put("net.anchor_height", anchor.height);
  put("net.anchor_z_center", anchor.z_center);
  std::string ys;
  for (double y : anchor.yaws) {
    if (!ys.empty()) ys += ',';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", y);
    ys += buf;
  }
  cfg.set("net.anchor_yaws", ys);
  put("net.match_iou_pos", match_iou_pos);
  put("net.match_iou_neg", match_iou_neg);
  cfg.set("net.cls_loss",
          cls_loss == nn::ClsLoss::kFocal ? "focal" : "cross_entropy");
  put("net.focal_alpha", focal_alpha);
  put("net.focal_gamma", focal_gamma);
  put("net.smooth_l1_beta", smooth_l1_beta);
  put("net.loc_weight", loc_weight);
  put("net.score_threshold", score_threshold);
  put("net.nms_iou", nms_iou);
  return cfg;
}

double TrainConfig::lr_at_epoch(int epoch) const {
  int drops = lr_drop_period > 0 ? epoch / lr_drop_period : 0;
  return learning_rate * std::pow(lr_drop_factor, drops);
}

void TrainConfig::validate() const {
  if (mini_batch < 1) throw ConfigError("train: mini_batch must be >= 1");
  if (learning_rate <= 0) throw ConfigError("train: learning_rate > 0");
  if (lr_drop_period < 1) throw ConfigError("train: lr_drop_period >= 1");
  if (lr_drop_factor <= 0 || lr_drop_factor >= 1) {
    throw ConfigError("train: lr_drop_factor must be in (0, 1)");
  }
  if (gradient_decay <= 0 || gradient_decay >= 1) {
    throw ConfigError("train: gradient_decay must be in (0, 1)");
  }
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
}

TrainConfig TrainConfig::from_config(const Config& cfg) {
  TrainConfig t;
  t.mini_batch = static_cast<int>(cfg.get_int("train.mini_batch", 2));
  t.learning_rate = cfg.get_double("train.learning_rate", 2e-4);
  t.lr_drop_period = static_cast<int>(cfg.get_int("train.lr_drop_period", 15));
  t.lr_drop_factor = cfg.get_double("train.lr_drop_factor", 0.8);
  t.gradient_decay = cfg.get_double("train.gradient_decay", 0.9);
  t.adam_beta2 = cfg.get_double("train.adam_beta2", 0.999);
  t.adam_eps = cfg.get_double("train.adam_eps", 1e-8);
  t.epochs = static_cast<int>(cfg.get_int("train.epochs", 70));
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
  t.validate();
  return t;
}

Config TrainConfig::to_config() const {
  Config cfg;
  auto put = [&](const std::string& k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    cfg.set(k, buf);
  };
  cfg.set("train.mini_batch", std::to_string(mini_batch));
  put("train.learning_rate", learning_rate);
  cfg.set("train.lr_drop_period", std::to_string(lr_drop_period));
  put("train.lr_drop_factor", lr_drop_factor);
  put("train.gradient_decay", gradient_decay);
  put("train.adam_beta2", adam_beta2);
  put("train.adam_eps", adam_eps);
  cfg.set("train.epochs", std::to_string(epochs));
  cfg.set("train.seed", std::to_string(seed));
  return cfg;
}

AnchorGrid make_anchors(const GridParams& g, const NetworkConfig& net) {
  AnchorGrid grid;
  grid.hf = g.y_n / g.ds_factor;
  grid.wf = g.x_n / g.ds_factor;
  grid.n_yaw = net.anchors_per_cell();
  grid.anchors.resize(static_cast<std::size_t>(grid.hf) * grid.wf * grid.n_yaw);
  const double cell_w = g.x_step * g.ds_factor;
  const double cell_h = g.y_step * g.ds_factor;
  for (int yaw = 0; yaw < grid.n_yaw; ++yaw) {
    for (int row = 0; row < grid.hf; ++row) {
      for (int col = 0; col < grid.wf; ++col) {
        Cuboid a;
        a.x_ctr = g.x_min + (col + 0.5) * cell_w;
        a.y_ctr = g.y_min + (row + 0.5) * cell_h;
        a.z_ctr = net.anchor.z_center;
        a.x_len = net.anchor.length;
        a.y_len = net.anchor.width;
        a.z_len = net.anchor.height;
        a.z_rot = net.anchor.yaws[yaw];
        grid.anchors[grid.index(yaw, row, col)] = a;
      }
    }
  }
  return grid;
}

std::array<double, 7> encode_box(const Cuboid& truth, const Cuboid& anchor) {
  const double diag =
      std::sqrt(anchor.x_len * anchor.x_len + anchor.y_len * anchor.y_len);
  return {(truth.x_ctr - anchor.x_ctr) / diag,
          (truth.y_ctr - anchor.y_ctr) / diag,
          (truth.z_ctr - anchor.z_ctr) / anchor.z_len,
          std::log(truth.x_len / anchor.x_len),
          std::log(truth.y_len / anchor.y_len),
          std::log(truth.z_len / anchor.z_len),
          truth.z_rot - anchor.z_rot};
}

Cuboid decode_box(const std::array<double, 7>& r, const Cuboid& anchor) {
  const double diag =
      std::sqrt(anchor.x_len * anchor.x_len + anchor.y_len * anchor.y_len);
  Cuboid b;
  b.x_ctr = anchor.x_ctr + r[0] * diag;
  b.y_ctr = anchor.y_ctr + r[1] * diag;
  b.z_ctr = anchor.z_ctr + r[2] * anchor.z_len;
  b.x_len = anchor.x_len * std::exp(r[3]);
  b.y_len = anchor.y_len * std::exp(r[4]);
  b.z_len = anchor.z_len * std::exp(r[5]);
  b.z_rot = anchor.z_rot + r[6];
  return b;
}

RegressionTargets assign_targets(const AnchorGrid& anchors,
                                 const std::vector<Cuboid>& truths,
                                 const NetworkConfig& cfg) {
  const int A = anchors.count();
  const int Tn = static_cast<int>(truths.size());
  RegressionTargets t;
  t.labels.assign(A, -1);
  t.residuals.assign(A, {});
  if (Tn == 0) return t;

  std::vector<double> best_iou(A, 0.0);
  std::vector<int> best_truth(A, -1);
  std::vector<double> truth_best_iou(Tn, -1.0);
  std::vector<int> truth_best_anchor(Tn, -1);

  for (int a = 0; a < A; ++a) {
    for (int ti = 0; ti < Tn; ++ti) {
      double iou = bev_iou(anchors.anchors[a], truths[ti]);
      if (iou > best_iou[a]) {
        best_iou[a] = iou;
        best_truth[a] = ti;
      }
      if (iou > truth_best_iou[ti]) {
        truth_best_iou[ti] = iou;
        truth_best_anchor[ti] = a;
      }
    }
  }
  for (int a = 0; a < A; ++a) {
    if (best_iou[a] >= cfg.match_iou_pos) {
      t.labels[a] = 1;
    } else if (best_iou[a] < cfg.match_iou_neg) {
      t.labels[a] = -1;
    } else {
      t.labels[a] = 0;
    }
  }
  // force-match: every truth keeps its best anchor as a positive
  for (int ti = 0; ti < Tn; ++ti) {
    int a = truth_best_anchor[ti];
    if (a >= 0 && truth_best_iou[ti] > 0.0) {
      t.labels[a] = 1;
      best_truth[a] = ti;
    }
  }
  for (int a = 0; a < A; ++a) {
    if (t.labels[a] == 1) {
      t.residuals[a] = encode_box(truths[best_truth[a]], anchors.anchors[a]);
      ++t.num_positive;
    }
  }
  return t;
}

std::vector<Detection> nms(const std::vector<Detection>& detections,
                           double iou_threshold, double score_threshold) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score >= score_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (bev_iou(detections[i].box, k.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(detections[i]);
  }
  return kept;
}

}  // namespace uavloc
