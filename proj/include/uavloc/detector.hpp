#ifndef UAVLOC_DETECTOR_HPP
#define UAVLOC_DETECTOR_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "uavloc/config.hpp"
#include "uavloc/nn/losses.hpp"
#include "uavloc/pillars.hpp"
#include "uavloc/types.hpp"

namespace uavloc {

// One backbone block of the downsampling path: an entry conv with the
// given stride followed by (layers - 1) stride-1 convs, every conv
// followed by batch norm and ReLU.
struct BackboneBlockSpec {
  int layers = 2;
  int channels = 16;
  int stride = 2;
};

struct AnchorTemplate {
  double length = 0.5;  // x extent, meters
  double width = 0.5;   // y extent, meters
  double height = 0.3;  // z extent, meters
  double z_center = 1.0;
  std::vector<double> yaws = {0.0, 1.5707963267948966};
};

struct NetworkConfig {
  int pfn_channels = 16;
  std::vector<BackboneBlockSpec> blocks = {{2, 16, 2}, {2, 32, 2}};
  int upsample_channels = 16;  // per-block channels after upsampling
  AnchorTemplate anchor;
  double match_iou_pos = 0.5;
  double match_iou_neg = 0.35;
  nn::ClsLoss cls_loss = nn::ClsLoss::kFocal;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double smooth_l1_beta = 1.0 / 9.0;
  double loc_weight = 2.0;
  double score_threshold = 0.6;
  double nms_iou = 0.5;

  int anchors_per_cell() const { return static_cast<int>(anchor.yaws.size()); }

  void validate() const;
  static NetworkConfig from_config(const Config& cfg);
  Config to_config() const;
};

struct TrainConfig {
  int mini_batch = 2;
  double learning_rate = 2e-4;
  int lr_drop_period = 15;      // epochs between learning-rate drops
  double lr_drop_factor = 0.8;
  double gradient_decay = 0.9;  // ADAM first-moment decay
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 70;
  std::uint64_t seed = 0;

  double lr_at_epoch(int epoch) const;
  void validate() const;
  static TrainConfig from_config(const Config& cfg);
  Config to_config() const;
};

// Anchor layout over the feature map (H/ds x W/ds cells, one anchor per
// yaw per cell). Flat anchor index: a = (yaw * hf + row) * wf + col,
// which matches the head's channel-major tensor layout.
struct AnchorGrid {
  int hf = 0, wf = 0, n_yaw = 0;
  std::vector<Cuboid> anchors;

  int index(int yaw, int row, int col) const {
    return (yaw * hf + row) * wf + col;
  }
  int count() const { return static_cast<int>(anchors.size()); }
};

AnchorGrid make_anchors(const GridParams& g, const NetworkConfig& net);

// Diagonal-normalized box encoding between a truth box and its anchor:
// (dx, dy, dz, dl, dw, dh, dyaw) with dx, dy scaled by the anchor's BEV
// diagonal, dz by its height, and log-ratio sizes.
std::array<double, 7> encode_box(const Cuboid& truth, const Cuboid& anchor);
Cuboid decode_box(const std::array<double, 7>& residuals,
                  const Cuboid& anchor);

// Per-anchor classification label and regression target.
struct RegressionTargets {
  std::vector<int> labels;  // +1 positive, -1 negative, 0 ignore
  std::vector<std::array<double, 7>> residuals;  // valid where label == +1
  int num_positive = 0;
};

// IoU-threshold matching: positive at iou >= match_iou_pos or as the
// best anchor of some truth box, negative below match_iou_neg, ignore
// in between.
RegressionTargets assign_targets(const AnchorGrid& anchors,
                                 const std::vector<Cuboid>& truths,
                                 const NetworkConfig& cfg);

// Greedy BEV NMS: drop below score_threshold, keep the best remaining
// score, suppress overlaps above iou_threshold. Ties break toward the
// earlier input index. Output sorted by descending score.
std::vector<Detection> nms(const std::vector<Detection>& detections,
                           double iou_threshold, double score_threshold);

}  // namespace uavloc

#endif
