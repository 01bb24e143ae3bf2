#ifndef UAVLOC_NN_NETWORK_HPP
#define UAVLOC_NN_NETWORK_HPP

#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uavloc/detector.hpp"
#include "uavloc/error.hpp"
#include "uavloc/nn/layers.hpp"
#include "uavloc/nn/losses.hpp"
#include "uavloc/pcd_io.hpp"
#include "uavloc/pillars.hpp"
#include "uavloc/rng.hpp"

namespace uavloc::nn {

// PointPillars-style detector: pillar feature net, top-down 2D conv
// backbone with per-block upsampling, and a single-shot anchor head.
// T = float for training/inference, T = double for the gradient harness.
template <typename T>
class PointPillarsNet {
 public:
  struct Output {
    Tensor<T> cls;  // [n_yaw, hf, wf]; flat offset == anchor index
    Tensor<T> reg;  // [n_yaw * 7, hf, wf]
  };

  PointPillarsNet(const NetworkConfig& cfg, const GridParams& grid,
                  std::uint64_t seed)
      : cfg_(cfg), grid_(grid) {
    cfg_.validate();
    std::mt19937_64 rng(mix_seed(seed, 0x4e455457ULL));
    pfn_linear_.init(9, std::size_t(cfg_.pfn_channels), rng);
    pfn_bn_.init(std::size_t(cfg_.pfn_channels));

    int in_ch = cfg_.pfn_channels;
    int cum_stride = 1;
    for (const BackboneBlockSpec& spec : cfg_.blocks) {
      Block b;
      b.spec = spec;
      for (int j = 0; j < spec.layers; ++j) {
        Conv2d<T> conv;
        conv.init(std::size_t(j == 0 ? in_ch : spec.channels),
                  std::size_t(spec.channels), 3, j == 0 ? spec.stride : 1, 1,
                  rng);
        b.convs.push_back(std::move(conv));
        BatchNorm<T> bn;
        bn.init(std::size_t(spec.channels));
        b.bns.push_back(std::move(bn));
        b.relus.emplace_back();
      }
      cum_stride *= spec.stride;
      if (cum_stride % grid_.ds_factor != 0 && grid_.ds_factor % cum_stride != 0) {
        throw ConfigError("net: cumulative stride must be compatible with "
                          "ds_factor");
      }
      int up_stride = cum_stride / grid_.ds_factor;
      if (up_stride < 1) {
        throw ConfigError("net: block resolution above the ds_factor target");
      }
      if (up_stride == 1) {
        b.up.init(std::size_t(spec.channels), std::size_t(cfg_.upsample_channels),
                  3, 1, 1, rng);
      } else {
        b.up.init(std::size_t(spec.channels), std::size_t(cfg_.upsample_channels),
                  up_stride, up_stride, 0, rng);
      }
      b.up_bn.init(std::size_t(cfg_.upsample_channels));
      b.up_relus.emplace_back();
      blocks_.push_back(std::move(b));
      in_ch = spec.channels;
    }

    const int concat_ch =
        cfg_.upsample_channels * static_cast<int>(cfg_.blocks.size());
    const int n_yaw = cfg_.anchors_per_cell();
    head_cls_.init(std::size_t(concat_ch), std::size_t(n_yaw), 1, 1, 0, rng);
    head_reg_.init(std::size_t(concat_ch), std::size_t(n_yaw * 7), 1, 1, 0, rng);
    // bias the classifier toward "background" so early training is not
    // swamped by the easy negatives
    const double prior = 0.01;
    for (T& v : head_cls_.b.value.data)
      v = static_cast<T>(-std::log((1.0 - prior) / prior));
  }

  const NetworkConfig& config() const { return cfg_; }
  const GridParams& grid() const { return grid_; }

  Output forward(const PillarTensor& pillars, bool train) {
    const int P = pillars.num_pillars();
    const int C = cfg_.pfn_channels;
    cached_counts_ = pillars.counts;
    cached_indices_ = pillars.indices;

    // gather real points into a dense [M x 9] matrix
    std::size_t M = 0;
    for (int c : pillars.counts) M += std::size_t(c);
    Tensor<T> pts({M, 9});
    std::size_t row = 0;
    for (int p = 0; p < P; ++p) {
      for (int k = 0; k < pillars.counts[p]; ++k) {
        const double* f = pillars.point_features(p, k);
        for (int j = 0; j < 9; ++j) pts.at(row, std::size_t(j)) = T(f[j]);
        ++row;
      }
    }

    Tensor<T> h = pfn_linear_.forward(pts);
    h = pfn_bn_.forward(h, train);
    h = pfn_relu_.forward(h);
    Tensor<T> pillar_feats = pfn_max_.forward(h, pillars.counts);  // [P x C]

    Tensor<T> x = scatter(pillar_feats, pillars.indices, grid_);
    (void)C;

    std::vector<Tensor<T>> ups;
    for (Block& b : blocks_) {
      for (std::size_t j = 0; j < b.convs.size(); ++j) {
        x = b.convs[j].forward(x);
        x = b.bns[j].forward(x, train);
        x = b.relus[j].forward(x);
      }
      Tensor<T> u = b.up.forward(x);
      u = b.up_bn.forward(u, train);
      u = b.up_relus[0].forward(u);
      ups.push_back(std::move(u));
    }

    // concat along channels
    const std::size_t hf = ups[0].dim(1), wf = ups[0].dim(2);
    const std::size_t uc = ups[0].dim(0);
    Tensor<T> feat({uc * ups.size(), hf, wf});
    for (std::size_t i = 0; i < ups.size(); ++i) {
      std::copy(ups[i].data.begin(), ups[i].data.end(),
                feat.data.begin() + i * ups[i].numel());
    }
    concat_splits_ = ups.size();
    Output out;
    out.cls = head_cls_.forward(feat);
    out.reg = head_reg_.forward(feat);
    return out;
  }

  // Accumulates parameter gradients for the most recent forward pass.
  void backward(const Tensor<T>& gcls, const Tensor<T>& greg) {
    Tensor<T> gfeat = head_cls_.backward(gcls);
    Tensor<T> gfeat2 = head_reg_.backward(greg);
    for (std::size_t i = 0; i < gfeat.data.size(); ++i)
      gfeat.data[i] += gfeat2.data[i];

    const std::size_t per = gfeat.numel() / concat_splits_;
    const std::size_t hf = gfeat.dim(1), wf = gfeat.dim(2);
    const std::size_t uc = gfeat.dim(0) / concat_splits_;

    Tensor<T> carry;  // gradient wrt the current block's conv-chain input
    for (std::size_t bi = blocks_.size(); bi-- > 0;) {
      Block& b = blocks_[bi];
      Tensor<T> gup({uc, hf, wf});
      std::copy(gfeat.data.begin() + bi * per,
                gfeat.data.begin() + (bi + 1) * per, gup.data.begin());
      Tensor<T> g = b.up_relus[0].backward(gup);
      g = b.up_bn.backward(g);
      g = b.up.backward(g);
      if (bi + 1 < blocks_.size()) {
        for (std::size_t i = 0; i < g.data.size(); ++i)
          g.data[i] += carry.data[i];
      }
      for (std::size_t j = b.convs.size(); j-- > 0;) {
        g = b.relus[j].backward(g);
        g = b.bns[j].backward(g);
        g = b.convs[j].backward(g);
      }
      carry = std::move(g);
    }

    // carry is now the gradient wrt the pseudo-image: un-scatter it
    const std::size_t C = carry.dim(0);
    Tensor<T> gpillar({cached_indices_.size(), C});
    for (std::size_t p = 0; p < cached_indices_.size(); ++p) {
      auto [r, c] = cached_indices_[p];
      for (std::size_t ch = 0; ch < C; ++ch)
        gpillar.at(p, ch) = carry.at(ch, std::size_t(r), std::size_t(c));
    }
    Tensor<T> g = pfn_max_.backward(gpillar);
    g = pfn_relu_.backward(g);
    g = pfn_bn_.backward(g);
    pfn_linear_.backward(g);
  }

  void zero_grad() {
    visit_params([](const std::string&, Param<T>& p) { p.zero_grad(); });
  }

  template <typename Fn>
  void visit_params(Fn&& fn) {
    fn("pfn.linear.w", pfn_linear_.w);
    fn("pfn.linear.b", pfn_linear_.b);
    fn("pfn.bn.gamma", pfn_bn_.gamma);
    fn("pfn.bn.beta", pfn_bn_.beta);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      std::string pre = "block" + std::to_string(i) + ".";
      Block& b = blocks_[i];
      for (std::size_t j = 0; j < b.convs.size(); ++j) {
        std::string cj = pre + "conv" + std::to_string(j) + ".";
        fn(cj + "w", b.convs[j].w);
        fn(cj + "b", b.convs[j].b);
        std::string bj = pre + "bn" + std::to_string(j) + ".";
        fn(bj + "gamma", b.bns[j].gamma);
        fn(bj + "beta", b.bns[j].beta);
      }
      fn(pre + "up.w", b.up.w);
      fn(pre + "up.b", b.up.b);
      fn(pre + "up_bn.gamma", b.up_bn.gamma);
      fn(pre + "up_bn.beta", b.up_bn.beta);
    }
    fn("head.cls.w", head_cls_.w);
    fn("head.cls.b", head_cls_.b);
    fn("head.reg.w", head_reg_.w);
    fn("head.reg.b", head_reg_.b);
  }

  // Non-trainable state (batch-norm running statistics).
  template <typename Fn>
  void visit_state(Fn&& fn) {
    fn("pfn.bn.running_mean", pfn_bn_.running_mean);
    fn("pfn.bn.running_var", pfn_bn_.running_var);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      std::string pre = "block" + std::to_string(i) + ".";
      Block& b = blocks_[i];
      for (std::size_t j = 0; j < b.bns.size(); ++j) {
        std::string bj = pre + "bn" + std::to_string(j) + ".";
        fn(bj + "running_mean", b.bns[j].running_mean);
        fn(bj + "running_var", b.bns[j].running_var);
      }
      fn(pre + "up_bn.running_mean", b.up_bn.running_mean);
      fn(pre + "up_bn.running_var", b.up_bn.running_var);
    }
  }

  template <typename Fn>
  void visit_tensors(Fn&& fn) {
    visit_params([&](const std::string& n, Param<T>& p) { fn(n, p.value); });
    visit_state(fn);
  }

 private:
  struct Block {
    BackboneBlockSpec spec;
    std::vector<Conv2d<T>> convs;
    std::vector<BatchNorm<T>> bns;
    std::vector<ReLU<T>> relus;
    ConvTranspose2d<T> up;
    BatchNorm<T> up_bn;
    std::vector<ReLU<T>> up_relus;
  };

  NetworkConfig cfg_;
  GridParams grid_;
  Linear<T> pfn_linear_;
  BatchNorm<T> pfn_bn_;
  ReLU<T> pfn_relu_;
  MaskedMaxPool<T> pfn_max_;
  std::vector<Block> blocks_;
  Conv2d<T> head_cls_;
  Conv2d<T> head_reg_;

  std::vector<int> cached_counts_;
  std::vector<std::pair<int, int>> cached_indices_;
  std::size_t concat_splits_ = 1;
};

// Focal (or cross-entropy) classification plus smooth-L1 localization.
// Returns the scalar loss scaled by `scale` and writes gradient tensors
// (also scaled) for PointPillarsNet::backward.
template <typename T>
double detection_loss(const typename PointPillarsNet<T>::Output& out,
                      const RegressionTargets& tgt, const NetworkConfig& cfg,
                      double scale, Tensor<T>* gcls, Tensor<T>* greg) {
  const std::size_t A = out.cls.numel();
  if (tgt.labels.size() != A) {
    throw ContractError("detection_loss: target/anchor count mismatch");
  }
  const std::size_t hf = out.cls.dim(1), wf = out.cls.dim(2);
  const std::size_t plane = hf * wf;
  *gcls = Tensor<T>(out.cls.shape);
  *greg = Tensor<T>(out.reg.shape);
  const double npos = std::max(1, tgt.num_positive);

  double loss = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    int label = tgt.labels[a];
    if (label == 0) continue;  // ignore band
    double dz = 0.0;
    loss += cls_loss_grad(double(out.cls.data[a]), label, cfg.cls_loss,
                          cfg.focal_alpha, cfg.focal_gamma, &dz) / npos;
    gcls->data[a] = static_cast<T>(scale * dz / npos);
    if (label > 0) {
      std::size_t yaw = a / plane;
      std::size_t cell = a % plane;
      for (int k = 0; k < 7; ++k) {
        std::size_t off = (yaw * 7 + std::size_t(k)) * plane + cell;
        double dp = 0.0;
        loss += cfg.loc_weight *
                smooth_l1_grad(double(out.reg.data[off]), tgt.residuals[a][k],
                               cfg.smooth_l1_beta, &dp) / npos;
        greg->data[off] = static_cast<T>(scale * cfg.loc_weight * dp / npos);
      }
    }
  }
  return loss * scale;
}

struct TrainSample {
  PillarTensor pillars;
  std::vector<Cuboid> truths;
};

// ADAM training loop over per-sample forward/backward with gradient
// accumulation across the mini-batch. Returns the per-epoch mean loss.
// Throws DivergenceError on a non-finite loss.
template <typename T>
std::vector<double> train_detector(PointPillarsNet<T>& net,
                                   const std::vector<TrainSample>& data,
                                   const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ContractError("train: dataset is empty");
  AnchorGrid anchors = make_anchors(net.grid(), net.config());
  std::vector<RegressionTargets> targets;
  targets.reserve(data.size());
  for (const TrainSample& s : data) {
    targets.push_back(assign_targets(anchors, s.truths, net.config()));
  }

  std::vector<double> trace;
  long step = 0;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x45504F43ULL + std::uint64_t(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.lr_at_epoch(epoch);
    double epoch_loss = 0.0;
    std::size_t nbatches = 0;

    for (std::size_t start = 0; start < order.size();
         start += std::size_t(cfg.mini_batch)) {
      std::size_t end =
          std::min(order.size(), start + std::size_t(cfg.mini_batch));
      const double scale = 1.0 / double(end - start);
      net.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        auto out = net.forward(data[order[i]].pillars, /*train=*/true);
        Tensor<T> gcls, greg;
        batch_loss += detection_loss<T>(out, targets[order[i]], net.config(),
                                        scale, &gcls, &greg);
        net.backward(gcls, greg);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError(epoch, "training diverged at epoch " +
                                         std::to_string(epoch) +
                                         ": non-finite loss");
      }
      ++step;
      const double b1 = cfg.gradient_decay, b2 = cfg.adam_beta2;
      const double bc1 = 1.0 - std::pow(b1, double(step));
      const double bc2 = 1.0 - std::pow(b2, double(step));
      net.visit_params([&](const std::string&, Param<T>& p) {
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
          double g = double(p.grad.data[i]);
          double m = b1 * double(p.adam_m.data[i]) + (1.0 - b1) * g;
          double v = b2 * double(p.adam_v.data[i]) + (1.0 - b2) * g * g;
          p.adam_m.data[i] = static_cast<T>(m);
          p.adam_v.data[i] = static_cast<T>(v);
          p.value.data[i] -= static_cast<T>(
              lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps));
        }
      });
      epoch_loss += batch_loss;
      ++nbatches;
    }
    trace.push_back(epoch_loss / double(nbatches));
  }
  return trace;
}

struct DetectResult {
  std::vector<Detection> detections;            // after NMS
  std::optional<PositionEstimate> estimate;     // absent == NP
};

// Full inference pipeline: crop -> pillars -> net -> decode -> NMS.
template <typename T>
DetectResult run_detect(PointPillarsNet<T>& net, const PointCloud& cloud,
                        int max_pillars, int max_points_per_pillar,
                        std::uint64_t seed) {
  const GridParams& g = net.grid();
  PointCloud cropped = crop(cloud, g.bounds());
  PillarTensor pillars =
      encode_pillars(cropped, g, max_pillars, max_points_per_pillar, seed);
  auto out = net.forward(pillars, /*train=*/false);

  AnchorGrid anchors = make_anchors(g, net.config());
  const NetworkConfig& cfg = net.config();
  std::vector<Detection> raw;
  for (int a = 0; a < anchors.count(); ++a) {
    double score = sigmoid(out.cls.data[std::size_t(a)]);
    if (score < cfg.score_threshold) continue;
    const std::size_t plane = std::size_t(anchors.hf) * anchors.wf;
    std::size_t yaw = std::size_t(a) / plane;
    std::size_t cell = std::size_t(a) % plane;
    std::array<double, 7> r;
    for (int k = 0; k < 7; ++k) {
      r[std::size_t(k)] =
          double(out.reg.data[(yaw * 7 + std::size_t(k)) * plane + cell]);
    }
    Detection d;
    d.box = decode_box(r, anchors.anchors[std::size_t(a)]);
    d.score = score;
    raw.push_back(d);
  }
  DetectResult res;
  res.detections = nms(raw, cfg.nms_iou, cfg.score_threshold);
  if (!res.detections.empty()) {
    const Cuboid& b = res.detections.front().box;
    PositionEstimate est;
    est.x = b.x_ctr;
    est.y = b.y_ctr;
    est.z = b.z_ctr;
    est.timestamp = cloud.timestamp;
    est.source = EstimateSource::kNetwork;
    res.estimate = est;
  }
  return res;
}

// Weights container. Little-endian layout:
//   magic "UVWT", u32 version, u32 tensor count, then per tensor:
//   u32 name length, name bytes, u32 rank, u64 dims..., float32 data.
template <typename T>
std::string save_weights(PointPillarsNet<T>& net) {
  std::string out;
  out.append("UVWT", 4);
  auto put32 = [&](std::uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
  };
  put32(1u);
  std::uint32_t count = 0;
  net.visit_tensors([&](const std::string&, Tensor<T>&) { ++count; });
  put32(count);
  net.visit_tensors([&](const std::string& name, Tensor<T>& t) {
    put32(std::uint32_t(name.size()));
    out.append(name);
    put32(std::uint32_t(t.shape.size()));
    for (std::size_t d : t.shape) {
      std::uint64_t v = d;
      out.append(reinterpret_cast<const char*>(&v), 8);
    }
    for (const T& x : t.data) {
      float f = static_cast<float>(x);
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  });
  return out;
}

template <typename T>
void load_weights(PointPillarsNet<T>& net, std::string_view bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) {
      throw ParseError("weights: truncated at byte " + std::to_string(pos));
    }
  };
  auto get32 = [&]() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  };
  need(4);
  if (bytes.substr(0, 4) != "UVWT") throw ParseError("weights: bad magic");
  pos = 4;
  std::uint32_t version = get32();
  if (version != 1) {
    throw UnsupportedError("weights: unsupported version " +
                           std::to_string(version));
  }
  std::uint32_t count = get32();
  std::map<std::string, std::vector<float>> tensors;
  std::map<std::string, std::vector<std::size_t>> shapes;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t nlen = get32();
    need(nlen);
    std::string name(bytes.substr(pos, nlen));
    pos += nlen;
    std::uint32_t rank = get32();
    if (rank > 8) throw ParseError("weights: implausible tensor rank");
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      need(8);
      std::uint64_t v;
      std::memcpy(&v, bytes.data() + pos, 8);
      pos += 8;
      shape[d] = std::size_t(v);
      numel *= shape[d];
    }
    need(numel * 4);
    std::vector<float> data(numel);
    std::memcpy(data.data(), bytes.data() + pos, numel * 4);
    pos += numel * 4;
    tensors[name] = std::move(data);
    shapes[name] = std::move(shape);
  }
  net.visit_tensors([&](const std::string& name, Tensor<T>& t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw ParseError("weights: missing tensor '" + name + "'");
    }
    if (shapes[name] != t.shape) {
      throw ParseError("weights: shape mismatch for tensor '" + name + "'");
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      t.data[i] = static_cast<T>(it->second[i]);
    }
  });
}

}  // namespace uavloc::nn

#endif
