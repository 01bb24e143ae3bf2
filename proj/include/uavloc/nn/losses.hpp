#ifndef UAVLOC_NN_LOSSES_HPP
#define UAVLOC_NN_LOSSES_HPP

#include <cmath>

#include "uavloc/nn/tensor.hpp"

namespace uavloc::nn {

enum class ClsLoss { kFocal, kCrossEntropy };

template <typename T>
double sigmoid(T z) {
  return 1.0 / (1.0 + std::exp(-double(z)));
}

// Per-anchor classification loss on a sigmoid logit. label: +1 positive,
// -1 negative. Returns the loss; *dlogit gets dL/dz.
inline double cls_loss_grad(double z, int label, ClsLoss kind, double alpha,
                            double gamma, double* dlogit) {
  double p = 1.0 / (1.0 + std::exp(-z));
  const double eps = 1e-9;
  double pc = p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p);
  if (kind == ClsLoss::kCrossEntropy) {
    if (label > 0) {
      *dlogit = p - 1.0;
      return -std::log(pc);
    }
    *dlogit = p;
    return -std::log(1.0 - pc);
  }
  // focal
  if (label > 0) {
    double om = 1.0 - p;
    *dlogit = alpha * (gamma * p * std::pow(om, gamma) * std::log(pc) -
                       std::pow(om, gamma + 1.0));
    return -alpha * std::pow(om, gamma) * std::log(pc);
  }
  double a = 1.0 - alpha;
  *dlogit = -a * (gamma * (1.0 - p) * std::pow(p, gamma) * std::log(1.0 - pc) -
                  std::pow(p, gamma + 1.0));
  return -a * std::pow(p, gamma) * std::log(1.0 - pc);
}

// Smooth-L1 (Huber) on one residual. Returns loss; *dpred gets dL/dpred.
inline double smooth_l1_grad(double pred, double target, double beta,
                             double* dpred) {
  double e = pred - target;
  double ae = std::abs(e);
  if (ae < beta) {
    *dpred = e / beta;
    return 0.5 * e * e / beta;
  }
  *dpred = e > 0 ? 1.0 : -1.0;
  return ae - 0.5 * beta;
}

}  // namespace uavloc::nn

#endif
