#ifndef UAVLOC_NN_LAYERS_HPP
#define UAVLOC_NN_LAYERS_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "uavloc/nn/tensor.hpp"

namespace uavloc::nn {

// Trainable parameter with its gradient and ADAM moment buffers.
template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;

  void init(std::vector<std::size_t> shape) {
    value = Tensor<T>(shape);
    grad = Tensor<T>(shape);
    adam_m = Tensor<T>(shape);
    adam_v = Tensor<T>(shape);
  }

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
void kaiming_init(Tensor<T>& w, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
  for (T& v : w.data) v = static_cast<T>(dist(rng));
}

// y = x W + b with x [M x in], W [in x out].
template <typename T>
struct Linear {
  Param<T> w;
  Param<T> b;
  Tensor<T> cached_x;

  void init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    w.init({in, out});
    b.init({out});
    kaiming_init(w.value, in, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    cached_x = x;
    const std::size_t M = x.dim(0), in = x.dim(1), out = w.value.dim(1);
    Tensor<T> y({M, out});
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t o = 0; o < out; ++o) y.at(i, o) = b.value.data[o];
      for (std::size_t k = 0; k < in; ++k) {
        T xv = x.at(i, k);
        const T* wr = w.value.data.data() + k * out;
        T* yr = y.data.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += xv * wr[o];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t M = cached_x.dim(0), in = cached_x.dim(1),
                      out = w.value.dim(1);
    Tensor<T> gx({M, in});
    for (std::size_t i = 0; i < M; ++i) {
      const T* gyr = gy.data.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) b.grad.data[o] += gyr[o];
      for (std::size_t k = 0; k < in; ++k) {
        T xv = cached_x.at(i, k);
        T* gwr = w.grad.data.data() + k * out;
        const T* wr = w.value.data.data() + k * out;
        double acc = 0;
        for (std::size_t o = 0; o < out; ++o) {
          gwr[o] += xv * gyr[o];
          acc += double(wr[o]) * double(gyr[o]);
        }
        gx.at(i, k) = static_cast<T>(acc);
      }
    }
    return gx;
  }
};

// Batch normalization. Axis layout is chosen by the caller:
//   rank-2 input [M x C]  -> stats per channel over M rows (PFN points)
//   rank-3 input [C x H x W] -> stats per channel over the spatial plane
// Train mode uses batch statistics and updates the running estimates;
// eval mode is a fixed affine map from the running estimates.
template <typename T>
struct BatchNorm {
  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  // caches
  Tensor<T> xhat;
  std::vector<double> inv_std;
  bool cached_train = false;

  void init(std::size_t channels) {
    gamma.init({channels});
    beta.init({channels});
    gamma.value.fill(T(1));
    running_mean = Tensor<T>({channels});
    running_var = Tensor<T>({channels});
    running_var.fill(T(1));
  }

  std::size_t channels() const { return gamma.value.dim(0); }

  // Gathers (count, stride-pattern) per layout.
  template <typename Fn>
  void for_each(const Tensor<T>& x, Fn&& fn) const {
    const std::size_t C = channels();
    if (x.shape.size() == 2) {
      const std::size_t M = x.dim(0);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < M; ++i) fn(c, i * C + c);
    } else {
      const std::size_t plane = x.dim(1) * x.dim(2);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < plane; ++i) fn(c, c * plane + i);
    }
  }

  std::size_t per_channel_count(const Tensor<T>& x) const {
    return x.shape.size() == 2 ? x.dim(0) : x.dim(1) * x.dim(2);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    const std::size_t C = channels();
    const std::size_t N = per_channel_count(x);
    Tensor<T> y(x.shape);
    xhat = Tensor<T>(x.shape);
    inv_std.assign(C, 0.0);
    cached_train = train;

    std::vector<double> mean(C, 0.0), var(C, 0.0);
    if (train && N > 0) {
      for_each(x, [&](std::size_t c, std::size_t off) {
        mean[c] += double(x.data[off]);
      });
      for (std::size_t c = 0; c < C; ++c) mean[c] /= double(N);
      for_each(x, [&](std::size_t c, std::size_t off) {
        double d = double(x.data[off]) - mean[c];
        var[c] += d * d;
      });
      for (std::size_t c = 0; c < C; ++c) var[c] /= double(N);
      for (std::size_t c = 0; c < C; ++c) {
        running_mean.data[c] = static_cast<T>(
            (1.0 - momentum) * double(running_mean.data[c]) + momentum * mean[c]);
        running_var.data[c] = static_cast<T>(
            (1.0 - momentum) * double(running_var.data[c]) + momentum * var[c]);
      }
    } else {
      for (std::size_t c = 0; c < C; ++c) {
        mean[c] = double(running_mean.data[c]);
        var[c] = double(running_var.data[c]);
      }
    }
    for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    for_each(x, [&](std::size_t c, std::size_t off) {
      double xh = (double(x.data[off]) - mean[c]) * inv_std[c];
      xhat.data[off] = static_cast<T>(xh);
      y.data[off] =
          static_cast<T>(double(gamma.value.data[c]) * xh + double(beta.value.data[c]));
    });
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t C = channels();
    const double N = double(per_channel_count(gy));
    Tensor<T> gx(gy.shape);
    std::vector<double> dgamma(C, 0.0), dbeta(C, 0.0);
    for_each(gy, [&](std::size_t c, std::size_t off) {
      dgamma[c] += double(gy.data[off]) * double(xhat.data[off]);
      dbeta[c] += double(gy.data[off]);
    });
    for (std::size_t c = 0; c < C; ++c) {
      gamma.grad.data[c] += static_cast<T>(dgamma[c]);
      beta.grad.data[c] += static_cast<T>(dbeta[c]);
    }
    if (cached_train) {
      for_each(gy, [&](std::size_t c, std::size_t off) {
        double g = double(gamma.value.data[c]) * inv_std[c] / N;
        gx.data[off] = static_cast<T>(
            g * (N * double(gy.data[off]) - dbeta[c] -
                 double(xhat.data[off]) * dgamma[c]));
      });
    } else {
      for_each(gy, [&](std::size_t c, std::size_t off) {
        gx.data[off] = static_cast<T>(double(gy.data[off]) *
                                      double(gamma.value.data[c]) * inv_std[c]);
      });
    }
    return gx;
  }
};

template <typename T>
struct ReLU {
  std::vector<char> mask;

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    mask.assign(x.data.size(), 0);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      if (x.data[i] > T(0)) {
        y.data[i] = x.data[i];
        mask[i] = 1;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.data.size(); ++i)
      if (mask[i]) gx.data[i] = gy.data[i];
    return gx;
  }
};

// 2D convolution, input [Cin x H x W], weight [Cout x Cin x k x k].
template <typename T>
struct Conv2d {
  Param<T> w;
  Param<T> b;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  Tensor<T> cached_x;

  void init(std::size_t cin, std::size_t cout, int k, int s, int p,
            std::mt19937_64& rng) {
    kernel = k;
    stride = s;
    pad = p;
    w.init({cout, cin, std::size_t(k), std::size_t(k)});
    b.init({cout});
    kaiming_init(w.value, cin * k * k, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    cached_x = x;
    const int cin = int(x.dim(0)), H = int(x.dim(1)), W = int(x.dim(2));
    const int cout = int(w.value.dim(0));
    const int oh = (H + 2 * pad - kernel) / stride + 1;
    const int ow = (W + 2 * pad - kernel) / stride + 1;
    Tensor<T> y({std::size_t(cout), std::size_t(oh), std::size_t(ow)});
    for (int oc = 0; oc < cout; ++oc) {
      T* yp = y.data.data() + std::size_t(oc) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) yp[i] = b.value.data[oc];
      for (int ic = 0; ic < cin; ++ic) {
        const T* xp = x.data.data() + std::size_t(ic) * H * W;
        const T* wp = w.value.data.data() +
                      ((std::size_t(oc) * cin + ic) * kernel) * kernel;
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            T wv = wp[ky * kernel + kx];
            if (wv == T(0)) continue;
            for (int oy = 0; oy < oh; ++oy) {
              int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= H) continue;
              const T* xrow = xp + std::size_t(iy) * W;
              T* yrow = yp + std::size_t(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= W) continue;
                yrow[ox] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = cached_x;
    const int cin = int(x.dim(0)), H = int(x.dim(1)), W = int(x.dim(2));
    const int cout = int(w.value.dim(0));
    const int oh = int(gy.dim(1)), ow = int(gy.dim(2));
    Tensor<T> gx(x.shape);
    for (int oc = 0; oc < cout; ++oc) {
      const T* gyp = gy.data.data() + std::size_t(oc) * oh * ow;
      double gb = 0;
      for (int i = 0; i < oh * ow; ++i) gb += double(gyp[i]);
      b.grad.data[oc] += static_cast<T>(gb);
      for (int ic = 0; ic < cin; ++ic) {
        const T* xp = x.data.data() + std::size_t(ic) * H * W;
        T* gxp = gx.data.data() + std::size_t(ic) * H * W;
        const T* wp = w.value.data.data() +
                      ((std::size_t(oc) * cin + ic) * kernel) * kernel;
        T* gwp = w.grad.data.data() +
                 ((std::size_t(oc) * cin + ic) * kernel) * kernel;
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            T wv = wp[ky * kernel + kx];
            double gw = 0;
            for (int oy = 0; oy < oh; ++oy) {
              int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= H) continue;
              const T* xrow = xp + std::size_t(iy) * W;
              T* gxrow = gxp + std::size_t(iy) * W;
              const T* gyrow = gyp + std::size_t(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= W) continue;
                gw += double(xrow[ix]) * double(gyrow[ox]);
                gxrow[ix] += wv * gyrow[ox];
              }
            }
            gwp[ky * kernel + kx] += static_cast<T>(gw);
          }
        }
      }
    }
    return gx;
  }
};

// Transposed 2D convolution, input [Cin x h x w], weight [Cin x Cout x k x k],
// output size s*(h-1) + k - 2p.
template <typename T>
struct ConvTranspose2d {
  Param<T> w;
  Param<T> b;
  int kernel = 2;
  int stride = 2;
  int pad = 0;
  Tensor<T> cached_x;

  void init(std::size_t cin, std::size_t cout, int k, int s, int p,
            std::mt19937_64& rng) {
    kernel = k;
    stride = s;
    pad = p;
    w.init({cin, cout, std::size_t(k), std::size_t(k)});
    b.init({cout});
    kaiming_init(w.value, cin * k * k, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    cached_x = x;
    const int cin = int(x.dim(0)), h = int(x.dim(1)), wdim = int(x.dim(2));
    const int cout = int(w.value.dim(1));
    const int oh = stride * (h - 1) + kernel - 2 * pad;
    const int ow = stride * (wdim - 1) + kernel - 2 * pad;
    Tensor<T> y({std::size_t(cout), std::size_t(oh), std::size_t(ow)});
    for (int oc = 0; oc < cout; ++oc) {
      T* yp = y.data.data() + std::size_t(oc) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) yp[i] = b.value.data[oc];
    }
    for (int ic = 0; ic < cin; ++ic) {
      const T* xp = x.data.data() + std::size_t(ic) * h * wdim;
      for (int oc = 0; oc < cout; ++oc) {
        T* yp = y.data.data() + std::size_t(oc) * oh * ow;
        const T* wp = w.value.data.data() +
                      ((std::size_t(ic) * cout + oc) * kernel) * kernel;
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            T wv = wp[ky * kernel + kx];
            if (wv == T(0)) continue;
            for (int iy = 0; iy < h; ++iy) {
              int oy = iy * stride - pad + ky;
              if (oy < 0 || oy >= oh) continue;
              const T* xrow = xp + std::size_t(iy) * wdim;
              T* yrow = yp + std::size_t(oy) * ow;
              for (int ix = 0; ix < wdim; ++ix) {
                int ox = ix * stride - pad + kx;
                if (ox < 0 || ox >= ow) continue;
                yrow[ox] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = cached_x;
    const int cin = int(x.dim(0)), h = int(x.dim(1)), wdim = int(x.dim(2));
    const int cout = int(w.value.dim(1));
    const int oh = int(gy.dim(1)), ow = int(gy.dim(2));
    Tensor<T> gx(x.shape);
    for (int oc = 0; oc < cout; ++oc) {
      const T* gyp = gy.data.data() + std::size_t(oc) * oh * ow;
      double gb = 0;
      for (int i = 0; i < oh * ow; ++i) gb += double(gyp[i]);
      b.grad.data[oc] += static_cast<T>(gb);
    }
    for (int ic = 0; ic < cin; ++ic) {
      const T* xp = x.data.data() + std::size_t(ic) * h * wdim;
      T* gxp = gx.data.data() + std::size_t(ic) * h * wdim;
      for (int oc = 0; oc < cout; ++oc) {
        const T* gyp = gy.data.data() + std::size_t(oc) * oh * ow;
        const T* wp = w.value.data.data() +
                      ((std::size_t(ic) * cout + oc) * kernel) * kernel;
        T* gwp = w.grad.data.data() +
                 ((std::size_t(ic) * cout + oc) * kernel) * kernel;
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            T wv = wp[ky * kernel + kx];
            double gw = 0;
            for (int iy = 0; iy < h; ++iy) {
              int oy = iy * stride - pad + ky;
              if (oy < 0 || oy >= oh) continue;
              const T* xrow = xp + std::size_t(iy) * wdim;
              T* gxrow = gxp + std::size_t(iy) * wdim;
              const T* gyrow = gyp + std::size_t(oy) * ow;
              for (int ix = 0; ix < wdim; ++ix) {
                int ox = ix * stride - pad + kx;
                if (ox < 0 || ox >= ow) continue;
                gw += double(xrow[ix]) * double(gyrow[ox]);
                gxrow[ix] += wv * gyrow[ox];
              }
            }
            gwp[ky * kernel + kx] += static_cast<T>(gw);
          }
        }
      }
    }
    return gx;
  }
};

// Max over each pillar's real points; padded slots never participate.
// Input [M x C] where M = sum of counts; offsets[p] is the first row of
// pillar p.
template <typename T>
struct MaskedMaxPool {
  std::vector<std::size_t> argmax;  // [P x C] winning row per output
  std::size_t rows = 0;

  Tensor<T> forward(const Tensor<T>& x, const std::vector<int>& counts) {
    const std::size_t C = x.dim(1);
    const std::size_t P = counts.size();
    rows = x.dim(0);
    Tensor<T> y({P, C});
    argmax.assign(P * C, 0);
    std::size_t row = 0;
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t c = 0; c < C; ++c) {
        T best = x.at(row, c);
        std::size_t bi = row;
        for (int k = 1; k < counts[p]; ++k) {
          T v = x.at(row + k, c);
          if (v > best) {
            best = v;
            bi = row + k;
          }
        }
        y.at(p, c) = best;
        argmax[p * C + c] = bi;
      }
      row += std::size_t(counts[p]);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t P = gy.dim(0), C = gy.dim(1);
    Tensor<T> gx({rows, C});
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t c = 0; c < C; ++c)
        gx.at(argmax[p * C + c], c) += gy.at(p, c);
    return gx;
  }
};

}  // namespace uavloc::nn

#endif
