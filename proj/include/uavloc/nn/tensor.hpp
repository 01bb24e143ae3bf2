#ifndef UAVLOC_NN_TENSOR_HPP
#define UAVLOC_NN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "uavloc/error.hpp"

namespace uavloc::nn {

// Dense row-major tensor. Shapes used in practice are rank 1..4; the
// network instantiates T = float for training and T = double for the
// finite-difference gradient harness.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel(), T(0));
  }

  std::size_t numel() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  std::size_t dim(std::size_t i) const { return shape.at(i); }

  // rank-2 (r, c)
  T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  T at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  // rank-3 (c, h, w)
  T& at(std::size_t c, std::size_t h, std::size_t w) {
    return data[(c * shape[1] + h) * shape[2] + w];
  }
  T at(std::size_t c, std::size_t h, std::size_t w) const {
    return data[(c * shape[1] + h) * shape[2] + w];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  Tensor<T> zeros_like() const { return Tensor<T>(shape); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

}  // namespace uavloc::nn

#endif
