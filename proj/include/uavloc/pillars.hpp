#ifndef UAVLOC_PILLARS_HPP
#define UAVLOC_PILLARS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uavloc/config.hpp"
#include "uavloc/error.hpp"
#include "uavloc/nn/tensor.hpp"
#include "uavloc/types.hpp"

namespace uavloc {

enum class RoundingMode { kHalfAwayFromZero, kFloor };

// BEV discretization grid. Cell mapping:
//   col = floor((x - x_min) / x_step), row = floor((y - y_min) / y_step)
// so the pseudo-image has H = y_n rows and W = x_n columns.
struct GridParams {
  double x_min = 0, x_max = 0;
  double y_min = 0, y_max = 0;
  double z_min = 0, z_max = 0;
  double x_step = 0, y_step = 0;
  int ds_factor = 1;  // backbone total downsample factor
  int x_n = 0, y_n = 0;

  CropBounds bounds() const {
    return {x_min, x_max, y_min, y_max, z_min, z_max};
  }

  // Fills x_n / y_n from the extents and validates divisibility by
  // ds_factor. Throws ConfigError on bad parameters.
  void finalize(RoundingMode mode = RoundingMode::kHalfAwayFromZero);

  static GridParams from_config(const Config& cfg);
  Config to_config() const;
};

// Full-scale tunnel grid: x 0..70, y +/-39.68, z -7..5, step 0.16.
GridParams tunnel_grid();
// Desk-scale grid small enough to train on a single CPU core:
// x 0..20, y +/-10, z -2..3, step 0.25, ds_factor 2.
GridParams desk_grid();

// Pseudo-image cell counts per axis. Default rounding is
// round-half-away-from-zero; kFloor is available for cross-checking
// other implementations.
std::pair<int, int> pseudo_image_dims(
    const GridParams& g, RoundingMode mode = RoundingMode::kHalfAwayFromZero);

// Dense pillar representation. features is [P x N x 9] row-major with the
// per-point decoration [x, y, z, r, xc, yc, zc, xp, yp]; padded slots are
// all-zero. indices holds each pillar's (row, col) cell.
struct PillarTensor {
  int max_points = 0;  // N
  int x_n = 0, y_n = 0;
  std::vector<double> features;
  std::vector<std::pair<int, int>> indices;
  std::vector<int> counts;

  int num_pillars() const { return static_cast<int>(indices.size()); }
  const double* point_features(int pillar, int point) const {
    return features.data() + (static_cast<std::size_t>(pillar) * max_points +
                              point) * 9;
  }
};

// Bucket a cropped cloud into pillars with the 9-D decoration. Points
// outside the grid bounds are a contract violation. Truncation (points
// per pillar above max_points_per_pillar, pillar count above max_pillars)
// uses seeded uniform sampling without replacement; output is
// deterministic for a fixed seed.
PillarTensor encode_pillars(const PointCloud& cloud, const GridParams& g,
                            int max_pillars, int max_points_per_pillar,
                            std::uint64_t seed);

// Scatter per-pillar feature vectors [P x C] back onto the BEV grid as a
// (C, H, W) pseudo-image; cells with no pillar stay exactly zero.
template <typename T>
nn::Tensor<T> scatter(const nn::Tensor<T>& pillar_features,
                      const std::vector<std::pair<int, int>>& indices,
                      const GridParams& g) {
  if (pillar_features.shape.size() != 2 ||
      pillar_features.dim(0) != indices.size()) {
    throw ContractError("scatter: pillar_features must be [P x C]");
  }
  const std::size_t C = pillar_features.dim(1);
  nn::Tensor<T> image({C, static_cast<std::size_t>(g.y_n),
                       static_cast<std::size_t>(g.x_n)});
  std::vector<char> seen(static_cast<std::size_t>(g.x_n) * g.y_n, 0);
  for (std::size_t p = 0; p < indices.size(); ++p) {
    auto [row, col] = indices[p];
    if (row < 0 || row >= g.y_n || col < 0 || col >= g.x_n) {
      throw ContractError("scatter: pillar index out of grid range");
    }
    std::size_t flat = static_cast<std::size_t>(row) * g.x_n + col;
    if (seen[flat]) throw ContractError("scatter: duplicate pillar index");
    seen[flat] = 1;
    for (std::size_t c = 0; c < C; ++c) {
      image.at(c, static_cast<std::size_t>(row), static_cast<std::size_t>(col)) =
          pillar_features.at(p, c);
    }
  }
  return image;
}

// Binary dump of a PillarTensor for inspection and cross-language
// comparison. Little-endian layout:
//   magic "UPLT", u32 version, i32 P, N, x_n, y_n,
//   float64 features [P*N*9], i32 indices [P*2] (row, col), i32 counts [P]
std::string write_pillar_dump(const PillarTensor& t);
PillarTensor parse_pillar_dump(std::string_view bytes);

}  // namespace uavloc

#endif
