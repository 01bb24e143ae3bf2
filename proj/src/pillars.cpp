#include "uavloc/pillars.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <sstream>

#include "uavloc/rng.hpp"

namespace uavloc {

namespace {

int round_dim(double extent, double step, RoundingMode mode) {
  double q = extent / step;
  double v = mode == RoundingMode::kFloor ? std::floor(q) : std::round(q);
  return static_cast<int>(v);
}

template <typename T>
void put_raw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) {
    throw ParseError("pillar dump: truncated at byte " + std::to_string(pos));
  }
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void GridParams::finalize(RoundingMode mode) {
  if (x_step <= 0 || y_step <= 0) {
    throw ConfigError("grid: steps must be positive");
  }
  if (x_max <= x_min || y_max <= y_min || z_max <= z_min) {
    throw ConfigError("grid: max must exceed min on every axis");
  }
  if (ds_factor < 1) throw ConfigError("grid: ds_factor must be >= 1");
  auto [xn, yn] = pseudo_image_dims(*this, mode);
  x_n = xn;
  y_n = yn;
  if (x_n < 1 || y_n < 1) throw ConfigError("grid: empty pseudo-image");
  if (x_n % ds_factor != 0 || y_n % ds_factor != 0) {
    throw ConfigError("grid: x_n=" + std::to_string(x_n) + " y_n=" +
                      std::to_string(y_n) + " must be divisible by ds_factor=" +
                      std::to_string(ds_factor));
  }
}

std::pair<int, int> pseudo_image_dims(const GridParams& g, RoundingMode mode) {
  if (g.x_step <= 0 || g.y_step <= 0) {
    throw ConfigError("pseudo_image_dims: steps must be positive");
  }
  return {round_dim(g.x_max - g.x_min, g.x_step, mode),
          round_dim(g.y_max - g.y_min, g.y_step, mode)};
}

GridParams GridParams::from_config(const Config& cfg) {
  GridParams g;
  g.x_min = cfg.get_double("grid.x_min");
  g.x_max = cfg.get_double("grid.x_max");
  g.y_min = cfg.get_double("grid.y_min");
  g.y_max = cfg.get_double("grid.y_max");
  g.z_min = cfg.get_double("grid.z_min");
  g.z_max = cfg.get_double("grid.z_max");
  g.x_step = cfg.get_double("grid.x_step");
  g.y_step = cfg.get_double("grid.y_step");
  g.ds_factor = static_cast<int>(cfg.get_int("grid.ds_factor", 1));
  RoundingMode mode = cfg.get_string("grid.rounding", "half_away") == "floor"
                          ? RoundingMode::kFloor
                          : RoundingMode::kHalfAwayFromZero;
  g.finalize(mode);
  return g;
}

Config GridParams::to_config() const {
  Config cfg;
  auto put = [&](const std::string& k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    cfg.set(k, buf);
  };
  put("grid.x_min", x_min);
  put("grid.x_max", x_max);
  put("grid.y_min", y_min);
  put("grid.y_max", y_max);
  put("grid.z_min", z_min);
  put("grid.z_max", z_max);
  put("grid.x_step", x_step);
  put("grid.y_step", y_step);
  cfg.set("grid.ds_factor", std::to_string(ds_factor));
  return cfg;
}

GridParams tunnel_grid() {
  GridParams g;
  g.x_min = 0.0;
  g.x_max = 70.0;
  g.y_min = -39.68;
  g.y_max = 39.68;
  g.z_min = -7.0;
  g.z_max = 5.0;
  g.x_step = 0.16;
  g.y_step = 0.16;
  g.ds_factor = 2;
  g.finalize();
  return g;
}

GridParams desk_grid() {
  GridParams g;
  g.x_min = 0.0;
  g.x_max = 20.0;
  g.y_min = -10.0;
  g.y_max = 10.0;
  g.z_min = -2.0;
  g.z_max = 3.0;
  g.x_step = 0.25;
  g.y_step = 0.25;
  g.ds_factor = 2;
  g.finalize();
  return g;
}

PillarTensor encode_pillars(const PointCloud& cloud, const GridParams& g,
                            int max_pillars, int max_points_per_pillar,
                            std::uint64_t seed) {
  if (max_pillars < 1 || max_points_per_pillar < 1) {
    throw ConfigError("encode_pillars: max_pillars and max_points_per_pillar "
                      "must be positive");
  }
  const CropBounds b = g.bounds();

  // Bucket by cell; std::map keeps pillars ordered by (row, col) so the
  // output is independent of input point order permutations only up to
  // per-pillar point order, which is preserved from the cloud.
  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const LidarPoint& p = cloud.points[i];
    if (!p.finite() || !b.contains(p.x, p.y, p.z)) {
      std::ostringstream msg;
      msg << "encode_pillars: point " << i << " (" << p.x << ", " << p.y
          << ", " << p.z << ") outside grid bounds; crop the cloud first";
      throw ContractError(msg.str());
    }
    int col = static_cast<int>(std::floor((p.x - g.x_min) / g.x_step));
    int row = static_cast<int>(std::floor((p.y - g.y_min) / g.y_step));
    // guard against float rounding exactly at the open upper bound
    col = std::min(col, g.x_n - 1);
    row = std::min(row, g.y_n - 1);
    cells[{row, col}].push_back(i);
  }

  std::vector<std::pair<int, int>> keys;
  keys.reserve(cells.size());
  for (const auto& [k, v] : cells) keys.push_back(k);

  if (static_cast<int>(keys.size()) > max_pillars) {
    std::mt19937_64 rng(mix_seed(seed, 0x50494C4CULL));
    std::shuffle(keys.begin(), keys.end(), rng);
    keys.resize(static_cast<std::size_t>(max_pillars));
    std::sort(keys.begin(), keys.end());
  }

  PillarTensor t;
  t.max_points = max_points_per_pillar;
  t.x_n = g.x_n;
  t.y_n = g.y_n;
  const int P = static_cast<int>(keys.size());
  t.features.assign(static_cast<std::size_t>(P) * max_points_per_pillar * 9,
                    0.0);
  t.indices = keys;
  t.counts.resize(P);

  for (int pi = 0; pi < P; ++pi) {
    auto [row, col] = keys[pi];
    std::vector<std::size_t>& members = cells[keys[pi]];
    if (static_cast<int>(members.size()) > max_points_per_pillar) {
      std::uint64_t cell_id =
          static_cast<std::uint64_t>(row) * g.x_n + static_cast<std::uint64_t>(col);
      std::mt19937_64 rng(mix_seed(seed, cell_id));
      std::shuffle(members.begin(), members.end(), rng);
      members.resize(static_cast<std::size_t>(max_points_per_pillar));
      std::sort(members.begin(), members.end());
    }
    const int n = static_cast<int>(members.size());
    t.counts[pi] = n;

    double mx = 0, my = 0, mz = 0;
    for (std::size_t idx : members) {
      mx += cloud.points[idx].x;
      my += cloud.points[idx].y;
      mz += cloud.points[idx].z;
    }
    mx /= n;
    my /= n;
    mz /= n;
    const double cx = g.x_min + (col + 0.5) * g.x_step;
    const double cy = g.y_min + (row + 0.5) * g.y_step;

    for (int k = 0; k < n; ++k) {
      const LidarPoint& p = cloud.points[members[k]];
      double* f =
          t.features.data() +
          (static_cast<std::size_t>(pi) * max_points_per_pillar + k) * 9;
      f[0] = p.x;
      f[1] = p.y;
      f[2] = p.z;
      f[3] = p.r;
      f[4] = p.x - mx;
      f[5] = p.y - my;
      f[6] = p.z - mz;
      f[7] = p.x - cx;
      f[8] = p.y - cy;
    }
  }
  return t;
}

std::string write_pillar_dump(const PillarTensor& t) {
  std::string out;
  out.reserve(20 + t.features.size() * 8 + t.indices.size() * 8 +
              t.counts.size() * 4);
  out.append("UPLT", 4);
  put_raw<std::uint32_t>(out, 1u);
  put_raw<std::int32_t>(out, t.num_pillars());
  put_raw<std::int32_t>(out, t.max_points);
  put_raw<std::int32_t>(out, t.x_n);
  put_raw<std::int32_t>(out, t.y_n);
  for (double f : t.features) put_raw<double>(out, f);
  for (auto [row, col] : t.indices) {
    put_raw<std::int32_t>(out, row);
    put_raw<std::int32_t>(out, col);
  }
  for (int c : t.counts) put_raw<std::int32_t>(out, c);
  return out;
}

PillarTensor parse_pillar_dump(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "UPLT") {
    throw ParseError("pillar dump: bad magic");
  }
  std::size_t pos = 4;
  std::uint32_t version = get_raw<std::uint32_t>(bytes, pos);
  if (version != 1) {
    throw UnsupportedError("pillar dump: unsupported version " +
                           std::to_string(version));
  }
  std::int32_t P = get_raw<std::int32_t>(bytes, pos);
  PillarTensor t;
  t.max_points = get_raw<std::int32_t>(bytes, pos);
  t.x_n = get_raw<std::int32_t>(bytes, pos);
  t.y_n = get_raw<std::int32_t>(bytes, pos);
  if (P < 0 || t.max_points < 0 || t.x_n < 0 || t.y_n < 0) {
    throw ParseError("pillar dump: negative dimension in header");
  }
  std::size_t nfeat = static_cast<std::size_t>(P) * t.max_points * 9;
  std::size_t need = pos + nfeat * 8 + static_cast<std::size_t>(P) * 12;
  if (bytes.size() < need) {
    throw ParseError("pillar dump: truncated body, expected " +
                     std::to_string(need) + " bytes, got " +
                     std::to_string(bytes.size()));
  }
  t.features.resize(nfeat);
  for (std::size_t i = 0; i < nfeat; ++i)
    t.features[i] = get_raw<double>(bytes, pos);
  t.indices.resize(static_cast<std::size_t>(P));
  for (auto& [row, col] : t.indices) {
    row = get_raw<std::int32_t>(bytes, pos);
    col = get_raw<std::int32_t>(bytes, pos);
  }
  t.counts.resize(static_cast<std::size_t>(P));
  for (int& c : t.counts) c = get_raw<std::int32_t>(bytes, pos);
  return t;
}

}  // namespace uavloc
