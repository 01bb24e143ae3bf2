#include "uavloc/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uavloc/error.hpp"

namespace uavloc {

namespace {

using Poly = std::vector<std::array<double, 2>>;

double polygon_area(const Poly& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& u = p[i];
    const auto& v = p[(i + 1) % p.size()];
    a += u[0] * v[1] - v[0] * u[1];
  }
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of a convex subject polygon against one edge
// (a -> b) of a CCW clip polygon. Keeps the half-plane to the left of a->b.
Poly clip_edge(const Poly& subject, const std::array<double, 2>& a,
               const std::array<double, 2>& b) {
  Poly out;
  auto side = [&](const std::array<double, 2>& p) {
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
  };
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cur = subject[i];
    const auto& nxt = subject[(i + 1) % n];
    double sc = side(cur);
    double sn = side(nxt);
    if (sc >= 0) out.push_back(cur);
    if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
      double t = sc / (sc - sn);
      out.push_back({cur[0] + t * (nxt[0] - cur[0]),
                     cur[1] + t * (nxt[1] - cur[1])});
    }
  }
  return out;
}

void require_yaw_only(const Cuboid& c, const char* op) {
  if (c.x_rot != 0.0 || c.y_rot != 0.0) {
    throw ContractError(std::string(op) +
                        ": only yaw rotation is supported (x_rot = y_rot = 0)");
  }
}

double parse_double_tok(const std::string& s, int lineno) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError("label line " + std::to_string(lineno) +
                     ": bad number: " + s);
  }
  return v;
}

}  // namespace

double position_error(const PositionEstimate& predicted,
                      const PositionEstimate& truth) {
  double dx = predicted.x - truth.x;
  double dy = predicted.y - truth.y;
  double dz = predicted.z - truth.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::array<std::array<double, 2>, 4> bev_footprint(const Cuboid& c) {
  double ch = std::cos(c.z_rot), sh = std::sin(c.z_rot);
  double hx = 0.5 * c.x_len, hy = 0.5 * c.y_len;
  // CCW in the box frame, then rotate + translate
  std::array<std::array<double, 2>, 4> local = {
      {{+hx, +hy}, {-hx, +hy}, {-hx, -hy}, {+hx, -hy}}};
  std::array<std::array<double, 2>, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {c.x_ctr + ch * local[i][0] - sh * local[i][1],
              c.y_ctr + sh * local[i][0] + ch * local[i][1]};
  }
  return out;
}

double bev_iou(const Cuboid& a, const Cuboid& b) {
  if (a.x_len <= 0 || a.y_len <= 0 || a.z_len <= 0 || b.x_len <= 0 ||
      b.y_len <= 0 || b.z_len <= 0) {
    throw ContractError("bev_iou: degenerate box with non-positive length");
  }
  require_yaw_only(a, "bev_iou");
  require_yaw_only(b, "bev_iou");

  auto fa = bev_footprint(a);
  auto fb = bev_footprint(b);
  Poly subject(fa.begin(), fa.end());
  for (int i = 0; i < 4; ++i) {
    subject = clip_edge(subject, fb[i], fb[(i + 1) % 4]);
    if (subject.empty()) return 0.0;
  }
  double inter = polygon_area(subject);
  double area_a = a.x_len * a.y_len;
  double area_b = b.x_len * b.y_len;
  double uni = area_a + area_b - inter;
  if (uni <= 0) return 0.0;
  double iou = inter / uni;
  return iou < 0 ? 0.0 : (iou > 1 ? 1.0 : iou);
}

std::array<Vec3, 8> cuboid_corners(const Cuboid& c) {
  require_yaw_only(c, "cuboid_corners");
  auto fp = bev_footprint(c);
  double zlo = c.z_ctr - 0.5 * c.z_len;
  double zhi = c.z_ctr + 0.5 * c.z_len;
  std::array<Vec3, 8> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {fp[i][0], fp[i][1], zlo};
    out[i + 4] = {fp[i][0], fp[i][1], zhi};
  }
  return out;
}

std::vector<LabelEntry> parse_labels(std::string_view text, AngleUnit unit) {
  std::vector<LabelEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  const double scale = unit == AngleUnit::kDegrees ? M_PI / 180.0 : 1.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> tok;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      tok.push_back(line.substr(start, comma == std::string::npos
                                           ? std::string::npos
                                           : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (tok.size() != 10) {
      throw ParseError("label line " + std::to_string(lineno) + ": expected " +
                       "10 comma-separated values, got " +
                       std::to_string(tok.size()));
    }
    LabelEntry e;
    e.timestamp = parse_double_tok(tok[0], lineno);
    e.box.x_ctr = parse_double_tok(tok[1], lineno);
    e.box.y_ctr = parse_double_tok(tok[2], lineno);
    e.box.z_ctr = parse_double_tok(tok[3], lineno);
    e.box.x_len = parse_double_tok(tok[4], lineno);
    e.box.y_len = parse_double_tok(tok[5], lineno);
    e.box.z_len = parse_double_tok(tok[6], lineno);
    e.box.x_rot = parse_double_tok(tok[7], lineno) * scale;
    e.box.y_rot = parse_double_tok(tok[8], lineno) * scale;
    e.box.z_rot = parse_double_tok(tok[9], lineno) * scale;
    out.push_back(e);
  }
  return out;
}

std::vector<LabelEntry> read_labels(const std::string& path, AngleUnit unit) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open label file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_labels(ss.str(), unit);
}

std::string write_labels(const std::vector<LabelEntry>& labels) {
  std::ostringstream out;
  char buf[512];
  for (const LabelEntry& e : labels) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  e.timestamp, e.box.x_ctr, e.box.y_ctr, e.box.z_ctr,
                  e.box.x_len, e.box.y_len, e.box.z_len, e.box.x_rot,
                  e.box.y_rot, e.box.z_rot);
    out << buf;
  }
  return out.str();
}

}  // namespace uavloc
