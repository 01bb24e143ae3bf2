#include "uavloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uavloc/error.hpp"
#include "uavloc/geometry.hpp"

namespace uavloc {

const char* to_string(PredictionOutcome o) {
  switch (o) {
    case PredictionOutcome::kNP: return "NP";
    case PredictionOutcome::kWP: return "WP";
    case PredictionOutcome::kCP: return "CP";
    case PredictionOutcome::kRP: return "RP";
  }
  return "?";
}

PredictionOutcome classify(const std::optional<PositionEstimate>& prediction,
                           const PositionEstimate& truth) {
  if (!prediction) return PredictionOutcome::kNP;
  double d = position_error(*prediction, truth);
  if (d < 0.20) return PredictionOutcome::kRP;
  if (d <= 0.40) return PredictionOutcome::kCP;  // boundaries go to CP
  return PredictionOutcome::kWP;
}

ErrorStats axis_stats(const std::vector<double>& errors) {
  if (errors.empty()) throw ContractError("axis_stats: empty error series");
  ErrorStats s;
  s.n = errors.size();
  double sum = 0, sumsq = 0, mx = 0;
  for (double e : errors) {
    double a = std::abs(e);
    sum += a;
    sumsq += a * a;
    mx = std::max(mx, a);
  }
  const double n = double(s.n);
  s.mean = sum / n;
  s.rms = std::sqrt(sumsq / n);
  // sample variance, so that rms^2 == mean^2 + std^2 * (n-1)/n
  double var = s.n > 1 ? (sumsq - n * s.mean * s.mean) / (n - 1.0) : 0.0;
  s.std_dev = std::sqrt(var > 0 ? var : 0.0);
  s.max = mx;
  return s;
}

std::vector<AlignedPair> align_nearest(
    const std::vector<PositionEstimate>& estimates,
    const std::vector<PositionEstimate>& truth, double max_dt) {
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    if (estimates[i].timestamp < estimates[i - 1].timestamp) {
      throw ContractError("align_nearest: estimates not time-sorted");
    }
  }
  for (std::size_t i = 1; i < truth.size(); ++i) {
    if (truth[i].timestamp < truth[i - 1].timestamp) {
      throw ContractError("align_nearest: truth not time-sorted");
    }
  }
  std::vector<AlignedPair> out;
  if (truth.empty()) return out;
  std::size_t j = 0;
  for (const PositionEstimate& est : estimates) {
    while (j + 1 < truth.size() && truth[j + 1].timestamp <= est.timestamp) ++j;
    // candidates: truth[j] (<= est or first) and truth[j+1]
    std::size_t best = j;
    double best_dt = std::abs(est.timestamp - truth[j].timestamp);
    if (j + 1 < truth.size()) {
      double dt2 = std::abs(truth[j + 1].timestamp - est.timestamp);
      if (dt2 < best_dt) {  // ties stay with the earlier sample
        best = j + 1;
        best_dt = dt2;
      }
    }
    if (best_dt <= max_dt) {
      out.push_back({est, truth[best], best_dt});
    }
  }
  return out;
}

std::vector<PositionEstimate> apply_offset(
    const std::vector<PositionEstimate>& estimates, const Vec3& offset) {
  std::vector<PositionEstimate> out = estimates;
  for (PositionEstimate& e : out) {
    e.x += offset.x;
    e.y += offset.y;
    e.z += offset.z;
  }
  return out;
}

double fit_z_offset(const std::vector<AlignedPair>& pairs) {
  if (pairs.empty()) throw ContractError("fit_z_offset: no aligned pairs");
  double sum = 0;
  for (const AlignedPair& p : pairs) sum += p.truth.z - p.estimate.z;
  return sum / double(pairs.size());
}

MethodReport evaluate_method(const std::string& method,
                             const std::vector<PositionEstimate>& estimates,
                             const std::vector<PositionEstimate>& truth,
                             std::size_t scans, double max_dt) {
  MethodReport r;
  r.method = method;
  r.updates = estimates.size();
  r.scans = scans;
  std::vector<AlignedPair> pairs = align_nearest(estimates, truth, max_dt);
  // frames with no estimate count as NP
  r.np = scans >= pairs.size() ? scans - pairs.size() : 0;
  if (pairs.empty()) return r;
  std::vector<double> ex, ey, ez, e3;
  for (const AlignedPair& p : pairs) {
    ex.push_back(std::abs(p.estimate.x - p.truth.x));
    ey.push_back(std::abs(p.estimate.y - p.truth.y));
    ez.push_back(std::abs(p.estimate.z - p.truth.z));
    double d = position_error(p.estimate, p.truth);
    e3.push_back(d);
    switch (classify(p.estimate, p.truth)) {
      case PredictionOutcome::kRP: ++r.rp; break;
      case PredictionOutcome::kCP: ++r.cp; break;
      case PredictionOutcome::kWP: ++r.wp; break;
      case PredictionOutcome::kNP: break;
    }
  }
  r.x = axis_stats(ex);
  r.y = axis_stats(ey);
  r.z = axis_stats(ez);
  r.err3d = axis_stats(e3);
  return r;
}

std::string report_text(const std::vector<MethodReport>& reports) {
  std::ostringstream out;
  char buf[256];
  out << "3D positioning error statistics\n";
  std::snprintf(buf, sizeof(buf), "%-14s %10s %10s %8s %8s %8s %8s\n",
                "method", "#updates", "#scans", "RMS(m)", "mean(m)", "std(m)",
                "max(m)");
  out << buf;
  for (const MethodReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-14s %10zu %10zu %8.3f %8.3f %8.3f %8.3f\n",
                  r.method.c_str(), r.updates, r.scans, r.err3d.rms,
                  r.err3d.mean, r.err3d.std_dev, r.err3d.max);
    out << buf;
  }
  out << "\nper-axis error statistics\n";
  std::snprintf(buf, sizeof(buf), "%-14s %-5s %8s %8s %8s %8s\n", "method",
                "axis", "RMS(m)", "mean(m)", "std(m)", "max(m)");
  out << buf;
  for (const MethodReport& r : reports) {
    const ErrorStats* axes[3] = {&r.x, &r.y, &r.z};
    const char* names[3] = {"X_err", "Y_err", "Z_err"};
    for (int i = 0; i < 3; ++i) {
      std::snprintf(buf, sizeof(buf), "%-14s %-5s %8.3f %8.3f %8.3f %8.3f\n",
                    r.method.c_str(), names[i], axes[i]->rms, axes[i]->mean,
                    axes[i]->std_dev, axes[i]->max);
      out << buf;
    }
  }
  out << "\nprediction outcome histogram\n";
  std::snprintf(buf, sizeof(buf), "%-14s %6s %6s %6s %6s\n", "method", "NP",
                "WP", "CP", "RP");
  out << buf;
  for (const MethodReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-14s %6zu %6zu %6zu %6zu\n",
                  r.method.c_str(), r.np, r.wp, r.cp, r.rp);
    out << buf;
  }
  return out.str();
}

std::string report_csv(const std::vector<MethodReport>& reports) {
  std::ostringstream out;
  out << "method,updates,scans,rms_3d,mean_3d,std_3d,max_3d,"
         "rms_x,mean_x,std_x,max_x,rms_y,mean_y,std_y,max_y,"
         "rms_z,mean_z,std_z,max_z,np,wp,cp,rp\n";
  char buf[512];
  for (const MethodReport& r : reports) {
    std::snprintf(
        buf, sizeof(buf),
        "%s,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
        "%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu,%zu,%zu\n",
        r.method.c_str(), r.updates, r.scans, r.err3d.rms, r.err3d.mean,
        r.err3d.std_dev, r.err3d.max, r.x.rms, r.x.mean, r.x.std_dev, r.x.max,
        r.y.rms, r.y.mean, r.y.std_dev, r.y.max, r.z.rms, r.z.mean,
        r.z.std_dev, r.z.max, r.np, r.wp, r.cp, r.rp);
    out << buf;
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> tok;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    tok.push_back(line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return tok;
}

double parse_num(const std::string& s, const char* what, int lineno) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(std::string(what) + " line " + std::to_string(lineno) +
                     ": bad number: " + s);
  }
  return v;
}

}  // namespace

std::vector<PositionEstimate> parse_estimates(std::string_view text) {
  std::vector<PositionEstimate> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tok = split_csv(line);
    if (tok.size() != 5) {
      throw ParseError("estimates line " + std::to_string(lineno) +
                       ": expected 5 fields, got " + std::to_string(tok.size()));
    }
    PositionEstimate e;
    e.timestamp = parse_num(tok[0], "estimates", lineno);
    e.x = parse_num(tok[1], "estimates", lineno);
    e.y = parse_num(tok[2], "estimates", lineno);
    e.z = parse_num(tok[3], "estimates", lineno);
    e.source = estimate_source_from_string(tok[4]);
    out.push_back(e);
  }
  return out;
}

std::vector<PositionEstimate> read_estimates(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open estimates file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_estimates(ss.str());
}

std::string write_estimates(const std::vector<PositionEstimate>& estimates) {
  std::ostringstream out;
  char buf[256];
  for (const PositionEstimate& e : estimates) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%s\n",
                  e.timestamp, e.x, e.y, e.z, to_string(e.source));
    out << buf;
  }
  return out.str();
}

std::vector<RangeSample> parse_ranges(std::string_view text) {
  std::vector<RangeSample> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tok = split_csv(line);
    if (tok.size() != 2) {
      throw ParseError("range line " + std::to_string(lineno) +
                       ": expected '<timestamp>,<range_m>'");
    }
    RangeSample r;
    r.timestamp = parse_num(tok[0], "range", lineno);
    r.range = parse_num(tok[1], "range", lineno);
    out.push_back(r);
  }
  return out;
}

std::vector<RangeSample> read_ranges(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open range file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_ranges(ss.str());
}

std::string write_ranges(const std::vector<RangeSample>& samples) {
  std::ostringstream out;
  char buf[96];
  for (const RangeSample& r : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r.timestamp, r.range);
    out << buf;
  }
  return out.str();
}

}  // namespace uavloc
