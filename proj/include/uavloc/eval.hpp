#ifndef UAVLOC_EVAL_HPP
#define UAVLOC_EVAL_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavloc/geometry.hpp"
#include "uavloc/types.hpp"

namespace uavloc {

// Per-frame outcome category, thresholded on the 3D position error d:
// no prediction, wrong (d > 0.40), close (0.20 <= d <= 0.40),
// right (d < 0.20).
enum class PredictionOutcome { kNP, kWP, kCP, kRP };

const char* to_string(PredictionOutcome o);

PredictionOutcome classify(const std::optional<PositionEstimate>& prediction,
                           const PositionEstimate& truth);

// RMS / mean / sample std / max of an error series. By convention the
// inputs are absolute errors; axis_stats takes |e| itself. With sample
// std the identity rms^2 == mean^2 + std^2 * (n-1)/n holds exactly.
struct ErrorStats {
  double rms = 0, mean = 0, std_dev = 0, max = 0;
  std::size_t n = 0;
};

// Statistics over absolute values of the series. Throws ContractError on
// an empty series.
ErrorStats axis_stats(const std::vector<double>& errors);

struct AlignedPair {
  PositionEstimate estimate;
  PositionEstimate truth;
  double dt = 0.0;  // |t_est - t_truth|
};

// Pair each estimate with the nearest-in-time truth sample; pairs farther
// than max_dt are dropped; ties break toward the earlier truth sample.
// Both series must be time-sorted.
std::vector<AlignedPair> align_nearest(
    const std::vector<PositionEstimate>& estimates,
    const std::vector<PositionEstimate>& truth, double max_dt);

// Add a constant offset to every estimate.
std::vector<PositionEstimate> apply_offset(
    const std::vector<PositionEstimate>& estimates, const Vec3& offset);

// Least-squares constant Z offset: mean of (z_truth - z_estimate).
double fit_z_offset(const std::vector<AlignedPair>& pairs);

struct MethodReport {
  std::string method;
  std::size_t updates = 0;
  std::size_t scans = 0;
  ErrorStats x, y, z, err3d;
  std::size_t np = 0, wp = 0, cp = 0, rp = 0;
};

// Full per-method evaluation: alignment, classification, per-axis and 3D
// statistics. scans is the total number of frames the method saw.
MethodReport evaluate_method(const std::string& method,
                             const std::vector<PositionEstimate>& estimates,
                             const std::vector<PositionEstimate>& truth,
                             std::size_t scans, double max_dt = 0.15);

std::string report_text(const std::vector<MethodReport>& reports);
std::string report_csv(const std::vector<MethodReport>& reports);

// Estimate CSV: `<timestamp>,<x>,<y>,<z>,<source>` per row.
std::vector<PositionEstimate> parse_estimates(std::string_view text);
std::vector<PositionEstimate> read_estimates(const std::string& path);
std::string write_estimates(const std::vector<PositionEstimate>& estimates);

// Range series CSV: `<timestamp>,<range_m>` per row.
struct RangeSample {
  double timestamp = 0.0;
  double range = 0.0;
};
std::vector<RangeSample> parse_ranges(std::string_view text);
std::vector<RangeSample> read_ranges(const std::string& path);
std::string write_ranges(const std::vector<RangeSample>& samples);

}  // namespace uavloc

#endif
