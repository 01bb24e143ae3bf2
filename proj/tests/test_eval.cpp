#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "uavloc/error.hpp"
#include "uavloc/eval.hpp"

using namespace uavloc;

namespace {

PositionEstimate est(double t, double x, double y, double z,
                     EstimateSource s = EstimateSource::kClustering) {
  PositionEstimate e;
  e.timestamp = t;
  e.x = x;
  e.y = y;
  e.z = z;
  e.source = s;
  return e;
}

}  // namespace

TEST_CASE("classify category boundaries") {
  PositionEstimate truth = est(0, 0, 0, 0);
  auto with_d = [&](double d) {
    return classify(est(0, d, 0, 0), truth);
  };
  CHECK(with_d(0.15) == PredictionOutcome::kRP);
  CHECK(with_d(0.30) == PredictionOutcome::kCP);
  CHECK(with_d(0.50) == PredictionOutcome::kWP);
  CHECK(classify(std::nullopt, truth) == PredictionOutcome::kNP);
  // boundary points land in CP (closed interval)
  CHECK(with_d(0.20) == PredictionOutcome::kCP);
  CHECK(with_d(0.40) == PredictionOutcome::kCP);
  CHECK(with_d(0.19999) == PredictionOutcome::kRP);
  CHECK(with_d(0.40001) == PredictionOutcome::kWP);
}

TEST_CASE("axis_stats hand cases") {
  ErrorStats c = axis_stats({0.5, 0.5, 0.5});
  CHECK(c.rms == doctest::Approx(0.5));
  CHECK(c.mean == doctest::Approx(0.5));
  CHECK(c.max == doctest::Approx(0.5));
  CHECK(c.std_dev == doctest::Approx(0.0));

  ErrorStats two = axis_stats({0.0, 1.0});
  CHECK(two.rms == doctest::Approx(std::sqrt(0.5)));
  CHECK(two.mean == doctest::Approx(0.5));
  CHECK(two.max == doctest::Approx(1.0));
  CHECK(two.n == 2);

  // absolute values are taken
  ErrorStats neg = axis_stats({-1.0, 1.0});
  CHECK(neg.mean == doctest::Approx(1.0));

  CHECK_THROWS_AS(axis_stats({}), ContractError);
}

TEST_CASE("axis_stats identity and oracle on random series") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> d(-2, 2);
  std::uniform_int_distribution<int> nd(2, 300);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = nd(rng);
    std::vector<double> e(static_cast<std::size_t>(n));
    for (double& v : e) v = d(rng);
    ErrorStats s = axis_stats(e);

    // duplicate-formula oracle
    double sum = 0, sumsq = 0, mx = 0;
    for (double v : e) {
      sum += std::abs(v);
      sumsq += v * v;
      mx = std::max(mx, std::abs(v));
    }
    double mean = sum / n;
    double rms = std::sqrt(sumsq / n);
    double svar = (sumsq - n * mean * mean) / (n - 1);
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.rms == doctest::Approx(rms).epsilon(1e-12));
    CHECK(s.max == doctest::Approx(mx).epsilon(1e-12));
    CHECK(s.std_dev == doctest::Approx(std::sqrt(std::max(svar, 0.0)))
                           .epsilon(1e-9));

    // rms^2 = mean^2 + std^2 (n-1)/n
    double lhs = s.rms * s.rms;
    double rhs = s.mean * s.mean +
                 s.std_dev * s.std_dev * double(n - 1) / double(n);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    CHECK(s.rms >= s.mean - 1e-12);  // Jensen
    CHECK(s.max >= s.mean - 1e-12);
  }
}

TEST_CASE("axis_stats scales homogeneously") {
  std::vector<double> e = {0.1, -0.7, 0.3, 0.2, -0.05};
  ErrorStats base = axis_stats(e);
  for (double& v : e) v *= -3.0;
  ErrorStats scaled = axis_stats(e);
  CHECK(scaled.rms == doctest::Approx(3.0 * base.rms));
  CHECK(scaled.mean == doctest::Approx(3.0 * base.mean));
  CHECK(scaled.std_dev == doctest::Approx(3.0 * base.std_dev));
  CHECK(scaled.max == doctest::Approx(3.0 * base.max));
}

TEST_CASE("align_nearest pairing and tie-breaking") {
  std::vector<PositionEstimate> truth = {est(0, 0, 0, 0), est(1, 1, 0, 0),
                                         est(2, 2, 0, 0)};
  std::vector<PositionEstimate> e = {est(0.1, 0, 0, 0), est(0.9, 0, 0, 0),
                                     est(1.5, 0, 0, 0), est(5.0, 0, 0, 0)};
  auto pairs = align_nearest(e, truth, 0.6);
  REQUIRE(pairs.size() == 3);  // t=5.0 is farther than max_dt from any truth
  CHECK(pairs[0].truth.timestamp == 0.0);
  CHECK(pairs[0].dt == doctest::Approx(0.1));
  CHECK(pairs[1].truth.timestamp == 1.0);
  // exact tie at 1.5 goes to the earlier truth sample
  CHECK(pairs[2].truth.timestamp == 1.0);
  CHECK(pairs[2].dt == doctest::Approx(0.5));

  // output never exceeds the estimate count; dt bounded
  for (const AlignedPair& p : pairs) CHECK(p.dt <= 0.6);

  // inserting a far truth sample does not change the pairing
  std::vector<PositionEstimate> more = truth;
  more.push_back(est(40, 9, 9, 9));
  auto pairs2 = align_nearest(e, more, 0.6);
  REQUIRE(pairs2.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    CHECK(pairs2[i].truth.timestamp == pairs[i].truth.timestamp);

  // unsorted input violates the contract
  std::vector<PositionEstimate> bad = {est(2, 0, 0, 0), est(1, 0, 0, 0)};
  CHECK_THROWS_AS(align_nearest(bad, truth, 1.0), ContractError);
  CHECK_THROWS_AS(align_nearest(e, bad, 1.0), ContractError);
}

TEST_CASE("fit_z_offset and apply_offset close the loop") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.15);
  const double bias = 2.42;
  std::vector<PositionEstimate> truth, measured;
  for (int i = 0; i < 265; ++i) {
    double t = 0.1 * i;
    truth.push_back(est(t, 1.0, 2.0, 3.0, EstimateSource::kTruth));
    measured.push_back(
        est(t, 1.0, 2.0, 3.0 - bias + noise(rng), EstimateSource::kNetwork));
  }
  auto pairs = align_nearest(measured, truth, 0.05);
  REQUIRE(pairs.size() == 265);
  double fitted = fit_z_offset(pairs);
  CHECK(fitted == doctest::Approx(bias).epsilon(0.03 / bias));

  auto corrected = apply_offset(measured, {0, 0, fitted});
  auto cpairs = align_nearest(corrected, truth, 0.05);
  double residual = 0;
  for (const AlignedPair& p : cpairs) residual += p.truth.z - p.estimate.z;
  residual /= double(cpairs.size());
  CHECK(std::abs(residual) < 1e-9);

  CHECK_THROWS_AS(fit_z_offset({}), ContractError);
}

TEST_CASE("evaluate_method counts outcomes") {
  std::vector<PositionEstimate> truth;
  for (int i = 0; i < 10; ++i) truth.push_back(est(i, 0, 0, 0));
  std::vector<PositionEstimate> e = {
      est(0, 0.05, 0, 0),  // RP
      est(1, 0.30, 0, 0),  // CP
      est(2, 1.00, 0, 0),  // WP
      est(3, 0.10, 0, 0),  // RP
  };
  MethodReport r = evaluate_method("m", e, truth, 10, 0.15);
  CHECK(r.updates == 4);
  CHECK(r.scans == 10);
  CHECK(r.rp == 2);
  CHECK(r.cp == 1);
  CHECK(r.wp == 1);
  CHECK(r.np == 6);
  CHECK(r.err3d.n == 4);
  std::string text = report_text({r});
  CHECK(text.find("m") != std::string::npos);
  std::string csv = report_csv({r});
  CHECK(csv.find("method,") == 0);
}

TEST_CASE("estimate and range csv round-trips") {
  std::vector<PositionEstimate> es = {
      est(0.5, 1.25, -3.5, 0.125, EstimateSource::kClustering),
      est(1.5, 0.1, 0.2, 0.3, EstimateSource::kNetwork),
      est(2.5, -1, -2, -3, EstimateSource::kTruth),
  };
  auto back = parse_estimates(write_estimates(es));
  REQUIRE(back.size() == es.size());
  for (std::size_t i = 0; i < es.size(); ++i) {
    CHECK(back[i].timestamp == es[i].timestamp);
    CHECK(back[i].x == es[i].x);
    CHECK(back[i].z == es[i].z);
    CHECK(back[i].source == es[i].source);
  }
  CHECK_THROWS_AS(parse_estimates("1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse_estimates("1,2,3,4,marmot\n"), ParseError);

  std::vector<RangeSample> rs = {{0.5, 4.25}, {1.0, 4.5}};
  auto rback = parse_ranges(write_ranges(rs));
  REQUIRE(rback.size() == 2);
  CHECK(rback[1].range == 4.5);
  CHECK_THROWS_AS(parse_ranges("justonefield\n"), ParseError);
}
