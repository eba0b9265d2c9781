#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tclqr/errors.hpp"
#include "tclqr/metrics.hpp"
#include "tclqr/simulation.hpp"
#include "tclqr/synthesis.hpp"

using tclqr::Matrix;
using tclqr::Vector;

namespace {

tclqr::Trajectory scalarPath(std::initializer_list<double> xs) {
  tclqr::Trajectory traj;
  for (double v : xs) traj.states.push_back(Vector{{v}});
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    traj.controls.push_back(Vector{{0.0}});
  }
  return traj;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("position extraction is one-based and validated") {
  const tclqr::PositionExtractor pos{{1, 3}};
  pos.validate(4);
  const Vector x{{5.0, 6.0, 7.0, 8.0}};
  const Vector p = pos.extract(x);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == 5.0);
  CHECK(p[1] == 7.0);
  CHECK_THROWS_AS(tclqr::PositionExtractor{{0}}.validate(4),
                  tclqr::InvalidInputError);
  CHECK_THROWS_AS(tclqr::PositionExtractor{{5}}.validate(4),
                  tclqr::InvalidInputError);
  CHECK_THROWS_AS(tclqr::PositionExtractor{}.validate(4),
                  tclqr::InvalidInputError);
}

TEST_CASE("path length") {
  const tclqr::PositionExtractor pos{{1}};
  CHECK(tclqr::totalDistance(scalarPath({3.0, 3.0, 3.0}), pos) == 0.0);
  CHECK(tclqr::totalDistance(scalarPath({0.0, 3.0, 3.0, 7.0}), pos) == 7.0);
  // Random walk against a direct recomputation.
  tclqr::RandomStream rs(55);
  tclqr::Trajectory traj;
  for (int t = 0; t <= 30; ++t) {
    traj.states.push_back(testrig::randomVector(rs, 4));
    if (t > 0) traj.controls.push_back(Vector::Zero(2));
  }
  const tclqr::PositionExtractor twoD{{1, 3}};
  double want = 0.0;
  for (int t = 1; t <= 30; ++t) {
    want += (twoD.extract(traj.states[static_cast<std::size_t>(t)]) -
             twoD.extract(traj.states[static_cast<std::size_t>(t - 1)]))
                .norm();
  }
  CHECK(tclqr::totalDistance(traj, twoD) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("effort and excursion") {
  tclqr::Trajectory traj = scalarPath({0.0, 1.0, -2.0, 2.0});
  traj.controls = {Vector{{1.0}}, Vector{{-2.0}}, Vector{{2.0}}};
  CHECK(tclqr::totalEffort(traj) == 5.0);  // sum of norms
  const tclqr::PositionExtractor pos{{1}};
  CHECK(tclqr::maxDistance(traj, pos) == 2.0);
  CHECK(tclqr::maxDistance(scalarPath({0.0}), pos) == 0.0);

  // Initial state counts: the point-mass start is at (5, 5).
  const auto rig = testrig::pointMassRig(1.0, 1, 0.0);
  const auto res = tclqr::synthesize(rig.problem);
  const auto cfg = testrig::makeEnsemble(rig, res.controller, 1, 1, 1);
  const auto rollout = tclqr::simulate(cfg, 0);
  const tclqr::PositionExtractor planar{{1, 3}};
  CHECK(tclqr::maxDistance(rollout, planar) >= std::sqrt(50.0) - 1e-12);
  double want = 0.0;
  for (const auto& u : rollout.controls) want += u.norm();
  CHECK(tclqr::totalEffort(rollout) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("lower median never interpolates") {
  CHECK(tclqr::lowerMedian({3.0, 1.0, 2.0}) == 2.0);
  CHECK(tclqr::lowerMedian({4.0, 1.0, 3.0, 2.0}) == 2.0);
  CHECK(tclqr::lowerMedian({7.0}) == 7.0);
  CHECK_THROWS_AS(tclqr::lowerMedian({}), tclqr::InvalidInputError);
}

TEST_CASE("median-centered interval length") {
  CHECK(tclqr::sampleIntervalLength({4.0, 4.0, 4.0, 4.0}, 0.95) == 0.0);
  std::vector<double> ladder;
  for (int i = 0; i <= 100; ++i) ladder.push_back(static_cast<double>(i));
  CHECK(tclqr::sampleIntervalLength(ladder, 0.95) == 96.0);
  CHECK(tclqr::sampleIntervalLength({-2.0, -1.0, 0.0, 1.0, 2.0}, 0.6) == 2.0);

  // Wider coverage never shrinks the interval; order of samples and a
  // common shift never change it.
  tclqr::RandomStream rs(91);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(rs.normals(1)[0] * 3.0);
  double prev = 0.0;
  for (double cov : {0.1, 0.3, 0.5, 0.8, 0.95, 1.0}) {
    const double len = tclqr::sampleIntervalLength(xs, cov);
    CHECK(len >= prev);
    prev = len;
  }
  std::vector<double> shuffled = xs;
  std::reverse(shuffled.begin(), shuffled.end());
  std::vector<double> shifted = xs;
  for (double& v : shifted) v += 123.0;
  CHECK(tclqr::sampleIntervalLength(shuffled, 0.9) ==
        tclqr::sampleIntervalLength(xs, 0.9));
  CHECK(tclqr::sampleIntervalLength(shifted, 0.9) ==
        doctest::Approx(tclqr::sampleIntervalLength(xs, 0.9)).epsilon(1e-12));

  CHECK_THROWS_AS(tclqr::sampleIntervalLength({}, 0.9),
                  tclqr::InvalidInputError);
  CHECK_THROWS_AS(tclqr::sampleIntervalLength({1.0}, 0.0),
                  tclqr::InvalidInputError);
  CHECK_THROWS_AS(tclqr::sampleIntervalLength({1.0}, 1.5),
                  tclqr::InvalidInputError);
}

TEST_CASE("ensemble summary agrees with direct recomputation") {
  const auto rig = testrig::pointMassRig(1.0, 1, 1.0);
  const auto res = tclqr::synthesize(rig.problem);
  const auto cfg = testrig::makeEnsemble(rig, res.controller, 32, 3, 1);
  const auto ensemble = tclqr::runEnsemble(cfg);
  const tclqr::PositionExtractor pos{{1, 3}};
  const std::vector<int> idx = {1, 3};
  const auto summary = tclqr::summarize(ensemble, pos, idx, 0.9);

  REQUIRE(summary.intervalLengths.rows() == 101);
  REQUIRE(summary.intervalLengths.cols() == 2);
  REQUIRE(summary.medians.rows() == 101);
  REQUIRE(summary.meanValues.rows() == 101);
  REQUIRE(summary.meanPositions.size() == 101);

  double dTot = 0.0, uTot = 0.0, pMax = 0.0;
  for (const auto& traj : ensemble.trials) {
    dTot += tclqr::totalDistance(traj, pos);
    uTot += tclqr::totalEffort(traj);
    pMax += tclqr::maxDistance(traj, pos);
  }
  const double n = static_cast<double>(ensemble.trials.size());
  CHECK(summary.dTotMean == doctest::Approx(dTot / n).epsilon(1e-12));
  CHECK(summary.uTotMean == doctest::Approx(uTot / n).epsilon(1e-12));
  CHECK(summary.pMaxMean == doctest::Approx(pMax / n).epsilon(1e-12));

  for (int t : {0, 17, 100}) {
    for (int c = 0; c < 2; ++c) {
      std::vector<double> coord;
      double mean = 0.0;
      Vector meanPos = Vector::Zero(2);
      for (const auto& traj : ensemble.trials) {
        const double v = traj.states[static_cast<std::size_t>(t)][idx[static_cast<std::size_t>(c)] - 1];
        coord.push_back(v);
        mean += v;
        meanPos += pos.extract(traj.states[static_cast<std::size_t>(t)]);
      }
      mean /= n;
      meanPos /= n;
      CHECK(summary.meanValues(t, c) == doctest::Approx(mean).epsilon(1e-12));
      CHECK(summary.medians(t, c) == tclqr::lowerMedian(coord));
      CHECK(summary.intervalLengths(t, c) ==
            doctest::Approx(tclqr::sampleIntervalLength(coord, 0.9))
                .epsilon(1e-12));
      CHECK((summary.meanPositions[static_cast<std::size_t>(t)] - meanPos)
                .cwiseAbs()
                .maxCoeff() <= 1e-12 * std::max(1.0, meanPos.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("a one-trial summary has zero spread and reproduces the trial") {
  const auto rig = testrig::pointMassRig(1.0, 1, 1.0);
  const auto res = tclqr::synthesize(rig.problem);
  auto cfg = testrig::makeEnsemble(rig, res.controller, 1, 77, 1);
  const auto one = tclqr::runEnsemble(cfg);
  const tclqr::PositionExtractor pos{{1, 3}};
  const auto summary = tclqr::summarize(one, pos, {1, 3}, 0.95);
  CHECK(summary.intervalLengths.cwiseAbs().maxCoeff() == 0.0);
  CHECK(summary.dTotMean == tclqr::totalDistance(one.trials[0], pos));
  CHECK(summary.uTotMean == tclqr::totalEffort(one.trials[0]));
  CHECK(summary.pMaxMean == tclqr::maxDistance(one.trials[0], pos));
  for (int t : {0, 50}) {
    CHECK(summary.medians(t, 0) == one.trials[0].states[static_cast<std::size_t>(t)][0]);
    CHECK(summary.meanValues(t, 1) == one.trials[0].states[static_cast<std::size_t>(t)][2]);
  }

  // Duplicating the only trial changes nothing.
  tclqr::TrajectoryEnsemble dup = one;
  dup.trials.push_back(one.trials[0]);
  const auto dupSummary = tclqr::summarize(dup, pos, {1, 3}, 0.95);
  CHECK(dupSummary.dTotMean == doctest::Approx(summary.dTotMean).epsilon(1e-14));
  CHECK(dupSummary.intervalLengths.cwiseAbs().maxCoeff() == 0.0);
  CHECK(testrig::maxAbsDiff(dupSummary.medians, summary.medians) == 0.0);

  CHECK_THROWS_AS(tclqr::summarize(tclqr::TrajectoryEnsemble{}, pos, {1}, 0.9),
                  tclqr::InvalidInputError);
  CHECK_THROWS_AS(tclqr::summarize(one, pos, {9}, 0.9),
                  tclqr::InvalidInputError);
}

}  // TEST_SUITE
