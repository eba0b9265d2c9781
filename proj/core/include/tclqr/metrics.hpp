#pragma once

#include <vector>

#include "tclqr/linalg.hpp"
#include "tclqr/simulation.hpp"

namespace tclqr {

// Picks position coordinates out of the full state by 1-based index.
struct PositionExtractor {
  std::vector<int> indices;

  void validate(Eigen::Index stateDim) const;
  Vector extract(const Eigen::Ref<const Vector>& x) const;
};

// Total path length of the extracted position: sum_t |p_t - p_{t-1}|.
double totalDistance(const Trajectory& traj, const PositionExtractor& pos);

// Sum of Euclidean control norms over the horizon.
double totalEffort(const Trajectory& traj);

// max_t |p_t| including t = 0.
double maxDistance(const Trajectory& traj, const PositionExtractor& pos);

// Lower-middle order statistic (for even counts the smaller of the two
// middle values), so results never interpolate.
double lowerMedian(std::vector<double> samples);

// Length of the shortest median-centered symmetric interval containing at
// least ceil(coverage * n) of the samples: 2 * r where r is the
// ceil(coverage*n)-th smallest |sample - median|.
double sampleIntervalLength(std::vector<double> samples, double coverage);

// Cross-trial summary.  Interval grids are (N+1) x #intervalIndices.
struct EnsembleSummary {
  double dTotMean = 0.0;
  double uTotMean = 0.0;
  double pMaxMean = 0.0;
  std::vector<int> intervalIndices;        // 1-based state coordinates
  Matrix intervalLengths;
  Matrix medians;
  Matrix meanValues;
  std::vector<Vector> meanPositions;       // per stage, extracted coords
};

EnsembleSummary summarize(const TrajectoryEnsemble& ensemble,
                          const PositionExtractor& pos,
                          const std::vector<int>& intervalIndices,
                          double coverage);

}  // namespace tclqr
