#include "tclqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tclqr/errors.hpp"

namespace tclqr {

void PositionExtractor::validate(Eigen::Index stateDim) const {
  if (indices.empty()) {
    throw InvalidInputError("position extractor: no indices");
  }
  for (int idx : indices) {
    if (idx < 1 || idx > stateDim) {
      throw InvalidInputError("position extractor: index " +
                              std::to_string(idx) + " outside 1.." +
                              std::to_string(stateDim));
    }
  }
}

Vector PositionExtractor::extract(const Eigen::Ref<const Vector>& x) const {
  validate(x.size());
  Vector out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = x[indices[i] - 1];
  }
  return out;
}

double totalDistance(const Trajectory& traj, const PositionExtractor& pos) {
  if (traj.states.empty()) {
    throw InvalidInputError("total distance: empty trajectory");
  }
  double sum = 0.0;
  Vector prev = pos.extract(traj.states.front());
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    const Vector cur = pos.extract(traj.states[t]);
    sum += (cur - prev).norm();
    prev = cur;
  }
  return sum;
}

double totalEffort(const Trajectory& traj) {
  double sum = 0.0;
  for (const auto& u : traj.controls) sum += u.norm();
  return sum;
}

double maxDistance(const Trajectory& traj, const PositionExtractor& pos) {
  if (traj.states.empty()) {
    throw InvalidInputError("max distance: empty trajectory");
  }
  double best = 0.0;
  for (const auto& x : traj.states) {
    best = std::max(best, pos.extract(x).norm());
  }
  return best;
}

double lowerMedian(std::vector<double> samples) {
  if (samples.empty()) {
    throw InvalidInputError("median: no samples");
  }
  const std::size_t idx = (samples.size() - 1) / 2;
  std::nth_element(samples.begin(),
                   samples.begin() + static_cast<std::ptrdiff_t>(idx),
                   samples.end());
  return samples[idx];
}

double sampleIntervalLength(std::vector<double> samples, double coverage) {
  if (samples.empty()) {
    throw InvalidInputError("interval length: no samples");
  }
  if (!(coverage > 0.0) || coverage > 1.0) {
    throw InvalidInputError("interval length: coverage must be in (0, 1]");
  }
  const double med = lowerMedian(samples);
  for (double& s : samples) s = std::abs(s - med);
  // Nudge guards against 0.95 * 100 landing a hair above the exact product.
  const double raw = coverage * static_cast<double>(samples.size());
  auto need = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  need = std::max<std::size_t>(1, std::min(need, samples.size()));
  std::nth_element(samples.begin(),
                   samples.begin() + static_cast<std::ptrdiff_t>(need - 1),
                   samples.end());
  return 2.0 * samples[need - 1];
}

EnsembleSummary summarize(const TrajectoryEnsemble& ensemble,
                          const PositionExtractor& pos,
                          const std::vector<int>& intervalIndices,
                          double coverage) {
  if (ensemble.trials.empty()) {
    throw InvalidInputError("summarize: empty ensemble");
  }
  const auto& trials = ensemble.trials;
  const Eigen::Index n = trials.front().states.front().size();
  const auto horizon = trials.front().states.size();  // N + 1 entries
  pos.validate(n);
  for (int idx : intervalIndices) {
    if (idx < 1 || idx > n) {
      throw InvalidInputError("summarize: interval index out of range");
    }
  }
  for (const auto& tr : trials) {
    if (tr.states.size() != horizon) {
      throw InvalidInputError("summarize: trials have mixed horizons");
    }
  }

  EnsembleSummary out;
  out.intervalIndices = intervalIndices;
  const double dn = static_cast<double>(trials.size());
  for (const auto& tr : trials) {
    out.dTotMean += totalDistance(tr, pos);
    out.uTotMean += totalEffort(tr);
    out.pMaxMean += maxDistance(tr, pos);
  }
  out.dTotMean /= dn;
  out.uTotMean /= dn;
  out.pMaxMean /= dn;

  const auto cols = static_cast<Eigen::Index>(intervalIndices.size());
  out.intervalLengths = Matrix::Zero(static_cast<Eigen::Index>(horizon), cols);
  out.medians = Matrix::Zero(static_cast<Eigen::Index>(horizon), cols);
  out.meanValues = Matrix::Zero(static_cast<Eigen::Index>(horizon), cols);
  std::vector<double> column(trials.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const int coord = intervalIndices[static_cast<std::size_t>(j)] - 1;
      double mean = 0.0;
      for (std::size_t i = 0; i < trials.size(); ++i) {
        column[i] = trials[i].states[t][coord];
        mean += column[i];
      }
      out.meanValues(static_cast<Eigen::Index>(t), j) = mean / dn;
      out.medians(static_cast<Eigen::Index>(t), j) = lowerMedian(column);
      out.intervalLengths(static_cast<Eigen::Index>(t), j) =
          sampleIntervalLength(column, coverage);
    }
    Vector meanPos = Vector::Zero(static_cast<Eigen::Index>(pos.indices.size()));
    for (const auto& tr : trials) meanPos += pos.extract(tr.states[t]);
    out.meanPositions.push_back(meanPos / dn);
  }
  return out;
}

}  // namespace tclqr
