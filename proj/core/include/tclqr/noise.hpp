#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "tclqr/linalg.hpp"
#include "tclqr/rng.hpp"

namespace tclqr {

struct GaussianSpec {
  Vector mean;
  Matrix cov;  // symmetric PSD
};

// Process noise distribution for one step of the plant.  Gaussians, finite
// Gaussian mixtures and linear images of either have closed-form moments;
// empirical models sample from a fixed list and only support Monte Carlo
// moment estimation.
class NoiseModel {
 public:
  enum class Kind { Gaussian, Mixture, Pushforward, Empirical };

  // Empty placeholder (dim 0); replace via a factory before use.
  NoiseModel() = default;

  static NoiseModel gaussian(Vector mean, Matrix cov);
  static NoiseModel mixture(std::vector<double> weights,
                            std::vector<GaussianSpec> components);
  static NoiseModel pushforward(Matrix map, NoiseModel inner);
  static NoiseModel empirical(std::vector<Vector> samples);

  Kind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return dim_; }
  bool analyticSupported() const noexcept;

  // One draw.  The number and order of stream consumptions is a fixed
  // function of the model shape, never of the realized values.
  Vector sample(RandomStream& rs) const;

  // Canonical finite-mixture representation with any linear maps folded in.
  // Throws InvalidInputError for empirical models.
  struct MixtureForm {
    std::vector<double> weights;
    std::vector<GaussianSpec> components;
  };
  MixtureForm mixtureForm() const;

  const std::vector<Vector>& samples() const { return samples_; }

  // Raw pieces for serialization.  Weight/component accessors require a
  // Gaussian or mixture model, the pushforward accessors a pushforward.
  const std::vector<double>& mixtureWeights() const;
  const std::vector<GaussianSpec>& mixtureComponents() const;
  const Matrix& pushforwardMap() const;
  const NoiseModel& pushforwardInner() const;

 private:
  Kind kind_ = Kind::Gaussian;
  Eigen::Index dim_ = 0;
  // mixture storage (gaussian = one component)
  std::vector<double> weights_;
  std::vector<double> cumWeights_;
  std::vector<GaussianSpec> components_;
  std::vector<Matrix> componentSqrts_;
  // pushforward storage
  Matrix map_;
  std::shared_ptr<const NoiseModel> inner_;
  // empirical storage
  std::vector<Vector> samples_;
};

// First/second moments of the noise plus the cost-weighted third/fourth
// moment summaries that drive the variability penalty.  q00_used records the
// weighting block the higher moments were computed against; consumers check
// it so stale moments cannot be paired with a different coupling.
struct NoiseMoments {
  Vector mean;        // w_bar
  Matrix centralCov;  // Sigma
  Vector gamma;       // E[d (d^T Q00 d)], d = w - w_bar
  double delta = 0.0;     // Var(d^T Q00 d)
  double vartheta = 0.0;  // delta - 4 tr((Sigma Q00)^2)
  Matrix q00Used;
};

// Per-entry standard errors for a Monte Carlo moment estimate.
struct MomentStdErrors {
  Vector mean;
  Matrix centralCov;
  Vector gamma;
  double delta = 0.0;
  double vartheta = 0.0;
};

// Closed-form moments.  q00 must be symmetric with the model's dimension.
NoiseMoments analyticMoments(const NoiseModel& model,
                             const Eigen::Ref<const Matrix>& q00);

// Sampling estimate of the same quantities from `samples` draws of one
// dedicated stream; deterministic for a fixed seed.
NoiseMoments monteCarloMoments(const NoiseModel& model,
                               const Eigen::Ref<const Matrix>& q00,
                               std::size_t samples, std::uint64_t seed);

std::pair<NoiseMoments, MomentStdErrors> monteCarloMomentsWithErrors(
    const NoiseModel& model, const Eigen::Ref<const Matrix>& q00,
    std::size_t samples, std::uint64_t seed);

}  // namespace tclqr
