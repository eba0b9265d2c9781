#include "tclqr/noise.hpp"

#include <algorithm>
#include <cmath>

#include "tclqr/errors.hpp"

namespace tclqr {

namespace {

void validateGaussian(const GaussianSpec& g, const std::string& what) {
  requireFinite(g.mean, what + " mean");
  requireFinite(g.cov, what + " cov");
  if (g.cov.rows() != g.cov.cols() || g.cov.rows() != g.mean.size()) {
    throw InvalidInputError(what + ": mean/cov dimension mismatch");
  }
  if (g.mean.size() == 0) {
    throw InvalidInputError(what + ": dimension must be positive");
  }
  const double scale = std::max(1.0, g.cov.cwiseAbs().maxCoeff());
  if (symmetryError(g.cov) > 1e-10 * scale) {
    throw InvalidInputError(what + ": covariance is not symmetric");
  }
  if (!isPsd(g.cov, 1e-9)) {
    throw InvalidInputError(what + ": covariance is not PSD");
  }
}

void validateQ00(const Eigen::Ref<const Matrix>& q00, Eigen::Index dim) {
  if (q00.rows() != dim || q00.cols() != dim) {
    throw InvalidInputError("moment weighting block has wrong dimension");
  }
  requireFinite(q00, "moment weighting block");
  const double scale = std::max(1.0, q00.cwiseAbs().maxCoeff());
  if (symmetryError(q00) > 1e-10 * scale) {
    throw InvalidInputError("moment weighting block is not symmetric");
  }
}

}  // namespace

NoiseModel NoiseModel::gaussian(Vector mean, Matrix cov) {
  GaussianSpec g{std::move(mean), std::move(cov)};
  validateGaussian(g, "gaussian noise");
  NoiseModel m;
  m.kind_ = Kind::Gaussian;
  m.dim_ = g.mean.size();
  m.weights_ = {1.0};
  m.cumWeights_ = {1.0};
  m.componentSqrts_.push_back(psdSqrt(g.cov));
  m.components_.push_back(std::move(g));
  return m;
}

NoiseModel NoiseModel::mixture(std::vector<double> weights,
                               std::vector<GaussianSpec> components) {
  if (weights.empty() || weights.size() != components.size()) {
    throw InvalidInputError("mixture: need one weight per component");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidInputError("mixture: weights must be nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidInputError("mixture: weights must sum to 1, got " +
                            std::to_string(sum));
  }
  for (const auto& c : components) validateGaussian(c, "mixture component");
  const Eigen::Index dim = components.front().mean.size();
  for (const auto& c : components) {
    if (c.mean.size() != dim) {
      throw InvalidInputError("mixture: components have mixed dimensions");
    }
  }
  NoiseModel m;
  m.kind_ = Kind::Mixture;
  m.dim_ = dim;
  m.cumWeights_.resize(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    m.cumWeights_[i] = acc;
  }
  m.cumWeights_.back() = 1.0;
  for (const auto& c : components) m.componentSqrts_.push_back(psdSqrt(c.cov));
  m.weights_ = std::move(weights);
  m.components_ = std::move(components);
  return m;
}

NoiseModel NoiseModel::pushforward(Matrix map, NoiseModel inner) {
  requireFinite(map, "pushforward map");
  if (map.cols() != inner.dim()) {
    throw InvalidInputError("pushforward: map columns must match inner dim");
  }
  if (map.rows() == 0) {
    throw InvalidInputError("pushforward: map must have rows");
  }
  NoiseModel m;
  m.kind_ = Kind::Pushforward;
  m.dim_ = map.rows();
  m.map_ = std::move(map);
  m.inner_ = std::make_shared<const NoiseModel>(std::move(inner));
  return m;
}

NoiseModel NoiseModel::empirical(std::vector<Vector> samples) {
  if (samples.empty()) {
    throw InvalidInputError("empirical noise: sample list is empty");
  }
  const Eigen::Index dim = samples.front().size();
  if (dim == 0) {
    throw InvalidInputError("empirical noise: dimension must be positive");
  }
  for (const auto& s : samples) {
    if (s.size() != dim) {
      throw InvalidInputError("empirical noise: samples have mixed dimensions");
    }
    requireFinite(s, "empirical noise sample");
  }
  NoiseModel m;
  m.kind_ = Kind::Empirical;
  m.dim_ = dim;
  m.samples_ = std::move(samples);
  return m;
}

const std::vector<double>& NoiseModel::mixtureWeights() const {
  if (kind_ != Kind::Gaussian && kind_ != Kind::Mixture) {
    throw InvalidInputError("noise model: not a gaussian or mixture");
  }
  return weights_;
}

const std::vector<GaussianSpec>& NoiseModel::mixtureComponents() const {
  if (kind_ != Kind::Gaussian && kind_ != Kind::Mixture) {
    throw InvalidInputError("noise model: not a gaussian or mixture");
  }
  return components_;
}

const Matrix& NoiseModel::pushforwardMap() const {
  if (kind_ != Kind::Pushforward) {
    throw InvalidInputError("noise model: not a pushforward");
  }
  return map_;
}

const NoiseModel& NoiseModel::pushforwardInner() const {
  if (kind_ != Kind::Pushforward) {
    throw InvalidInputError("noise model: not a pushforward");
  }
  return *inner_;
}

bool NoiseModel::analyticSupported() const noexcept {
  if (kind_ == Kind::Empirical) return false;
  if (kind_ == Kind::Pushforward) return inner_->analyticSupported();
  return true;
}

Vector NoiseModel::sample(RandomStream& rs) const {
  switch (kind_) {
    case Kind::Gaussian:
      return components_[0].mean + componentSqrts_[0] * rs.normals(dim_);
    case Kind::Mixture: {
      const double u = rs.uniform01();
      std::size_t c = 0;
      while (c + 1 < cumWeights_.size() && u >= cumWeights_[c]) ++c;
      return components_[c].mean + componentSqrts_[c] * rs.normals(dim_);
    }
    case Kind::Pushforward:
      return map_ * inner_->sample(rs);
    case Kind::Empirical: {
      const double u = rs.uniform01();
      auto idx = static_cast<std::size_t>(u * static_cast<double>(samples_.size()));
      idx = std::min(idx, samples_.size() - 1);
      return samples_[idx];
    }
  }
  throw NumericalError("noise model: corrupt kind");
}

NoiseModel::MixtureForm NoiseModel::mixtureForm() const {
  switch (kind_) {
    case Kind::Gaussian:
    case Kind::Mixture:
      return {weights_, components_};
    case Kind::Pushforward: {
      MixtureForm inner = inner_->mixtureForm();
      for (auto& c : inner.components) {
        c.mean = map_ * c.mean;
        c.cov = symmetrize(map_ * c.cov * map_.transpose());
      }
      return inner;
    }
    case Kind::Empirical:
      throw InvalidInputError(
          "empirical noise has no closed-form moments; use Monte Carlo "
          "moment estimation");
  }
  throw NumericalError("noise model: corrupt kind");
}

NoiseMoments analyticMoments(const NoiseModel& model,
                             const Eigen::Ref<const Matrix>& q00) {
  validateQ00(q00, model.dim());
  const auto form = model.mixtureForm();
  const Eigen::Index n = model.dim();

  Vector wbar = Vector::Zero(n);
  for (std::size_t c = 0; c < form.weights.size(); ++c) {
    wbar += form.weights[c] * form.components[c].mean;
  }

  Matrix sigma = Matrix::Zero(n, n);
  Vector gamma = Vector::Zero(n);
  double es2 = 0.0;  // E[(d^T Q00 d)^2]
  for (std::size_t c = 0; c < form.weights.size(); ++c) {
    const double pi = form.weights[c];
    const Vector m = form.components[c].mean - wbar;
    const Matrix& s = form.components[c].cov;
    sigma += pi * (s + m * m.transpose());
    const double mqm = m.dot(q00 * m);
    const Matrix qs = q00 * s;
    const double trqs = qs.trace();
    gamma += pi * (m * mqm + m * trqs + 2.0 * (s * (q00 * m)));
    es2 += pi * (mqm * mqm + 4.0 * m.dot(q00 * (s * (q00 * m))) +
                 trqs * trqs + 2.0 * (qs * qs).trace() + 2.0 * mqm * trqs);
  }
  sigma = symmetrize(sigma);

  NoiseMoments out;
  out.mean = std::move(wbar);
  const Matrix sq = sigma * q00;
  const double trsq = sq.trace();
  out.delta = es2 - trsq * trsq;
  out.vartheta = out.delta - 4.0 * (sq * sq).trace();
  out.centralCov = std::move(sigma);
  out.gamma = std::move(gamma);
  out.q00Used = q00;
  return out;
}

std::pair<NoiseMoments, MomentStdErrors> monteCarloMomentsWithErrors(
    const NoiseModel& model, const Eigen::Ref<const Matrix>& q00,
    std::size_t samples, std::uint64_t seed) {
  validateQ00(q00, model.dim());
  if (samples == 0) {
    throw InvalidInputError("monte_carlo_moments: need at least one sample");
  }
  const Eigen::Index n = model.dim();
  const double dn = static_cast<double>(samples);

  // Pass 1: sample mean.  Pass 2 regenerates the identical stream, so the
  // estimator is deterministic and needs no sample buffer.
  Vector wbar = Vector::Zero(n);
  {
    RandomStream rs(seed);
    for (std::size_t i = 0; i < samples; ++i) wbar += model.sample(rs);
    wbar /= dn;
  }

  Matrix c2 = Matrix::Zero(n, n);    // sum d d^T
  Matrix c2sq = Matrix::Zero(n, n);  // sum (d_i d_j)^2
  Vector g = Vector::Zero(n);        // sum d s
  Vector gsq = Vector::Zero(n);      // sum (d_i s)^2
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  {
    RandomStream rs(seed);
    for (std::size_t i = 0; i < samples; ++i) {
      const Vector d = model.sample(rs) - wbar;
      const double s = d.dot(q00 * d);
      const Matrix dd = d * d.transpose();
      c2 += dd;
      c2sq += dd.cwiseProduct(dd);
      g += d * s;
      gsq += (d * s).cwiseAbs2();
      s1 += s;
      s2 += s * s;
      s4 += s * s * s * s;
    }
  }

  NoiseMoments out;
  out.mean = wbar;
  out.centralCov = symmetrize(c2 / dn);
  out.gamma = g / dn;
  const double meanS = s1 / dn;
  const double meanS2 = s2 / dn;
  out.delta = meanS2 - meanS * meanS;
  const Matrix sq = out.centralCov * q00;
  out.vartheta = out.delta - 4.0 * (sq * sq).trace();
  out.q00Used = q00;

  MomentStdErrors se;
  se.mean = (out.centralCov.diagonal() / dn).cwiseMax(0.0).cwiseSqrt();
  se.centralCov =
      ((c2sq / dn - (c2 / dn).cwiseAbs2()) / dn).cwiseMax(0.0).cwiseSqrt();
  se.gamma = ((gsq / dn - (g / dn).cwiseAbs2()) / dn).cwiseMax(0.0).cwiseSqrt();
  const double varS = std::max(0.0, meanS2 - meanS * meanS);
  const double varS2 = std::max(0.0, s4 / dn - meanS2 * meanS2);
  // Triangle-inequality bound for delta = E[s^2] - E[s]^2.
  se.delta = std::sqrt(varS2 / dn) + 2.0 * std::abs(meanS) * std::sqrt(varS / dn);
  // vartheta adds the trace term; propagate Sigma entry errors through its
  // gradient 2 Q Sigma Q, ignoring cross-covariances.
  const Matrix grad = 2.0 * (q00 * out.centralCov * q00);
  const double traceTermSe =
      std::sqrt(grad.cwiseProduct(se.centralCov).cwiseAbs2().sum());
  se.vartheta = se.delta + 4.0 * traceTermSe;
  return {std::move(out), std::move(se)};
}

NoiseMoments monteCarloMoments(const NoiseModel& model,
                               const Eigen::Ref<const Matrix>& q00,
                               std::size_t samples, std::uint64_t seed) {
  return monteCarloMomentsWithErrors(model, q00, samples, seed).first;
}

}  // namespace tclqr
