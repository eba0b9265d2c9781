#include "tclqr/synthesis.hpp"

#include <cmath>
#include <string>

#include "tclqr/errors.hpp"

namespace tclqr {

Vector Controller::control(int t, const Eigen::Ref<const Vector>& eta) const {
  if (t < 0 || t >= horizon()) {
    throw InvalidInputError("controller: stage out of range");
  }
  const Stage& s = stages[static_cast<std::size_t>(t)];
  if (eta.size() != s.gain.cols()) {
    throw InvalidInputError("controller: history has wrong length at stage " +
                            std::to_string(t));
  }
  return s.gain * eta + s.offset;
}

void SynthesisProblem::validate() const {
  plant.validate();
  if (coupling.stateDim() != plant.stateDim()) {
    throw InvalidInputError("synthesis: coupling state dimension mismatch");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInputError("synthesis: lambda must be >= 0");
  }
  const Eigen::Index m = plant.inputDim();
  if (effortCost.rows() != m || effortCost.cols() != m) {
    throw InvalidInputError("synthesis: effort cost must be m x m");
  }
  requireFinite(effortCost, "effort cost");
  const double scale = std::max(1.0, effortCost.cwiseAbs().maxCoeff());
  if (symmetryError(effortCost) > 1e-10 * scale) {
    throw InvalidInputError("synthesis: effort cost must be symmetric");
  }
  Eigen::LLT<Matrix> llt(effortCost);
  if (llt.info() != Eigen::Success) {
    throw InvalidInputError("synthesis: effort cost must be positive definite");
  }
  if (moments.mean.size() != plant.stateDim()) {
    throw InvalidInputError("synthesis: noise moments dimension mismatch");
  }
  if (moments.q00Used.rows() != plant.stateDim() ||
      moments.q00Used.cols() != plant.stateDim() ||
      !(moments.q00Used.array() == coupling.block(0, 0).array()).all()) {
    throw InvalidInputError(
        "synthesis: noise moments were computed against a different "
        "newest-state block");
  }
}

SynthesisResult synthesize(const SynthesisProblem& problem) {
  problem.validate();
  const int n_stages = problem.plant.horizon;
  const int k = problem.coupling.memory();

  SynthesisResult out;
  out.system = AugmentedSystem::build(problem.plant, k);
  out.penalties.reserve(n_stages + 1);
  for (int t = 0; t <= n_stages; ++t) {
    out.penalties.push_back(
        stagePenalty(problem.coupling, t, problem.lambda, problem.moments));
  }

  RiccatiSolution& sol = out.solution;
  sol.p.resize(n_stages + 1);
  sol.q.resize(n_stages + 1);
  sol.r.resize(n_stages + 1);
  sol.gain.resize(n_stages);
  sol.offset.resize(n_stages);
  sol.dims.resize(n_stages + 1);
  for (int t = 0; t <= n_stages; ++t) sol.dims[t] = out.system.dim(t);

  sol.p[n_stages] = out.penalties[n_stages].inflatedCost;
  sol.q[n_stages] = problem.lambda * out.penalties[n_stages].riskLinear;
  sol.r[n_stages] = 0.0;

  const Vector& wbar = problem.moments.mean;
  const Matrix& sigma = problem.moments.centralCov;

  for (int t = n_stages - 1; t >= 0; --t) {
    const Matrix& at = out.system.aTilde(t);
    const Matrix& bt = out.system.bTilde(t);
    const Matrix& ct = out.system.cTilde(t);
    const Matrix& pNext = sol.p[t + 1];
    const Vector& qNext = sol.q[t + 1];

    const Matrix pb = pNext * bt;                       // n_{t+1} x m
    const Matrix g = symmetrize(bt.transpose() * pb + problem.effortCost);
    const Matrix pa = pNext * at;                       // n_{t+1} x nt
    const Vector pw = pNext * (ct * wbar);              // n_{t+1}

    sol.gain[t] = -solveSpd(g, bt.transpose() * pa, t);
    sol.offset[t] =
        -0.5 * solveSpd(g, bt.transpose() * (qNext + 2.0 * pw), t);

    Matrix pRaw = out.penalties[t].inflatedCost + at.transpose() * pa +
                  (at.transpose() * pb) * sol.gain[t];
    const double scale = std::max(1.0, pRaw.cwiseAbs().maxCoeff());
    if (symmetryError(pRaw) > 1e-9 * scale) {
      throw NumericalError("riccati recursion lost symmetry at stage " +
                           std::to_string(t));
    }
    sol.p[t] = symmetrize(pRaw);
    if (!isPsd(sol.p[t])) {
      throw NumericalError("riccati recursion lost positive semidefiniteness "
                           "at stage " + std::to_string(t));
    }

    sol.q[t] = problem.lambda * out.penalties[t].riskLinear +
               (at + bt * sol.gain[t]).transpose() * (qNext + 2.0 * pw);
    sol.r[t] = sol.r[t + 1] +
               ((sigma + wbar * wbar.transpose()) *
                (ct.transpose() * pNext * ct)).trace() +
               qNext.dot(ct * wbar) - sol.offset[t].dot(g * sol.offset[t]);
  }

  out.controller.stages.reserve(n_stages);
  for (int t = 0; t < n_stages; ++t) {
    out.controller.stages.push_back({sol.gain[t], sol.offset[t]});
  }
  return out;
}

double value(const RiccatiSolution& solution,
             const Eigen::Ref<const Vector>& x0) {
  if (solution.p.empty()) {
    throw InvalidInputError("value: empty solution");
  }
  if (x0.size() != solution.dims[0]) {
    throw InvalidInputError("value: x0 has wrong dimension");
  }
  return x0.dot(solution.p[0] * x0) + solution.q[0].dot(x0) + solution.r[0];
}

double qFunction(const SynthesisResult& result, const SynthesisProblem& problem,
                 int t, const Eigen::Ref<const Vector>& eta,
                 const Eigen::Ref<const Vector>& u) {
  const int n_stages = problem.plant.horizon;
  if (t < 0 || t >= n_stages) {
    throw InvalidInputError("q function: stage out of range");
  }
  if (eta.size() != result.system.dim(t)) {
    throw InvalidInputError("q function: history has wrong length");
  }
  if (u.size() != problem.plant.inputDim()) {
    throw InvalidInputError("q function: control has wrong dimension");
  }
  const StagePenalty& pen = result.penalties[static_cast<std::size_t>(t)];
  const double stageCost = eta.dot(pen.inflatedCost * eta) +
                           problem.lambda * pen.riskLinear.dot(eta) +
                           u.dot(problem.effortCost * u);

  const Matrix& ct = result.system.cTilde(t);
  const Matrix& pNext = result.solution.p[static_cast<std::size_t>(t) + 1];
  const Vector fbar = result.system.aTilde(t) * eta +
                      result.system.bTilde(t) * u +
                      ct * problem.moments.mean;
  const double expectedToGo =
      fbar.dot(pNext * fbar) +
      (ct.transpose() * pNext * ct * problem.moments.centralCov).trace() +
      result.solution.q[static_cast<std::size_t>(t) + 1].dot(fbar) +
      result.solution.r[static_cast<std::size_t>(t) + 1];
  return stageCost + expectedToGo;
}

double objectiveOffset(const SynthesisProblem& problem) {
  problem.validate();
  const Matrix& q00 = problem.coupling.block(0, 0);
  const Vector& x0 = problem.plant.x0;
  const Vector qx0 = q00 * x0;
  const double quad = 4.0 * qx0.dot(problem.moments.centralCov * qx0);
  const double lin = 4.0 * problem.moments.gamma.dot(qx0);
  return problem.lambda *
         (problem.plant.horizon * problem.moments.vartheta - quad - lin);
}

}  // namespace tclqr
