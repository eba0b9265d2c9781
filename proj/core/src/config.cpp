#include "tclqr/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tclqr/errors.hpp"

namespace tclqr {

namespace {

using nlohmann::json;

std::string joinPath(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path, msg);
}

const json& member(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(joinPath(path, key), "missing required field");
  return *it;
}

const json* optMember(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void checkKeys(const json& obj, const std::string& path,
               std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) fail(joinPath(path, it.key()), "unknown field");
  }
}

double asNumber(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int asInt(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t asU64(const json& j, const std::string& path) {
  if (!(j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0))) {
    fail(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

bool asBool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string asString(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vector asVector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        asNumber(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix asMatrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    fail(path, "expected a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rowPath = path + "[" + std::to_string(r) + "]";
    const json& row = j[r];
    if (!row.is_array() || row.empty()) fail(rowPath, "expected a row array");
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      fail(rowPath, "row length " + std::to_string(row.size()) +
                        " does not match " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          asNumber(row[c], rowPath + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

json matrixToJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vectorToJson(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// Scalar-spread convention: with "stddev" the cov entries of every Gaussian
// are diagonal standard deviations and get squared here; everything after
// parsing stores variances.
Matrix interpretCov(Matrix cov, bool stddev, const std::string& path) {
  if (!stddev) return cov;
  if (cov.rows() != cov.cols()) fail(path, "covariance must be square");
  for (Eigen::Index r = 0; r < cov.rows(); ++r) {
    for (Eigen::Index c = 0; c < cov.cols(); ++c) {
      if (r != c && cov(r, c) != 0.0) {
        fail(path,
             "param \"stddev\" requires a diagonal covariance (off-diagonal "
             "scales are ambiguous)");
      }
    }
  }
  cov.diagonal() = cov.diagonal().cwiseAbs2();
  return cov;
}

GaussianSpec parseGaussianSpec(const json& j, const std::string& path,
                               bool stddev) {
  checkKeys(j, path, {"mean", "cov"});
  GaussianSpec g;
  g.mean = asVector(member(j, path, "mean"), joinPath(path, "mean"));
  g.cov = interpretCov(asMatrix(member(j, path, "cov"), joinPath(path, "cov")),
                       stddev, joinPath(path, "cov"));
  return g;
}

NoiseModel parseModel(const json& j, const std::string& path, bool stddev) {
  const std::string type = asString(member(j, path, "type"), joinPath(path, "type"));
  try {
    if (type == "gaussian") {
      checkKeys(j, path, {"type", "mean", "cov"});
      GaussianSpec g;
      g.mean = asVector(member(j, path, "mean"), joinPath(path, "mean"));
      g.cov = interpretCov(
          asMatrix(member(j, path, "cov"), joinPath(path, "cov")), stddev,
          joinPath(path, "cov"));
      return NoiseModel::gaussian(std::move(g.mean), std::move(g.cov));
    }
    if (type == "gaussian_mixture") {
      checkKeys(j, path, {"type", "weights", "components"});
      const json& wj = member(j, path, "weights");
      if (!wj.is_array()) fail(joinPath(path, "weights"), "expected an array");
      std::vector<double> weights;
      for (std::size_t i = 0; i < wj.size(); ++i) {
        weights.push_back(asNumber(
            wj[i], joinPath(path, "weights") + "[" + std::to_string(i) + "]"));
      }
      const json& cj = member(j, path, "components");
      if (!cj.is_array()) fail(joinPath(path, "components"), "expected an array");
      std::vector<GaussianSpec> comps;
      for (std::size_t i = 0; i < cj.size(); ++i) {
        comps.push_back(parseGaussianSpec(
            cj[i], joinPath(path, "components") + "[" + std::to_string(i) + "]",
            stddev));
      }
      return NoiseModel::mixture(std::move(weights), std::move(comps));
    }
    if (type == "linear_pushforward") {
      checkKeys(j, path, {"type", "map", "inner"});
      Matrix map = asMatrix(member(j, path, "map"), joinPath(path, "map"));
      NoiseModel inner =
          parseModel(member(j, path, "inner"), joinPath(path, "inner"), stddev);
      return NoiseModel::pushforward(std::move(map), std::move(inner));
    }
    if (type == "empirical") {
      checkKeys(j, path, {"type", "samples"});
      const json& sj = member(j, path, "samples");
      if (!sj.is_array()) fail(joinPath(path, "samples"), "expected an array");
      std::vector<Vector> samples;
      for (std::size_t i = 0; i < sj.size(); ++i) {
        samples.push_back(asVector(
            sj[i], joinPath(path, "samples") + "[" + std::to_string(i) + "]"));
      }
      return NoiseModel::empirical(std::move(samples));
    }
  } catch (const InvalidInputError& e) {
    fail(path, e.what());
  }
  fail(joinPath(path, "type"), "unknown noise model type \"" + type + "\"");
}

json modelToJson(const NoiseModel& model) {
  json out;
  switch (model.kind()) {
    case NoiseModel::Kind::Gaussian: {
      const auto& g = model.mixtureComponents().front();
      out["type"] = "gaussian";
      out["mean"] = vectorToJson(g.mean);
      out["cov"] = matrixToJson(g.cov);
      return out;
    }
    case NoiseModel::Kind::Mixture: {
      out["type"] = "gaussian_mixture";
      out["weights"] = model.mixtureWeights();
      json comps = json::array();
      for (const auto& c : model.mixtureComponents()) {
        json cj;
        cj["mean"] = vectorToJson(c.mean);
        cj["cov"] = matrixToJson(c.cov);
        comps.push_back(std::move(cj));
      }
      out["components"] = std::move(comps);
      return out;
    }
    case NoiseModel::Kind::Pushforward:
      out["type"] = "linear_pushforward";
      out["map"] = matrixToJson(model.pushforwardMap());
      out["inner"] = modelToJson(model.pushforwardInner());
      return out;
    case NoiseModel::Kind::Empirical: {
      out["type"] = "empirical";
      json samples = json::array();
      for (const auto& s : model.samples()) samples.push_back(vectorToJson(s));
      out["samples"] = std::move(samples);
      return out;
    }
  }
  throw NumericalError("noise model: corrupt kind");
}

std::vector<int> asIndexList(const json& j, const std::string& path,
                             Eigen::Index stateDim) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const int idx = asInt(j[i], p);
    if (idx < 1 || idx > stateDim) {
      fail(p, "index must be in 1.." + std::to_string(stateDim));
    }
    out.push_back(idx);
  }
  return out;
}

ExperimentConfig parseExperiment(const json& root, const std::string& path) {
  checkKeys(root, path,
            {"schema", "plant", "coupling", "lambda", "R", "noise", "ensemble",
             "metrics", "output"});
  if (asInt(member(root, path, "schema"), joinPath(path, "schema")) != 1) {
    fail(joinPath(path, "schema"), "unsupported schema version (want 1)");
  }

  ExperimentConfig cfg;

  {
    const std::string p = joinPath(path, "plant");
    const json& plant = member(root, path, "plant");
    checkKeys(plant, p, {"A", "B", "N", "x0"});
    cfg.plant.a = asMatrix(member(plant, p, "A"), joinPath(p, "A"));
    cfg.plant.b = asMatrix(member(plant, p, "B"), joinPath(p, "B"));
    cfg.plant.horizon = asInt(member(plant, p, "N"), joinPath(p, "N"));
    cfg.plant.x0 = asVector(member(plant, p, "x0"), joinPath(p, "x0"));
    try {
      cfg.plant.validate();
    } catch (const InvalidInputError& e) {
      fail(p, e.what());
    }
  }

  {
    const std::string p = joinPath(path, "coupling");
    const json& coupling = member(root, path, "coupling");
    const std::string mode =
        asString(member(coupling, p, "mode"), joinPath(p, "mode"));
    if (mode == "difference") {
      checkKeys(coupling, p, {"mode", "Q", "beta", "k"});
      cfg.coupling.mode = CouplingMode::Difference;
      cfg.coupling.q = asMatrix(member(coupling, p, "Q"), joinPath(p, "Q"));
      cfg.coupling.beta =
          asNumber(member(coupling, p, "beta"), joinPath(p, "beta"));
      cfg.coupling.k = asInt(member(coupling, p, "k"), joinPath(p, "k"));
    } else if (mode == "one_step") {
      checkKeys(coupling, p, {"mode", "Q", "Qbar"});
      cfg.coupling.mode = CouplingMode::OneStep;
      cfg.coupling.q = asMatrix(member(coupling, p, "Q"), joinPath(p, "Q"));
      cfg.coupling.qbar =
          asMatrix(member(coupling, p, "Qbar"), joinPath(p, "Qbar"));
      cfg.coupling.k = 1;
    } else if (mode == "general") {
      checkKeys(coupling, p, {"mode", "blocks"});
      cfg.coupling.mode = CouplingMode::General;
      const json& bj = member(coupling, p, "blocks");
      if (!bj.is_array() || bj.empty()) {
        fail(joinPath(p, "blocks"), "expected a non-empty array of block rows");
      }
      for (std::size_t r = 0; r < bj.size(); ++r) {
        const std::string rp =
            joinPath(p, "blocks") + "[" + std::to_string(r) + "]";
        if (!bj[r].is_array() || bj[r].empty()) {
          fail(rp, "expected a row of blocks");
        }
        std::vector<Matrix> row;
        for (std::size_t c = 0; c < bj[r].size(); ++c) {
          row.push_back(asMatrix(bj[r][c], rp + "[" + std::to_string(c) + "]"));
        }
        cfg.coupling.blocks.push_back(std::move(row));
      }
      cfg.coupling.k = static_cast<int>(bj.size()) - 1;
    } else {
      fail(joinPath(p, "mode"),
           "unknown coupling mode \"" + mode +
               "\" (want difference, one_step or general)");
    }
    Eigen::Index couplingDim = 0;
    try {
      couplingDim = buildCoupling(cfg.coupling).stateDim();
    } catch (const InvalidInputError& e) {
      fail(p, e.what());
    }
    if (couplingDim != cfg.plant.stateDim()) {
      fail(p, "coupling state dimension does not match the plant");
    }
  }

  cfg.lambda = asNumber(member(root, path, "lambda"), joinPath(path, "lambda"));
  if (!(cfg.lambda >= 0.0)) {
    fail(joinPath(path, "lambda"), "must be >= 0");
  }

  cfg.effortCost = asMatrix(member(root, path, "R"), joinPath(path, "R"));
  if (cfg.effortCost.rows() != cfg.plant.inputDim() ||
      cfg.effortCost.cols() != cfg.plant.inputDim()) {
    fail(joinPath(path, "R"), "must be m x m for the plant's input dimension");
  }

  {
    const std::string p = joinPath(path, "noise");
    const json& noise = member(root, path, "noise");
    checkKeys(noise, p, {"model", "param", "moments"});
    if (const json* pj = optMember(noise, p, "param")) {
      cfg.noise.param = asString(*pj, joinPath(p, "param"));
      if (cfg.noise.param != "variance" && cfg.noise.param != "stddev") {
        fail(joinPath(p, "param"), "must be \"variance\" or \"stddev\"");
      }
    }
    cfg.noise.model = parseModel(member(noise, p, "model"), joinPath(p, "model"),
                                 cfg.noise.param == "stddev");
    if (cfg.noise.model->dim() != cfg.plant.stateDim()) {
      fail(joinPath(p, "model"), "noise dimension must match the plant state");
    }
    cfg.noise.moments.analytic = cfg.noise.model->analyticSupported();
    if (const json* mj = optMember(noise, p, "moments")) {
      const std::string mp = joinPath(p, "moments");
      if (mj->is_string()) {
        if (asString(*mj, mp) != "analytic") {
          fail(mp, "expected \"analytic\" or a monte_carlo object");
        }
        cfg.noise.moments.analytic = true;
      } else {
        checkKeys(*mj, mp, {"method", "samples", "seed"});
        if (asString(member(*mj, mp, "method"), joinPath(mp, "method")) !=
            "monte_carlo") {
          fail(joinPath(mp, "method"), "expected \"monte_carlo\"");
        }
        cfg.noise.moments.analytic = false;
        if (const json* sj = optMember(*mj, mp, "samples")) {
          const auto samples = asU64(*sj, joinPath(mp, "samples"));
          if (samples == 0) fail(joinPath(mp, "samples"), "must be >= 1");
          cfg.noise.moments.samples = static_cast<std::size_t>(samples);
        }
        if (const json* sj = optMember(*mj, mp, "seed")) {
          cfg.noise.moments.seed = asU64(*sj, joinPath(mp, "seed"));
        }
      }
    }
    if (cfg.noise.moments.analytic && !cfg.noise.model->analyticSupported()) {
      fail(joinPath(p, "moments"),
           "analytic moments are unsupported for empirical noise; use "
           "monte_carlo");
    }
  }

  {
    const std::string p = joinPath(path, "ensemble");
    const json& ens = member(root, path, "ensemble");
    checkKeys(ens, p, {"n_trials", "master_seed"});
    const auto trials =
        asU64(member(ens, p, "n_trials"), joinPath(p, "n_trials"));
    if (trials == 0) fail(joinPath(p, "n_trials"), "must be >= 1");
    cfg.ensemble.nTrials = static_cast<std::size_t>(trials);
    cfg.ensemble.masterSeed =
        asU64(member(ens, p, "master_seed"), joinPath(p, "master_seed"));
  }

  {
    const std::string p = joinPath(path, "metrics");
    const json& met = member(root, path, "metrics");
    checkKeys(met, p, {"position_indices", "interval_indices", "coverage"});
    cfg.metrics.positionIndices =
        asIndexList(member(met, p, "position_indices"),
                    joinPath(p, "position_indices"), cfg.plant.stateDim());
    cfg.metrics.intervalIndices =
        asIndexList(member(met, p, "interval_indices"),
                    joinPath(p, "interval_indices"), cfg.plant.stateDim());
    if (const json* cj = optMember(met, p, "coverage")) {
      cfg.metrics.coverage = asNumber(*cj, joinPath(p, "coverage"));
      if (!(cfg.metrics.coverage > 0.0) || cfg.metrics.coverage > 1.0) {
        fail(joinPath(p, "coverage"), "must be in (0, 1]");
      }
    }
  }

  if (const json* oj = optMember(root, path, "output")) {
    const std::string p = joinPath(path, "output");
    checkKeys(*oj, p, {"format", "per_trial"});
    if (const json* fj = optMember(*oj, p, "format")) {
      cfg.output.format = asString(*fj, joinPath(p, "format"));
      if (cfg.output.format != "csv" && cfg.output.format != "json") {
        fail(joinPath(p, "format"), "must be \"csv\" or \"json\"");
      }
    }
    if (const json* tj = optMember(*oj, p, "per_trial")) {
      cfg.output.perTrial = asBool(*tj, joinPath(p, "per_trial"));
    }
  }

  return cfg;
}

json parseText(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) {
    throw ConfigError("", "not valid JSON");
  }
  return root;
}

}  // namespace

ExperimentConfig parseExperimentConfig(const std::string& jsonText) {
  return parseExperiment(parseText(jsonText), "");
}

ExperimentConfig loadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parseExperimentConfig(ss.str());
}

std::string dumpExperimentConfig(const ExperimentConfig& config) {
  json root;
  root["schema"] = 1;
  root["plant"]["A"] = matrixToJson(config.plant.a);
  root["plant"]["B"] = matrixToJson(config.plant.b);
  root["plant"]["N"] = config.plant.horizon;
  root["plant"]["x0"] = vectorToJson(config.plant.x0);
  json& cj = root["coupling"];
  switch (config.coupling.mode) {
    case CouplingMode::Difference:
      cj["mode"] = "difference";
      cj["Q"] = matrixToJson(config.coupling.q);
      cj["beta"] = config.coupling.beta;
      cj["k"] = config.coupling.k;
      break;
    case CouplingMode::OneStep:
      cj["mode"] = "one_step";
      cj["Q"] = matrixToJson(config.coupling.q);
      cj["Qbar"] = matrixToJson(config.coupling.qbar);
      break;
    case CouplingMode::General: {
      cj["mode"] = "general";
      json rows = json::array();
      for (const auto& row : config.coupling.blocks) {
        json r = json::array();
        for (const auto& b : row) r.push_back(matrixToJson(b));
        rows.push_back(std::move(r));
      }
      cj["blocks"] = std::move(rows);
      break;
    }
  }
  root["lambda"] = config.lambda;
  root["R"] = matrixToJson(config.effortCost);
  root["noise"]["model"] = modelToJson(config.noise.model.value());
  root["noise"]["param"] = "variance";  // internal storage is variances
  if (config.noise.moments.analytic) {
    root["noise"]["moments"] = "analytic";
  } else {
    root["noise"]["moments"] = {{"method", "monte_carlo"},
                                {"samples", config.noise.moments.samples},
                                {"seed", config.noise.moments.seed}};
  }
  root["ensemble"]["n_trials"] = config.ensemble.nTrials;
  root["ensemble"]["master_seed"] = config.ensemble.masterSeed;
  root["metrics"]["position_indices"] = config.metrics.positionIndices;
  root["metrics"]["interval_indices"] = config.metrics.intervalIndices;
  root["metrics"]["coverage"] = config.metrics.coverage;
  root["output"]["format"] = config.output.format;
  root["output"]["per_trial"] = config.output.perTrial;
  return root.dump(2) + "\n";
}

CouplingSpec buildCoupling(const CouplingConfig& config) {
  switch (config.mode) {
    case CouplingMode::Difference:
      return CouplingSpec::differencePenalty(config.q, config.beta, config.k);
    case CouplingMode::OneStep:
      return CouplingSpec::oneStep(config.q, config.qbar);
    case CouplingMode::General:
      return CouplingSpec::general(config.blocks);
  }
  throw NumericalError("coupling config: corrupt mode");
}

NoiseMoments computeMoments(const ExperimentConfig& config) {
  const CouplingSpec spec = buildCoupling(config.coupling);
  const Matrix& q00 = spec.block(0, 0);
  const NoiseModel& model = config.noise.model.value();
  if (config.noise.moments.analytic) {
    return analyticMoments(model, q00);
  }
  return monteCarloMoments(model, q00, config.noise.moments.samples,
                           config.noise.moments.seed);
}

SynthesisProblem toProblem(const ExperimentConfig& config,
                           const NoiseMoments& moments) {
  SynthesisProblem problem;
  problem.plant = config.plant;
  problem.coupling = buildCoupling(config.coupling);
  problem.lambda = config.lambda;
  problem.effortCost = config.effortCost;
  problem.moments = moments;
  try {
    problem.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError("", e.what());
  }
  return problem;
}

EnsembleConfig toEnsemble(const ExperimentConfig& config,
                          const NoiseMoments& moments, Controller controller,
                          std::optional<std::size_t> trialsOverride,
                          std::optional<std::uint64_t> seedOverride,
                          int threads) {
  EnsembleConfig ens;
  ens.plant = config.plant;
  ens.coupling = buildCoupling(config.coupling);
  ens.effortCost = config.effortCost;
  ens.lambda = config.lambda;
  ens.noise = config.noise.model.value();
  ens.moments = moments;
  ens.controller = std::move(controller);
  ens.nTrials = trialsOverride.value_or(config.ensemble.nTrials);
  ens.masterSeed = seedOverride.value_or(config.ensemble.masterSeed);
  ens.threads = threads;
  return ens;
}

SweepConfig parseSweepConfig(const std::string& jsonText) {
  const json root = parseText(jsonText);
  checkKeys(root, "", {"schema", "base", "points", "grid"});
  if (asInt(member(root, "", "schema"), "schema") != 1) {
    fail("schema", "unsupported schema version (want 1)");
  }
  SweepConfig sweep;
  sweep.base = parseExperiment(member(root, "", "base"), "base");
  if (sweep.base.coupling.mode != CouplingMode::Difference) {
    fail("base.coupling.mode", "sweeps require difference coupling");
  }

  const json* points = optMember(root, "", "points");
  const json* grid = optMember(root, "", "grid");
  if ((points == nullptr) == (grid == nullptr)) {
    fail("", "need exactly one of \"points\" or \"grid\"");
  }
  if (points != nullptr) {
    if (!points->is_array() || points->empty()) {
      fail("points", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < points->size(); ++i) {
      const std::string p = "points[" + std::to_string(i) + "]";
      const json& pj = (*points)[i];
      checkKeys(pj, p, {"beta", "k", "lambda"});
      SweepPoint pt;
      pt.beta = asNumber(member(pj, p, "beta"), joinPath(p, "beta"));
      pt.k = asInt(member(pj, p, "k"), joinPath(p, "k"));
      pt.lambda = asNumber(member(pj, p, "lambda"), joinPath(p, "lambda"));
      sweep.points.push_back(pt);
    }
  } else {
    checkKeys(*grid, "grid", {"beta", "k", "lambda"});
    auto axis = [&](const char* key) {
      const std::string p = joinPath("grid", key);
      const json& aj = member(*grid, "grid", key);
      if (!aj.is_array() || aj.empty()) fail(p, "expected a non-empty array");
      std::vector<double> out;
      for (std::size_t i = 0; i < aj.size(); ++i) {
        out.push_back(asNumber(aj[i], p + "[" + std::to_string(i) + "]"));
      }
      return out;
    };
    const auto betas = axis("beta");
    const auto ks = axis("k");
    const auto lambdas = axis("lambda");
    for (double b : betas) {
      for (double kv : ks) {
        const int k = static_cast<int>(kv);
        if (kv != k) fail("grid.k", "k values must be integers");
        for (double l : lambdas) {
          sweep.points.push_back({b, k, l});
        }
      }
    }
  }
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& pt = sweep.points[i];
    if (!(pt.beta >= 0.0) || pt.k < 0 || !(pt.lambda >= 0.0)) {
      fail("points[" + std::to_string(i) + "]",
           "beta, k and lambda must be nonnegative");
    }
  }
  return sweep;
}

SweepConfig loadSweepConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open sweep file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parseSweepConfig(ss.str());
}

ExperimentConfig applySweepPoint(const ExperimentConfig& base,
                                 const SweepPoint& point) {
  if (base.coupling.mode != CouplingMode::Difference) {
    throw ConfigError("coupling.mode", "sweeps require difference coupling");
  }
  ExperimentConfig out = base;
  out.coupling.beta = point.beta;
  out.coupling.k = point.k;
  out.lambda = point.lambda;
  return out;
}

std::string controllerArtifactToJson(const SynthesisResult& result,
                                     double valueAtX0, double offset) {
  const RiccatiSolution& sol = result.solution;
  json root;
  root["schema"] = 1;
  root["horizon"] = static_cast<int>(sol.gain.size());
  root["state_dim"] = result.system.stateDim();
  root["input_dim"] = result.system.inputDim();
  root["memory"] = result.system.memory();
  root["value_J0"] = valueAtX0;
  root["objective_offset"] = offset;
  json dims = json::array();
  for (auto d : sol.dims) dims.push_back(d);
  root["dims"] = std::move(dims);

  json stages = json::array();
  for (std::size_t t = 0; t < sol.gain.size(); ++t) {
    json st;
    st["t"] = t;
    st["K"] = matrixToJson(sol.gain[t]);
    st["kappa"] = vectorToJson(sol.offset[t]);
    stages.push_back(std::move(st));
  }
  root["stages"] = std::move(stages);

  json riccati = json::array();
  for (std::size_t t = 0; t < sol.p.size(); ++t) {
    json st;
    st["t"] = t;
    st["P"] = matrixToJson(sol.p[t]);
    st["q"] = vectorToJson(sol.q[t]);
    st["r"] = sol.r[t];
    riccati.push_back(std::move(st));
  }
  root["riccati"] = std::move(riccati);
  return root.dump(2) + "\n";
}

Controller controllerFromArtifactJson(const std::string& jsonText) {
  const json root = parseText(jsonText);
  if (!root.is_object() || !root.contains("stages")) {
    throw ConfigError("stages", "missing controller stages");
  }
  const json& stages = root["stages"];
  if (!stages.is_array() || stages.empty()) {
    throw ConfigError("stages", "expected a non-empty array");
  }
  Controller ctrl;
  for (std::size_t t = 0; t < stages.size(); ++t) {
    const std::string p = "stages[" + std::to_string(t) + "]";
    const json& st = stages[t];
    Controller::Stage stage;
    stage.gain = asMatrix(member(st, p, "K"), joinPath(p, "K"));
    stage.offset = asVector(member(st, p, "kappa"), joinPath(p, "kappa"));
    if (stage.offset.size() != stage.gain.rows()) {
      fail(p, "K and kappa disagree on the input dimension");
    }
    ctrl.stages.push_back(std::move(stage));
  }
  return ctrl;
}

Controller loadControllerArtifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open controller file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return controllerFromArtifactJson(ss.str());
}

}  // namespace tclqr
