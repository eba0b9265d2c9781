#pragma once

#include <cstdint>
#include <random>

#include "tclqr/linalg.hpp"

namespace tclqr {

// splitmix64 step, the usual seed-spreading finalizer.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic substream seed for (master, stream).  Distinct streams from
// the same master are decorrelated; the map is fixed for the life of the
// file formats (reseeding would change every regression artifact).
std::uint64_t deriveStreamSeed(std::uint64_t master, std::uint64_t stream);

// One random stream.  All transforms are written out here rather than taken
// from <random> distributions so draws are identical across standard library
// implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t nextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair and keeps
  // no state between calls.
  void normalPair(double& z0, double& z1);

  // n independent standard normals (pairs generated in order, the trailing
  // half pair of an odd n is discarded).
  Vector normals(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
};

// Stream for trial `trial` of an ensemble keyed by `master`.
inline RandomStream trialStream(std::uint64_t master, std::uint64_t trial) {
  return RandomStream(deriveStreamSeed(master, trial));
}

}  // namespace tclqr
