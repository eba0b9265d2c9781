#include "tclqr/rng.hpp"

#include <cmath>
#include <numbers>

namespace tclqr {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t deriveStreamSeed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  std::uint64_t t = h ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
  return splitmix64(t);
}

void RandomStream::normalPair(double& z0, double& z1) {
  // 1 - u in (0, 1] keeps the log argument away from zero.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(a);
  z1 = r * std::sin(a);
}

Vector RandomStream::normals(Eigen::Index n) {
  Vector out(n);
  Eigen::Index i = 0;
  while (i + 1 < n) {
    normalPair(out[i], out[i + 1]);
    i += 2;
  }
  if (i < n) {
    double z0 = 0.0, z1 = 0.0;
    normalPair(z0, z1);
    out[i] = z0;
  }
  return out;
}

}  // namespace tclqr
