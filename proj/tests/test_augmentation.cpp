#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tclqr/augmentation.hpp"
#include "tclqr/errors.hpp"

using tclqr::AugmentedSystem;
using tclqr::Matrix;
using tclqr::Vector;

TEST_SUITE("augmentation") {

TEST_CASE("plant validation") {
  tclqr::PlantModel p = testrig::pointMassPlant();
  CHECK_NOTHROW(p.validate());
  p.horizon = 0;
  CHECK_THROWS_AS(p.validate(), tclqr::InvalidInputError);
  p = testrig::pointMassPlant();
  p.x0 = Vector::Zero(3);
  CHECK_THROWS_AS(p.validate(), tclqr::InvalidInputError);
  p = testrig::pointMassPlant();
  p.b = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(p.validate(), tclqr::InvalidInputError);
}

TEST_CASE("memoryless system is the plant itself at every stage") {
  const tclqr::PlantModel plant = testrig::pointMassPlant();
  const AugmentedSystem sys = AugmentedSystem::build(plant, 0);
  for (int t : {0, 1, 50, 99}) {
    CHECK(testrig::maxAbsDiff(sys.aTilde(t), plant.a) == 0.0);
    CHECK(testrig::maxAbsDiff(sys.bTilde(t), plant.b) == 0.0);
    CHECK(testrig::maxAbsDiff(sys.cTilde(t), Matrix::Identity(4, 4)) == 0.0);
    CHECK(sys.dim(t) == 4);
  }
  const Vector eta = Vector{{1.0, 2.0, 3.0, 4.0}};
  const Vector u = Vector{{0.5, -0.5}};
  const Vector w = Vector{{0.0, 0.1, 0.0, -0.1}};
  CHECK((sys.step(0, eta, u, w) - (plant.a * eta + plant.b * u + w))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("scalar one-step memory stage map carries the newest state") {
  tclqr::PlantModel plant;
  plant.a = Matrix{{0.7}};
  plant.b = Matrix{{1.0}};
  plant.horizon = 5;
  plant.x0 = Vector{{1.0}};
  const AugmentedSystem sys = AugmentedSystem::build(plant, 1);
  // Filled window: new state on top, previous newest carried below.
  CHECK(testrig::maxAbsDiff(sys.aTilde(2), Matrix{{0.7, 0.0}, {1.0, 0.0}}) == 0.0);
  // Growing window at t = 0: history doubles in size.
  CHECK(testrig::maxAbsDiff(sys.aTilde(0), Matrix{{0.7}, {1.0}}) == 0.0);
  CHECK(testrig::maxAbsDiff(sys.bTilde(2), Matrix{{1.0}, {0.0}}) == 0.0);
  CHECK(testrig::maxAbsDiff(sys.cTilde(2), Matrix{{1.0}, {0.0}}) == 0.0);
}

TEST_CASE("two-step memory growing window keeps the whole history") {
  tclqr::PlantModel plant;
  plant.a = Matrix{{0.7}};
  plant.b = Matrix{{1.0}};
  plant.horizon = 6;
  plant.x0 = Vector{{1.0}};
  const AugmentedSystem sys = AugmentedSystem::build(plant, 2);
  CHECK(testrig::maxAbsDiff(sys.aTilde(0), Matrix{{0.7}, {1.0}}) == 0.0);
  CHECK(testrig::maxAbsDiff(sys.aTilde(1),
                            Matrix{{0.7, 0.0}, {1.0, 0.0}, {0.0, 1.0}}) == 0.0);
  // Filled window drops the oldest state.
  CHECK(testrig::maxAbsDiff(
            sys.aTilde(3),
            Matrix{{0.7, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}) == 0.0);
}

TEST_CASE("dimension schedule grows to the cap exactly at the memory length") {
  const AugmentedSystem sys =
      AugmentedSystem::build(testrig::pointMassPlant(), 3);
  Eigen::Index prev = 0;
  for (int t = 0; t <= 100; ++t) {
    CHECK(sys.dim(t) == 4 * (std::min(3, t) + 1));
    CHECK(sys.dim(t) >= prev);
    prev = sys.dim(t);
  }
  CHECK(sys.dim(3) == 16);
  CHECK(sys.dim(2) == 12);
  CHECK(sys.memoryAt(100) == 3);
  CHECK_THROWS_AS(sys.dim(101), tclqr::InvalidInputError);
  CHECK_THROWS_AS(AugmentedSystem::build(testrig::pointMassPlant(), -1),
                  tclqr::InvalidInputError);
}

TEST_CASE("shift consistency: trailing history equals leading history") {
  tclqr::RandomStream rs(555);
  const tclqr::PlantModel plant = testrig::pointMassPlant();
  const int k = 2;
  const AugmentedSystem sys = AugmentedSystem::build(plant, k);
  Vector eta = testrig::randomVector(rs, 4 * (k + 1));
  const Vector u = testrig::randomVector(rs, 2);
  const Vector w = testrig::randomVector(rs, 4);
  const Vector next = sys.step(5, eta, u, w);
  CHECK((next.segment(4, 4 * k) - eta.segment(0, 4 * k)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("history rollout equals stacking the flat plant exactly") {
  tclqr::RandomStream rs(777);
  const tclqr::PlantModel plant = testrig::pointMassPlant();
  for (int k : {0, 1, 2, 5}) {
    const AugmentedSystem sys = AugmentedSystem::build(plant, k);
    std::vector<Vector> xs = {plant.x0};
    Vector eta = tclqr::initialEta(plant);
    for (int t = 0; t < 100; ++t) {
      const Vector u = testrig::randomVector(rs, 2);
      const Vector w = testrig::randomVector(rs, 4);
      // Flat recursion.
      xs.push_back(plant.a * xs.back() + plant.b * u + w);
      // History recursion.
      eta = sys.step(t, eta, u, w);
      REQUIRE(eta.size() == sys.dim(t + 1));
      // The stacked vector is exactly the last min(k,t+1)+1 states, newest first.
      const int kt = std::min(k, t + 1);
      for (int i = 0; i <= kt; ++i) {
        const Vector& want = xs[static_cast<std::size_t>(t + 1 - i)];
        CHECK((eta.segment(4 * i, 4) - want).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("initial history is the bare initial state") {
  const tclqr::PlantModel plant = testrig::pointMassPlant();
  const Vector eta0 = tclqr::initialEta(plant);
  CHECK(eta0.size() == 4);
  CHECK((eta0 - plant.x0).cwiseAbs().maxCoeff() == 0.0);
  tclqr::PlantModel zero = plant;
  zero.x0 = Vector::Zero(4);
  CHECK(tclqr::initialEta(zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("step validates dimensions") {
  const AugmentedSystem sys =
      AugmentedSystem::build(testrig::pointMassPlant(), 1);
  CHECK_THROWS_AS(
      sys.step(1, Vector::Zero(4), Vector::Zero(2), Vector::Zero(4)),
      tclqr::InvalidInputError);  // eta must be 8 wide at t = 1
  CHECK_THROWS_AS(
      sys.step(0, Vector::Zero(4), Vector::Zero(3), Vector::Zero(4)),
      tclqr::InvalidInputError);
}

}  // TEST_SUITE
