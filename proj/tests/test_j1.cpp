#include <catch2/catch_amalgamated.hpp>

#include "exc/j1.hpp"

using namespace exc;

static CadlagPath unit_step(double at, double level, double life) {
  return CadlagPath::make(
      {
          {0.0, Vec::scalar(0.0), SegmentMode::ConstantRight},
          {at, Vec::scalar(level), SegmentMode::ConstantRight},
      },
      life);
}

TEST_CASE("matching a nearby jump costs the time deviation") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.1, 1.0, 5.0);
  auto r = j1_distance(a, b, 2.0);
  CHECK(r.distance == Catch::Approx(0.1).margin(1e-12));
  CHECK(r.witness(1.0) == Catch::Approx(1.1).margin(1e-12));
}

TEST_CASE("a value gap cannot be removed by any time change") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.0, 1.5, 5.0);
  auto r = j1_distance(a, b, 2.0);
  CHECK(r.distance == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("distance to itself is exactly zero") {
  auto a = CadlagPath::make(
      {
          {0.0, Vec::scalar(0.3), SegmentMode::Linear},
          {0.7, Vec::scalar(1.1), SegmentMode::ConstantRight},
          {1.9, Vec::scalar(0.2), SegmentMode::Linear},
          {2.5, Vec::scalar(0.0), SegmentMode::ConstantRight},
      },
      2.5);
  CHECK(j1_distance(a, a, 3.0).distance == 0.0);
  CHECK(j1_distance(a, a, 1.3).distance == 0.0);
}

TEST_CASE("never worse than the uniform distance") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.3, 2.0, 5.0);
  auto u = uniform_distance(a, b, 2.0);
  auto r = j1_distance(a, b, 2.0);
  CHECK(r.distance <= u + 1e-12);
  CHECK(r.distance >= 1.0 - 1e-12);  // value gap survives
}

TEST_CASE("death times are matchable events") {
  auto a = unit_step(0.5, 1.0, 1.0);
  auto b = unit_step(0.5, 1.0, 1.2);
  auto r = j1_distance(a, b, 2.0);
  CHECK(r.distance == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("zero path against a step keeps the full gap") {
  auto o = CadlagPath::zero(1);
  CHECK(j1_distance(o, o, 1.0).distance == 0.0);
  auto b = unit_step(0.5, 1.0, 1.0);
  CHECK(j1_distance(o, b, 1.0).distance == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("symmetry within tolerance") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.15, 0.9, 5.0);
  auto dab = j1_distance(a, b, 2.0).distance;
  auto dba = j1_distance(b, a, 2.0).distance;
  CHECK(dab == Catch::Approx(dba).margin(1e-9));
}

TEST_CASE("witness certifies its own cost") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.1, 0.95, 5.0);
  auto r = j1_distance(a, b, 2.0);
  CHECK(timechange_cost(a, b, 2.0, r.witness) == Catch::Approx(r.distance).margin(1e-9));
}

TEST_CASE("composed witnesses make the triangle inequality checkable") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.1, 1.0, 5.0);
  auto c = unit_step(1.25, 1.05, 5.0);
  auto rab = j1_distance(a, b, 2.0);
  auto rbc = j1_distance(b, c, 2.0);
  auto rac = j1_distance(a, c, 2.0, {rbc.witness.after(rab.witness)});
  CHECK(rac.distance <= rab.distance + rbc.distance + 1e-9);
}

TEST_CASE("hints can only help") {
  auto a = unit_step(1.0, 1.0, 5.0);
  auto b = unit_step(1.4, 1.0, 5.0);
  auto hint = TimeChange::through({{0.0, 0.0}, {1.0, 1.4}, {2.0, 2.0}});
  auto with = j1_distance(a, b, 2.0, {hint});
  auto without = j1_distance(a, b, 2.0);
  CHECK(with.distance <= without.distance + 1e-12);
  CHECK(with.distance == Catch::Approx(0.4).margin(1e-12));
}
