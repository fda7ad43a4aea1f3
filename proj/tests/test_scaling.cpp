#include <catch2/catch_amalgamated.hpp>

#include "exc/path.hpp"
#include "exc/scaling.hpp"

using namespace exc;

static CadlagPath sample_path() {
  return CadlagPath::make(
      {
          {0.0, Vec::scalar(0.0), SegmentMode::Linear},
          {1.0, Vec::scalar(2.0), SegmentMode::ConstantRight},
          {3.0, Vec::scalar(0.5), SegmentMode::Linear},
          {4.0, Vec::scalar(0.0), SegmentMode::ConstantRight},
      },
      4.0);
}

TEST_CASE("scheme validation") {
  ScalingScheme s;
  CHECK_NOTHROW(s.validate());
  CHECK(s.gamma_vanishing() == 0.5);
  CHECK_THROWS_AS(s.gamma_dominant(), std::logic_error);
  s.beta = 0.25;
  CHECK(s.gamma_dominant() == 0.125);
  s.c = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("space-time scaling acts on knots") {
  auto p = sample_path();
  auto q = apply_psi(2.0, 1.0, 1, p);  // halve time, halve values
  CHECK(q.lifetime() == 2.0);
  REQUIRE(q.knots().size() == 4);
  CHECK(q.knots()[1].t == 0.5);
  CHECK(q.knots()[1].value[0] == 1.0);
  CHECK(q.knots()[1].mode == SegmentMode::ConstantRight);

  CHECK(apply_psi(2.0, 0.5, 0, p).lifetime() == p.lifetime());
  CHECK_THROWS_AS(apply_psi(2.0, 0.5, -1, p), std::invalid_argument);
}

TEST_CASE("scaling semigroup in the iteration count") {
  auto p = sample_path();
  auto twice = apply_psi(2.0, 0.5, 1, apply_psi(2.0, 0.5, 1, p));
  auto once = apply_psi(2.0, 0.5, 2, p);
  REQUIRE(twice.knots().size() == once.knots().size());
  for (size_t k = 0; k < once.knots().size(); ++k) {
    CHECK(twice.knots()[k].t == Catch::Approx(once.knots()[k].t).margin(1e-15));
    CHECK(twice.knots()[k].value[0] ==
          Catch::Approx(once.knots()[k].value[0]).margin(1e-15));
  }
}

TEST_CASE("sup norm and hitting times transform with the path") {
  auto p = sample_path();
  const double c = 2.0, gamma = 0.5;
  for (int n : {1, 2, 3}) {
    auto q = apply_psi(c, gamma, n, p);
    const double vm = std::pow(c, -gamma * n);
    const double tm = std::pow(c, -n);
    CHECK(sup_norm(q) == Catch::Approx(vm * sup_norm(p)).epsilon(1e-12));
    CHECK(hitting_time(q, Vec::scalar(vm * 2.0)) ==
          Catch::Approx(tm * hitting_time(p, Vec::scalar(2.0))).epsilon(1e-12));
    CHECK(first_zero(q) == Catch::Approx(tm * first_zero(p)).epsilon(1e-12));
  }
}

TEST_CASE("time-only scaling squeezes time and keeps shape in the other axis") {
  auto p = sample_path();
  auto q = apply_psi_hat(2.0, 0.5, 2, p);
  // gamma*n = 1, so time shrinks by c and values by c^2
  CHECK(q.lifetime() == 2.0);
  CHECK(q.knots()[1].value[0] == 0.5);
  CHECK(q.knots()[1].t == 0.5);
}

TEST_CASE("powers of two scale without rounding") {
  auto p = sample_path();
  auto q = apply_psi(2.0, 1.0, 3, p);  // both multipliers are 1/8
  auto r = apply_psi(2.0, 1.0, 3, q);
  CHECK(q.knots()[2].t == 0.375);
  CHECK(q.knots()[2].value[0] == 0.0625);
  CHECK(r.knots()[2].t == 0.046875);
}
