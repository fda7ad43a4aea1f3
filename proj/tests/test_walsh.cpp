#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "exc/piecing.hpp"
#include "exc/stats.hpp"
#include "exc/walsh.hpp"

using namespace exc;

namespace {

ExcursionMeasureSpec fast_ito() {
  ItoOptions opt;
  opt.shape_steps = 8;
  return ito_brownian_measure(1.0, opt);
}

CadlagPath scalar_step(double level, double until) {
  std::vector<Knot> ks{{0.0, Vec::scalar(level), SegmentMode::ConstantRight},
                       {until, Vec::scalar(0.0), SegmentMode::ConstantRight}};
  return CadlagPath::make(std::move(ks), until);
}

Disintegration equal_atom_disint(double w_east, double w_north, double atom_r) {
  PlanarJumpMeasure j;
  j.components.push_back({axis_ray(0, "east"), RadialMeasure::atomic({{atom_r, 1.0}}), w_east});
  j.components.push_back({axis_ray(1, "north"), RadialMeasure::atomic({{atom_r, 1.0}}), w_north});
  return disintegrate(j);
}

}  // namespace

TEST_CASE("ray embedding is exact on axis rays") {
  CHECK(embed_on_ray(CadlagPath::zero(1), Vec::planar(0.0, 1.0)).is_zero_path());

  auto step = scalar_step(1.0, 1.0);
  auto up = embed_on_ray(step, Vec::planar(0.0, 1.0));
  REQUIRE(up.dim() == 2);
  CHECK(up.knots()[0].value[0] == 0.0);
  CHECK(up.knots()[0].value[1] == 1.0);
  CHECK(up.knots()[1].value.is_zero());
  CHECK(up.lifetime() == 1.0);
  CHECK(sup_norm(up) == sup_norm(step));

  auto west = embed_on_ray(step, Vec::planar(-1.0, 0.0));
  CHECK(west.knots()[0].value[0] == -1.0);

  RayExcursion re{step, axis_ray(1, "north")};
  auto emb = re.embedded();
  for (size_t i = 0; i < emb.knots().size(); ++i) {
    CHECK(emb.knots()[i].value[0] == 0.0);
    CHECK(emb.knots()[i].value[1] == step.knots()[i].value[0]);
  }

  CHECK_THROWS_AS(embed_on_ray(step, Vec::planar(0.5, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(embed_on_ray(up, Vec::planar(0.0, 1.0)), std::invalid_argument);
  auto neg = CadlagPath::make({{0.0, Vec::scalar(-1.0), SegmentMode::ConstantRight},
                               {1.0, Vec::scalar(0.0), SegmentMode::ConstantRight}},
                              1.0);
  CHECK_THROWS_AS(embed_on_ray(neg, Vec::planar(1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("embedded excursion measure keeps scalar mass laws") {
  Rng rng = Rng::stream(3025, 1);
  auto base = fast_ito();
  auto spec = embed_spec_on_ray(base, axis_ray(1, "north"));
  CHECK(spec.label == "bessel_ray");
  CHECK(spec.dim == 2);
  CHECK(spec.tail_mass(0.01) == base.tail_mass(0.01));
  CHECK(spec.sup_tail_mass(2.0) == base.sup_tail_mass(2.0));
  for (int i = 0; i < 10; ++i) {
    auto p = spec.sample_big(0.01, rng);
    REQUIRE(p.dim() == 2);
    for (const Knot& k : p.knots()) {
      CHECK(k.value[0] == 0.0);
      CHECK(k.value[1] >= 0.0);
    }
  }
  auto hit = spec.sample_sup_big(1.0, rng);
  CHECK(sup_norm(hit) >= 1.0 - 1e-9);
}

TEST_CASE("ray map is scale invariant and exact on axes") {
  std::vector<Ray> rays{axis_ray(0, "east"), axis_ray(1, "north"), axis_ray(2, "west"),
                        axis_ray(3, "south")};
  CHECK(psi_ray_name(Vec::planar(3.0, 0.0), rays) == "east");
  CHECK(psi_ray_name(Vec::planar(0.0, -2.5), rays) == "south");
  for (int n = 0; n < 8; ++n) {
    double f = std::pow(2.0, -n);
    CHECK(psi_ray_name(Vec::planar(-0.7 * f, 0.0), rays) == "west");
  }
  CHECK_THROWS_AS(psi_ray_name(Vec::planar(0.0, 0.0), rays), std::invalid_argument);
  CHECK_THROWS_AS(psi_ray_name(Vec::planar(1.0, 1.0), rays), std::invalid_argument);
}

TEST_CASE("single-ray family reduces to the embedded scalar sampler knot for knot") {
  auto base = fast_ito();
  auto fam = walsh_jumpin_family({{axis_ray(1, "north"), 1.0}}, std::nullopt, 0.0, base,
                                 bm_stopped_law());
  Rng a = Rng::stream(3025, 2);
  Rng b = Rng::stream(3025, 2);
  for (int i = 0; i < 8; ++i) {
    auto [planar, mark] = fam.sample_big_marked(0.05, a);
    CHECK(mark == "north");
    auto scalar = base.sample_big(0.05, b);
    auto expect = embed_on_ray(scalar, Vec::planar(0.0, 1.0));
    REQUIRE(planar.knots().size() == expect.knots().size());
    for (size_t k = 0; k < planar.knots().size(); ++k) {
      CHECK(planar.knots()[k].t == expect.knots()[k].t);
      CHECK(planar.knots()[k].value[0] == expect.knots()[k].value[0]);
      CHECK(planar.knots()[k].value[1] == expect.knots()[k].value[1]);
    }
  }
}

TEST_CASE("two equal rays split provenance like a fair coin") {
  Rng rng = Rng::stream(3025, 3);
  auto base = fast_ito();
  auto fam = walsh_jumpin_family({{axis_ray(0, "east"), 1.0}, {axis_ray(1, "north"), 1.0}},
                                 std::nullopt, 0.0, base, bm_stopped_law());
  const int n = 2000;
  int east = 0;
  for (int i = 0; i < n; ++i) {
    auto [p, mark] = fam.sample_big_marked(0.05, rng);
    if (mark == "east") ++east;
  }
  double chi2 = std::pow(east - n / 2.0, 2) * 4.0 / n;
  CHECK(chi2 < 6.634897);
}

TEST_CASE("jump arms enter on their ray at the conditional distance") {
  Rng rng = Rng::stream(3025, 4);
  auto base = fast_ito();
  auto fam = walsh_jumpin_family({}, equal_atom_disint(1.0, 3.0, 1.0), 0.0, base,
                                 bm_stopped_law(2e-3, 100.0));
  // kernels both rescale to 4·delta_1: recomposed masses 1 and 3
  CHECK(fam.tail_mass(1e-3) == Catch::Approx(4.0).margin(1e-12));
  CHECK(fam.small_duration_mean(1e-3) == 0.0);
  int north = 0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    auto [p, mark] = fam.sample_big_marked(1e-3, rng);
    REQUIRE(p.dim() == 2);
    const Vec x0 = p.knots().front().value;
    if (mark == "north") {
      ++north;
      CHECK(x0[0] == 0.0);
      CHECK(x0[1] == 1.0);
    } else {
      REQUIRE(mark == "east");
      CHECK(x0[0] == 1.0);
      CHECK(x0[1] == 0.0);
    }
    CHECK(psi_ray_name(x0, fam.all_rays) == mark);
  }
  // mixture 3:1 toward north
  CHECK(std::fabs(north * 1.0 / n - 0.75) < 4.0 * std::sqrt(0.75 * 0.25 / n));
  // flattened admissibility view merges the atoms
  Rng vr = Rng::stream(3025, 5);
  auto rep = validate_triple(fam.triple, fam.kappa, vr);
  CHECK(rep.rows[0].pass);
  CHECK(rep.rows[1].pass);
  CHECK(fam.triple.j->total_mass() == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("pieced walsh paths stay collinear between zeros") {
  Rng rng = Rng::stream(3025, 6);
  auto base = fast_ito();
  auto fam = walsh_jumpin_family({{axis_ray(0, "east"), 0.5}, {axis_ray(1, "north"), 0.5}},
                                 equal_atom_disint(1.0, 3.0, 0.5), 0.0, base,
                                 bm_stopped_law(2e-3, 50.0));
  MarkedPointProcess pp;
  pp.l_max = 2.0;
  pp.truncation_eps = 0.05;
  pp.compensator_rate = fam.small_duration_mean(0.05);
  for (int i = 0; i < 3; ++i) {
    auto [path, mark] = fam.sample_big_marked(0.05, rng);
    pp.points.push_back({0.5 * (i + 1), std::move(path), mark});
  }
  auto triple = piece_together(pp, 0.25);
  REQUIRE(triple.x.dim() == 2);
  CHECK(rays_collinear(triple.x, fam.all_rays));

  // an off-axis knot breaks the check
  auto bad = CadlagPath::make({{0.0, Vec::planar(1.0, 1.0), SegmentMode::ConstantRight},
                               {1.0, Vec::planar(0.0, 0.0), SegmentMode::ConstantRight}},
                              1.0);
  CHECK_FALSE(rays_collinear(bad, fam.all_rays));
  // switching rays inside one excursion breaks it too
  auto mixed = CadlagPath::make({{0.0, Vec::planar(1.0, 0.0), SegmentMode::Linear},
                                 {1.0, Vec::planar(0.0, 1.0), SegmentMode::ConstantRight},
                                 {2.0, Vec::planar(0.0, 0.0), SegmentMode::ConstantRight}},
                                2.0);
  CHECK_FALSE(rays_collinear(mixed, fam.all_rays));
}

TEST_CASE("kappa-moment and tail coefficient of ray kernels") {
  auto atom2 = RadialMeasure::atomic({{2.0, 1.0}});
  CHECK(pi_moment(atom2, 1.0) == 2.0);
  CHECK(pi_moment(RadialMeasure::atomic({{0.5, 2.0}, {2.0, 1.0}}), 1.0) == 3.0);
  CHECK(pi_moment(RadialMeasure::power_tail(1.0, 0.5), 1.0) == kInf);
  CHECK(pi_tail_coef(RadialMeasure::power_tail(2.5, 0.5), 0.5) == 2.5);
  CHECK_THROWS_AS(pi_tail_coef(atom2, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(pi_tail_coef(RadialMeasure::power_tail(1.0, 0.25), 0.5),
                  std::invalid_argument);
}

TEST_CASE("vanishing-jump limit weights add the kappa-moment per ray") {
  std::vector<std::pair<Ray, double>> rho{{axis_ray(0, "east"), 0.5},
                                          {axis_ray(1, "north"), 0.5}};
  auto disint = equal_atom_disint(1.0, 3.0, 1.0);
  // kernels 4·delta_1, angular (1/4, 3/4), pi = 4: weights 0.5 + (1, 3)
  auto star = walsh_rho_star(rho, disint, 1.0, 1.0);
  REQUIRE(star.size() == 2);
  CHECK(star[0].second == 1.5);
  CHECK(star[1].second == 3.5);
  // delta rescales the jump contribution
  auto star2 = walsh_rho_star(rho, disint, 2.0, 1.0);
  CHECK(star2[0].second == 1.0);
  CHECK(star2[1].second == 2.0);
  // a jump ray absent from rho appears with the pure jump weight
  auto star3 = walsh_rho_star({{axis_ray(0, "east"), 0.5}}, disint, 1.0, 1.0);
  REQUIRE(star3.size() == 2);
  CHECK(star3[0].second == 1.5);
  CHECK(star3[1].first.name == "north");
  CHECK(star3[1].second == 3.0);
  // no jump measure: identity
  auto star4 = walsh_rho_star(rho, std::nullopt, 1.0, 1.0);
  CHECK(star4[0].second == 0.5);

  PlanarJumpMeasure pw;
  pw.components.push_back({axis_ray(0, "east"), RadialMeasure::power_tail(1.0, 0.5), 1.0});
  auto heavy = disintegrate(pw, 1.0);
  CHECK_THROWS_AS(walsh_rho_star(rho, heavy, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("hitting times of nearby levels converge on conditioned paths") {
  Rng rng = Rng::stream(3025, 7);
  auto base = fast_ito();
  const double x = 0.5;
  const int m = 300;
  std::vector<CadlagPath> paths;
  for (int i = 0; i < m; ++i) paths.push_back(base.sample_sup_big(1.0, rng));
  std::vector<double> t_limit;
  for (const auto& p : paths) t_limit.push_back(hitting_time(p, Vec::scalar(x)));
  std::vector<double> ks_by_n;
  for (int n = 1; n <= 5; ++n) {
    const double xn = x * (1.0 + std::pow(2.0, -n));
    std::vector<double> tn;
    for (const auto& p : paths) tn.push_back(hitting_time(p, Vec::scalar(xn)));
    ks_by_n.push_back(ks_two_sample(tn, t_limit));
  }
  CHECK(decreasing_trend(ks_by_n, 1));
  CHECK(ks_by_n.back() < 0.1);
}
