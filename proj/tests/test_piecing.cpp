#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "exc/piecing.hpp"
#include "exc/scaling.hpp"
#include "exc/stats.hpp"

using namespace exc;

namespace {

CadlagPath tent(double T, double peak) {
  std::vector<Knot> ks{{0.0, Vec::scalar(0.0), SegmentMode::Linear},
                       {T / 2, Vec::scalar(peak), SegmentMode::Linear},
                       {T, Vec::scalar(0.0), SegmentMode::ConstantRight}};
  return CadlagPath::make(std::move(ks), T);
}

// excursion entered by a jump: starts strictly positive
CadlagPath jump_tent(double T, double start) {
  std::vector<Knot> ks{{0.0, Vec::scalar(start), SegmentMode::Linear},
                       {T / 2, Vec::scalar(start / 2), SegmentMode::Linear},
                       {T, Vec::scalar(0.0), SegmentMode::ConstantRight}};
  return CadlagPath::make(std::move(ks), T);
}

MarkedPointProcess manual_pp(std::vector<std::pair<double, CadlagPath>> pts, double l_max,
                             double comp = 0.0) {
  MarkedPointProcess pp;
  pp.l_max = l_max;
  pp.compensator_rate = comp;
  for (auto& [l, e] : pts) pp.points.push_back({l, std::move(e), ""});
  return pp;
}

// dyadic random configuration: every time, value, and rate is k/64
MarkedPointProcess dyadic_pp(Rng& rng, int n_pts, double l_max) {
  std::vector<double> locs;
  while (static_cast<int>(locs.size()) < n_pts) {
    double l = (1 + static_cast<int>(rng.raw() % static_cast<uint64_t>(l_max * 64))) / 64.0;
    if (std::find(locs.begin(), locs.end(), l) == locs.end()) locs.push_back(l);
  }
  std::sort(locs.begin(), locs.end());
  MarkedPointProcess pp;
  pp.l_max = l_max;
  for (double l : locs) {
    const double T = (1 + static_cast<int>(rng.raw() % 64)) / 16.0;
    const double peak = (1 + static_cast<int>(rng.raw() % 64)) / 32.0;
    pp.points.push_back({l, rng.raw() % 2 ? tent(T, peak) : jump_tent(T, peak), ""});
  }
  return pp;
}

}  // namespace

TEST_CASE("eta matches the pinned step-function examples", "[piecing]") {
  auto one = build_eta(manual_pp({{1.0, tent(2.0, 1.0)}}, 1.0), 0.5);
  CHECK(one.eta(0.5) == 0.25);
  CHECK(one.eta_left(1.0) == 0.5);
  CHECK(one.eta(1.0) == 2.5);
  CHECK(one.total() == 2.5);

  auto empty = build_eta(manual_pp({}, 3.0), 1.0);
  CHECK(empty.eta(0.7) == 0.7);
  CHECK(empty.eta_left(2.0) == 2.0);

  auto two = build_eta(manual_pp({{1.0, tent(1.0, 1.0)}, {2.0, tent(3.0, 1.0)}}, 2.0), 0.0);
  CHECK(two.eta(1.5) == 1.0);
  CHECK(two.eta(2.0) == 4.0);
  CHECK(two.eta_left(2.0) == 1.0);
}

TEST_CASE("eta construction validates its inputs", "[piecing]") {
  CHECK_THROWS_AS(build_eta(manual_pp({{1.0, tent(1.0, 1.0)}}, 1.0), -0.1),
                  std::invalid_argument);
  auto unsorted = manual_pp({{1.5, tent(1.0, 1.0)}, {0.5, tent(1.0, 1.0)}}, 2.0);
  CHECK_THROWS_AS(build_eta(unsorted, 1.0), std::invalid_argument);
  auto outside = manual_pp({{2.5, tent(1.0, 1.0)}}, 2.0);
  CHECK_THROWS_AS(build_eta(outside, 1.0), std::invalid_argument);
  MarkedPointProcess censored = manual_pp({}, 1.0);
  std::vector<Knot> ks{{0.0, Vec::scalar(1.0), SegmentMode::ConstantRight}};
  censored.points.push_back({0.5, CadlagPath::make(ks, kInf), ""});
  CHECK_THROWS_AS(build_eta(censored, 1.0), std::invalid_argument);
}

TEST_CASE("local time inverts eta", "[piecing]") {
  auto e = build_eta(manual_pp({{1.0, tent(2.0, 1.0)}}, 1.0), 0.5);
  auto lt = build_local_time(e);
  CHECK_FALSE(lt.right_censored);
  CHECK(lt.valid_to == 2.5);
  const CadlagPath& L = lt.path;
  CHECK(evaluate(L, 0.25)[0] == 0.5);
  CHECK(evaluate(L, 0.5)[0] == 1.0);
  CHECK(evaluate(L, 1.7)[0] == 1.0);
  CHECK(evaluate(L, 2.4999)[0] == 1.0);
  CHECK(evaluate(L, 2.5)[0] == 1.0);

  auto empty = build_eta(manual_pp({}, 3.0), 1.0);
  auto flat = build_local_time(empty);
  CHECK(evaluate(flat.path, 1.234)[0] == Catch::Approx(1.234).margin(1e-15));
  CHECK(flat.valid_to == 3.0);

  // inverse identity at every point location
  auto multi = build_eta(
      manual_pp({{0.5, tent(0.5, 1.0)}, {1.25, tent(1.0, 1.0)}, {2.0, tent(0.25, 1.0)}}, 2.0),
      0.75);
  auto mlt = build_local_time(multi);
  for (double l : multi.locations)
    CHECK(evaluate(mlt.path, multi.eta(l))[0] == Catch::Approx(l).margin(1e-12));
}

TEST_CASE("zero drift local time jumps between excursion levels", "[piecing]") {
  auto e = build_eta(manual_pp({{1.0, tent(1.0, 1.0)}, {2.0, tent(3.0, 1.0)}}, 2.0), 0.0);
  auto lt = build_local_time(e);
  CHECK(lt.right_censored);
  CHECK(lt.valid_to == 4.0);
  const CadlagPath& L = lt.path;
  CHECK(evaluate(L, 0.0)[0] == 1.0);
  CHECK(evaluate(L, 0.9999)[0] == 1.0);
  CHECK(evaluate(L, 1.0)[0] == 2.0);  // right-continuous jump
  CHECK(evaluate(L, 3.9999)[0] == 2.0);
  CHECK(evaluate(L, 4.0)[0] == 2.0);  // jump to l_max == 2 at the censoring time
  CHECK_THROWS_AS(build_local_time(build_eta(manual_pp({}, 1.0), 0.0)), std::invalid_argument);
}

TEST_CASE("pieced path lays excursions on their eta intervals", "[piecing]") {
  auto tri = piece_together(manual_pp({{1.0, tent(2.0, 3.0)}}, 2.0), 1.0);
  CHECK(tri.varsigma_eff == 1.0);
  CHECK(tri.valid_to == 4.0);
  CHECK(evaluate(tri.x, 0.0).is_zero());
  CHECK(evaluate(tri.x, 0.9999).is_zero());
  CHECK(evaluate(tri.x, 1.0)[0] == 0.0);  // excursion starts at zero
  CHECK(evaluate(tri.x, 2.0)[0] == 3.0);  // peak at eta(1-) + T/2
  CHECK(evaluate(tri.x, 2.5)[0] == 1.5);
  CHECK(evaluate(tri.x, 3.0).is_zero());

  auto none = piece_together(manual_pp({}, 2.0), 1.0);
  CHECK(evaluate(none.x, 0.0).is_zero());
  CHECK(evaluate(none.x, 1.7).is_zero());

  // occupation on the single-excursion example: 1 + s at time 1 + T + s
  const double t = 3.0 + 0.25;
  CHECK(occupation_time_at_zero(tri.x, t) == Catch::Approx(1.25).margin(1e-12));
  CHECK(tri.varsigma_eff * evaluate(tri.local_time, t)[0] ==
        Catch::Approx(1.25).margin(1e-12));
}

TEST_CASE("occupation identity is exact on dyadic configurations", "[piecing]") {
  Rng rng = Rng::stream(99, 1);
  for (int cfg = 0; cfg < 30; ++cfg) {
    auto pp = dyadic_pp(rng, 1 + static_cast<int>(rng.raw() % 5), 2.0);
    const double vs = (rng.raw() % 5) / 2.0;  // 0, 0.5, ..., 2
    if (vs == 0.0 && pp.points.empty()) continue;
    auto tri = piece_together(pp, vs);
    for (int g = 0; g <= 50; ++g) {
      const double t = tri.valid_to * g / 50.0;
      const double occ = occupation_time_at_zero(tri.x, t);
      const double scaled = tri.varsigma_eff * evaluate(tri.local_time, t)[0];
      REQUIRE(std::fabs(occ - scaled) < 1e-10);
    }
  }
}

TEST_CASE("extraction is the exact inverse of piecing", "[piecing]") {
  Rng rng = Rng::stream(99, 2);
  for (int cfg = 0; cfg < 40; ++cfg) {
    auto pp = dyadic_pp(rng, 1 + static_cast<int>(rng.raw() % 5), 2.0);
    const double vs = cfg % 4 == 0 ? 0.0 : (1 + static_cast<int>(rng.raw() % 4)) / 4.0;
    auto tri = piece_together(pp, vs);
    auto back = extract_excursions(tri.x, tri.local_time);
    REQUIRE(back.points.size() == pp.points.size());
    CHECK(back.l_max == pp.l_max);
    for (size_t i = 0; i < pp.points.size(); ++i) {
      CHECK(back.points[i].l == pp.points[i].l);
      const auto& ka = back.points[i].excursion.knots();
      const auto& kb = pp.points[i].excursion.knots();
      REQUIRE(ka.size() == kb.size());
      REQUIRE(back.points[i].excursion.lifetime() == pp.points[i].excursion.lifetime());
      for (size_t k = 0; k < ka.size(); ++k) {
        CHECK(ka[k].t == kb[k].t);
        CHECK(ka[k].value[0] == kb[k].value[0]);
        CHECK(ka[k].mode == kb[k].mode);
      }
    }
  }
}

TEST_CASE("extraction of the zero path is empty and inconsistency throws", "[piecing]") {
  auto none = piece_together(manual_pp({}, 2.0), 1.0);
  auto back = extract_excursions(none.x, none.local_time);
  CHECK(back.points.empty());
  CHECK(back.l_max == 2.0);

  // L claims an excursion interval where x is flat zero
  auto tri = piece_together(manual_pp({{1.0, tent(2.0, 1.0)}}, 1.0), 1.0);
  CHECK_THROWS_AS(extract_excursions(CadlagPath::zero(1), tri.local_time),
                  std::invalid_argument);
}

TEST_CASE("piecing commutes with rescaling", "[piecing][scaling]") {
  Rng rng = Rng::stream(99, 3);
  ScalingScheme s;
  s.alpha = 0.5;
  for (int cfg = 0; cfg < 20; ++cfg) {
    auto pp = dyadic_pp(rng, 1 + static_cast<int>(rng.raw() % 4), 2.0);
    pp.compensator_rate = (rng.raw() % 4) / 8.0;
    const double vs = (1 + static_cast<int>(rng.raw() % 4)) / 4.0;
    s.c = cfg % 2 ? 2.0 : 4.0;
    const double gamma = cfg % 3 ? 0.5 : 1.0;
    const int n = 1 + cfg % 3;

    auto base = piece_together(pp, vs);
    auto scaled = piece_together(rescale_point_process(pp, s, gamma, n),
                                 std::pow(s.c, -(1.0 - gamma) * n) * vs);

    CadlagPath want_x = apply_psi(s.c, s.alpha, n, base.x);
    CadlagPath want_l = apply_psi(s.c, gamma, n, base.local_time);

    REQUIRE(scaled.x.knots().size() == want_x.knots().size());
    for (size_t k = 0; k < want_x.knots().size(); ++k) {
      CHECK(scaled.x.knots()[k].t == Catch::Approx(want_x.knots()[k].t).margin(1e-12));
      CHECK(scaled.x.knots()[k].value[0] ==
            Catch::Approx(want_x.knots()[k].value[0]).margin(1e-12));
      CHECK(scaled.x.knots()[k].mode == want_x.knots()[k].mode);
    }
    REQUIRE(scaled.local_time.knots().size() == want_l.knots().size());
    for (size_t k = 0; k < want_l.knots().size(); ++k) {
      CHECK(scaled.local_time.knots()[k].t ==
            Catch::Approx(want_l.knots()[k].t).margin(1e-12));
      CHECK(scaled.local_time.knots()[k].value[0] ==
            Catch::Approx(want_l.knots()[k].value[0]).margin(1e-12));
    }
    // eta transforms by the hat map: eta_n(c^{-gamma n} l) = c^{-n} eta(l)
    for (double l : pp.points.size() ? std::vector<double>{pp.points[0].l, 1.0, 2.0}
                                     : std::vector<double>{1.0}) {
      const double lhs = scaled.eta.eta(std::pow(s.c, -gamma * n) * l);
      const double rhs = std::pow(s.c, -static_cast<double>(n)) * base.eta.eta(l);
      CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    }
  }
}

TEST_CASE("eta increments over disjoint blocks are exchangeable", "[piecing]") {
  ItoOptions fast;
  fast.shape_steps = 8;
  auto spec = ito_brownian_measure(1.0, fast);
  Rng rng = Rng::stream(99, 4);
  const int reps = 400;
  std::vector<double> first, second;
  for (int i = 0; i < reps; ++i) {
    auto pp = sample_ppp(spec, 2.0, 0.5, rng);
    auto e = build_eta(pp, 0.3);
    first.push_back(e.eta(1.0));
    second.push_back(e.eta(2.0) - e.eta(1.0));
  }
  CHECK(ks_two_sample(first, second) < 0.12);
}

TEST_CASE("pieced triple dump writes paths and a manifest", "[piecing]") {
  namespace fs = std::filesystem;
  auto tri = piece_together(manual_pp({{1.0, tent(2.0, 1.0)}}, 1.0), 0.5);
  const auto dir = fs::temp_directory_path() / "exc_triple_dump_test";
  fs::remove_all(dir);
  dump_pieced_triple(tri, dir.string());
  REQUIRE(fs::exists(dir / "x.csv"));
  REQUIRE(fs::exists(dir / "local_time.csv"));
  REQUIRE(fs::exists(dir / "eta.csv"));
  REQUIRE(fs::exists(dir / "triple.manifest"));
  CadlagPath x = read_path_csv((dir / "x.csv").string());
  REQUIRE(x.knots().size() == tri.x.knots().size());
  for (size_t k = 0; k < x.knots().size(); ++k) CHECK(x.knots()[k].t == tri.x.knots()[k].t);
  fs::remove_all(dir);
}
