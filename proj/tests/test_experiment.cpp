#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "exc/experiment.hpp"

using namespace exc;

namespace {

std::string tmp_dir(const std::string& tag) {
  auto d = std::filesystem::temp_directory_path() / ("exc_experiment_" + tag);
  std::filesystem::remove_all(d);
  return d.string();
}

std::map<std::string, std::string> manifest_of(const std::string& dir) {
  return parse_kv_file(dir + "/manifest.txt");
}

}  // namespace

TEST_CASE("simulate writes the pieced triple and a complete manifest") {
  auto cfg = parse_run_config(parse_kv_text("experiment = simulate\nkappa = 1\nseed = 4\n"));
  cfg.out_dir = tmp_dir("sim");
  CHECK(run_experiment(cfg) == 0);
  for (const char* f : {"x.csv", "local_time.csv", "eta.csv", "manifest.txt"})
    CHECK(std::filesystem::exists(cfg.out_dir + "/" + std::string(f)));

  auto m = manifest_of(cfg.out_dir);
  CHECK(m.at("experiment") == "simulate");
  CHECK(m.at("seed") == "4");
  CHECK(m.at("exit_code") == "0");
  CHECK(parse_double(m.at("result.valid_to")) > 0.0);
  CHECK(m.count("result.n_points") == 1);
  CHECK(m.count("threads_resolved") == 1);

  // identical config, identical bytes
  auto cfg2 = cfg;
  cfg2.out_dir = tmp_dir("sim2");
  CHECK(run_experiment(cfg2) == 0);
  for (const char* f : {"x.csv", "local_time.csv", "eta.csv"}) {
    std::ifstream a(cfg.out_dir + "/" + std::string(f), std::ios::binary);
    std::ifstream b(cfg2.out_dir + "/" + std::string(f), std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("verify invariants passes on defaults and records exact errors") {
  auto cfg = parse_run_config(parse_kv_text("experiment = verify_invariants\nkappa = 1\n"));
  cfg.out_dir = tmp_dir("verify");
  cfg.seed = 7;
  CHECK(run_experiment(cfg) == 0);
  auto m = manifest_of(cfg.out_dir);
  CHECK(parse_double(m.at("result.occupation_max_err")) < 1e-10);
  CHECK(m.at("result.occupation_pass") == "1");
  CHECK(m.at("result.scaling_commutation_pass") == "1");
  CHECK(m.at("result.round_trip_pass") == "1");
  CHECK(m.at("exit_code") == "0");
}

TEST_CASE("null vanishing experiment converges at the pinned seed") {
  auto cfg = parse_run_config(parse_kv_text(
      "experiment = homogenize_vanishing\nkappa = 1\nseed = 1\n"
      "triple.varsigma = 0\neps = 1e-3\nn_list = 0,2\nn_paths = 200\npilot_reps = 24\n"
      "threads = 2\nfunctionals.t0 = 0.5\nfunctionals.l0 = 0.25\n"
      "functionals.x_times = 0.125,0.25,0.5\nfunctionals.grid_m = 8\n"));
  cfg.out_dir = tmp_dir("null");
  // the family has no jump part, so the limit is the family itself
  CHECK(run_experiment(cfg) == 0);
  auto m = manifest_of(cfg.out_dir);
  CHECK(m.at("result.converged") == "1");
  CHECK(m.at("result.limit_rho.ray+") == "1");
  CHECK(std::filesystem::exists(cfg.out_dir + "/report.csv"));
  CHECK(parse_double(m.at("result.plot_files")) == 8.0);

  auto rep = read_hom_report_csv(cfg.out_dir + "/report.csv");
  CHECK(rep.converged);
  // 6 scalar functionals x 4 statistics + joint = 25 rows per n, 50 summary
  // rows, 2 analytic varsigma rows
  CHECK(rep.rows.size() == 2 * 25 + 25 * 2 + 2);
}

TEST_CASE("dominant experiment reports the exact mixture decay") {
  auto cfg = parse_run_config(parse_kv_text(
      "experiment = homogenize_dominant\nkappa = 1\nbeta = 0.5\nc = 8\nseed = 5\n"
      "triple.rho = ray+:1\ntriple.j.type = power_tail\ntriple.j.j0 = 1\ntriple.j.beta = 0.5\n"
      "triple.varsigma = 0\nfixed_r_min = 0.01\neps = 1e-3\nn_list = 0,1\nn_paths = 60\n"
      "pilot_reps = 8\nfunctionals.t0 = 0.25\nfunctionals.l0 = 0.25\n"
      "functionals.x_times = 0.25\nfunctionals.grid_m = 4\n"));
  cfg.out_dir = tmp_dir("dom");
  const int code = run_experiment(cfg);
  CHECK((code == 0 || code == 1));  // statistical rows may sit above the band at tiny sizes

  auto rep = read_hom_report_csv(cfg.out_dir + "/report.csv");
  int seen = 0;
  for (const auto& r : rep.rows)
    if (r.functional == "excursion_weight") {
      // weight tracks c^{-alpha (kappa - beta) n} exactly
      CHECK(r.value == std::pow(8.0, (0.25 - 0.5) * r.n));
      CHECK(r.verdict == "within");
      ++seen;
    }
  CHECK(seen == 2);
  auto m = manifest_of(cfg.out_dir);
  CHECK(m.at("fixed_r_min") == fmt_double(0.01));
  CHECK(m.count("result.limit_rho.ray+") == 0);  // entries vanish from the dominant limit
}

TEST_CASE("walsh experiment matches the merged ray weights") {
  auto cfg = parse_run_config(parse_kv_text(
      "experiment = walsh\nkappa = 1\nseed = 12\nn_paths = 800\neps = 0.1\nl_max = 0.5\n"
      "triple.varsigma = 0.25\nwalsh.rho = east:1,north:3\nwalsh.jump = east:0.5,north:0.5\n"
      "walsh.radial.type = atomic\nwalsh.radial.atoms = 1:1\nwalsh.pieced = 4\n"
      "shape_steps = 16\nstopped.step = 0.002\nstopped.cap = 50\n"));
  cfg.out_dir = tmp_dir("walsh");
  CHECK(run_experiment(cfg) == 0);

  auto m = manifest_of(cfg.out_dir);
  CHECK(parse_double(m.at("result.star.east")) == 1.5);
  CHECK(parse_double(m.at("result.star.north")) == 3.5);
  CHECK(parse_double(m.at("result.count.east")) + parse_double(m.at("result.count.north")) ==
        800.0);
  CHECK(m.at("result.condition.entry-weights-finite") == "1");
  CHECK(m.at("result.converged") == "1");

  auto rep = read_hom_report_csv(cfg.out_dir + "/report.csv");
  bool saw_collinear = false;
  for (const auto& r : rep.rows)
    if (r.statistic == "collinear_fraction") {
      saw_collinear = true;
      CHECK(r.value == 1.0);
      CHECK(r.verdict == "within");
    }
  CHECK(saw_collinear);

  // expected proportions carry the jump correction: (1.5, 3.5) / 5
  for (const auto& r : rep.rows)
    if (r.statistic == "expected")
      CHECK((r.value == 0.3 || r.value == 0.7));
}

TEST_CASE("unwired instances and bad experiments are rejected before sampling") {
  auto cfg = parse_run_config(parse_kv_text("experiment = simulate\nkappa = 0.8\n"));
  cfg.out_dir = tmp_dir("gate");
  CHECK_THROWS_WITH(run_experiment(cfg),
                    Catch::Matchers::ContainsSubstring("reflecting-Brownian"));

  auto w = parse_run_config(parse_kv_text("experiment = walsh\nkappa = 0.8\n"));
  w.out_dir = tmp_dir("gate2");
  CHECK_THROWS_WITH(run_experiment(w),
                    Catch::Matchers::ContainsSubstring("reflecting-Brownian"));

  auto bad = parse_run_config(parse_kv_text(
      "experiment = walsh\nkappa = 1\nwalsh.rho = up:1\n"));
  bad.out_dir = tmp_dir("gate3");
  CHECK_THROWS_WITH(run_experiment(bad), Catch::Matchers::ContainsSubstring("east"));
}
