#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "exc/config.hpp"
#include "exc/experiment.hpp"
#include "exc/io.hpp"
#include "exc/j1.hpp"

namespace {

// --seed beats EXCURSION_SEED beats the config file
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t from_config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("EXCURSION_SEED")) {
    std::string v(env);
    return exc::detail::req_u64("EXCURSION_SEED", v);
  }
  return from_config;
}

int dispatch(exc::RunConfig cfg, const std::optional<std::uint64_t>& seed_flag,
             const std::string& out_flag, int threads_flag) {
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  if (!out_flag.empty()) cfg.out_dir = out_flag;
  if (threads_flag >= 0) cfg.threads = threads_flag;
  return exc::run_experiment(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"excursion process toolkit"};
  app.require_subcommand(1);

  std::string config_pos, config_opt, out_flag;
  std::optional<std::uint64_t> seed_flag;
  int threads_flag = -1;

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config_file", config_pos, "config file");
  run->add_option("--config", config_opt, "config file (alternative to the positional)");
  run->add_option("--seed", seed_flag, "seed override");
  run->add_option("--out", out_flag, "output directory override");
  run->add_option("--threads", threads_flag, "worker count override (0 = all cores)");

  auto* verify = app.add_subcommand("verify", "check built-in invariants on defaults");
  verify->add_option("--seed", seed_flag, "seed override");
  verify->add_option("--out", out_flag, "output directory override");
  verify->add_option("--threads", threads_flag, "worker count override (0 = all cores)");

  auto* j1 = app.add_subcommand("j1", "distance between two stored paths");
  std::string pa, pb;
  double horizon = 1.0;
  j1->add_option("pathA", pa, "first path csv")->required();
  j1->add_option("pathB", pb, "second path csv")->required();
  j1->add_option("--horizon", horizon, "comparison horizon")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (j1->parsed()) {
      auto a = exc::read_path_csv(pa);
      auto b = exc::read_path_csv(pb);
      auto r = exc::j1_distance(a, b, horizon);
      std::printf("%s\n", exc::fmt_double(r.distance).c_str());
      return 0;
    }
    if (run->parsed()) {
      const std::string path = !config_opt.empty() ? config_opt : config_pos;
      if (path.empty()) {
        std::fprintf(stderr, "error: run needs a config file\n");
        return 2;
      }
      return dispatch(exc::parse_run_config_file(path), seed_flag, out_flag, threads_flag);
    }
    if (verify->parsed()) {
      exc::RunConfig cfg;
      cfg.experiment = "verify_invariants";
      cfg.scheme.kappa = 1.0;
      cfg.out_dir = "verify_out";
      return dispatch(std::move(cfg), seed_flag, out_flag, threads_flag);
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
