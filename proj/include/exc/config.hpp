#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exc/homogenization.hpp"
#include "exc/io.hpp"
#include "exc/scaling.hpp"

namespace exc {

namespace detail {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return std::string();
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Plain-text key=value configuration. '#' starts a comment, blank lines are
// skipped, and a [section] line prefixes the following keys with "section.".
// Dotted keys work with or without a section header; duplicates are an error
// so a manifest line can never be ambiguous about which value was used.
inline std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: unterminated section at line " +
                                    std::to_string(lineno));
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value at line " + std::to_string(lineno));
    std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    if (!section.empty()) key = section + "." + key;
    if (kv.count(key)) throw std::invalid_argument("config: duplicate key '" + key + "'");
    kv[key] = val;
  }
  return kv;
}

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_kv_text(buf.str());
}

// Entry-measure description as configured; turned into a RadialMeasure only
// after validation so error messages can name the offending key.
struct JumpSpecConfig {
  std::string type = "none";  // none | atomic | power_tail
  std::vector<std::pair<double, double>> atoms;
  double j0 = 0.0;
  double beta = 0.0;
};

struct RunConfig {
  std::string experiment;  // simulate | homogenize_vanishing | homogenize_dominant |
                           // verify_invariants | walsh
  ScalingScheme scheme;    // kappa must be set explicitly in the config

  // jumping-in triple
  std::vector<std::pair<std::string, double>> rho{{"ray+", 1.0}};
  JumpSpecConfig jump;
  double varsigma = 0.25;

  double eps = 1e-2;
  double l_max = 1.0;
  std::vector<int> n_list{0, 2, 4};
  int n_paths = 400;
  int pilot_reps = 20;
  double band_level = 0.99;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;  // 0 = all available cores
  double delta = 1.0;
  std::optional<double> fixed_r_min;

  HomFunctionals functionals;

  // sampler resolution; changes the sampled law, so both land in the manifest
  int shape_steps = 64;
  double stopped_step = 1e-3;
  double stopped_cap = 1e4;

  // walsh experiment: axis-ray names keep the collinearity check exact
  std::vector<std::pair<std::string, double>> walsh_rho{{"east", 0.5}, {"north", 0.5}};
  std::vector<std::pair<std::string, double>> walsh_jump;
  JumpSpecConfig walsh_radial;
  int walsh_pieced = 8;  // pieced paths run through the collinearity check
};

namespace detail {

inline double req_double(const std::string& key, const std::string& val) {
  try {
    return parse_double(val);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: '" + val + "'");
  }
}

inline long req_long(const std::string& key, const std::string& val) {
  const double d = req_double(key, val);
  const long l = static_cast<long>(d);
  if (static_cast<double>(l) != d)
    throw std::invalid_argument("config: key '" + key + "' is not an integer: '" + val + "'");
  return l;
}

inline std::uint64_t req_u64(const std::string& key, const std::string& val) {
  if (val.empty() || val.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("config: key '" + key + "' is not a seed: '" + val + "'");
  try {
    return std::stoull(val);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a seed: '" + val + "'");
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back(std::string());
  return out;
}

inline std::vector<double> req_doubles(const std::string& key, const std::string& val) {
  std::vector<double> out;
  for (const auto& tok : split(val, ','))
    if (!tok.empty()) out.push_back(req_double(key, tok));
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' is an empty list");
  return out;
}

inline std::vector<int> req_ints(const std::string& key, const std::string& val) {
  std::vector<int> out;
  for (const auto& tok : split(val, ','))
    if (!tok.empty()) out.push_back(static_cast<int>(req_long(key, tok)));
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' is an empty list");
  return out;
}

// "name:weight,name:weight" pairs; weights parsed, names kept verbatim
inline std::vector<std::pair<std::string, double>> req_named_weights(const std::string& key,
                                                                     const std::string& val) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& tok : split(val, ',')) {
    if (tok.empty()) continue;
    const auto colon = tok.find(':');
    if (colon == std::string::npos || colon == 0)
      throw std::invalid_argument("config: key '" + key + "' needs name:weight entries");
    out.emplace_back(trim(tok.substr(0, colon)), req_double(key, tok.substr(colon + 1)));
  }
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' is an empty list");
  return out;
}

inline std::vector<std::pair<double, double>> req_atoms(const std::string& key,
                                                        const std::string& val) {
  std::vector<std::pair<double, double>> out;
  for (const auto& [r, w] : req_named_weights(key, val)) out.emplace_back(req_double(key, r), w);
  return out;
}

inline void validate_jump_spec(const std::string& prefix, const JumpSpecConfig& j) {
  if (j.type == "none") {
    if (!j.atoms.empty())
      throw std::invalid_argument("config: key '" + prefix + ".atoms' needs " + prefix +
                                  ".type = atomic");
    return;
  }
  if (j.type == "atomic") {
    if (j.atoms.empty())
      throw std::invalid_argument("config: missing key '" + prefix + ".atoms'");
    for (const auto& [r, w] : j.atoms)
      if (!(r > 0.0) || !(w > 0.0))
        throw std::invalid_argument("config: key '" + prefix +
                                    ".atoms' needs positive radius:weight pairs");
    return;
  }
  if (j.type == "power_tail") {
    if (!(j.j0 > 0.0)) throw std::invalid_argument("config: missing key '" + prefix + ".j0'");
    if (!(j.beta > 0.0)) throw std::invalid_argument("config: missing key '" + prefix + ".beta'");
    return;
  }
  throw std::invalid_argument("config: key '" + prefix + ".type' must be none, atomic or "
                              "power_tail, got '" + j.type + "'");
}

}  // namespace detail

inline RadialMeasure make_radial(const JumpSpecConfig& j) {
  if (j.type == "atomic") return RadialMeasure::atomic(j.atoms);
  if (j.type == "power_tail") return RadialMeasure::power_tail(j.j0, j.beta);
  throw std::invalid_argument("make_radial: no measure configured");
}

// Builds and validates a RunConfig. Unknown keys are errors: anything that can
// change a sample must be visible in the file, so silent typos are worse than
// hard failures. Numeric ranges are checked here, before any sampling.
inline RunConfig parse_run_config(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  std::map<std::string, std::string> rest = kv;
  auto take = [&rest](const std::string& key) -> std::optional<std::string> {
    auto it = rest.find(key);
    if (it == rest.end()) return std::nullopt;
    std::string v = it->second;
    rest.erase(it);
    return v;
  };

  auto need = [&take](const std::string& key) {
    auto v = take(key);
    if (!v) throw std::invalid_argument("config: missing key '" + key + "'");
    return *v;
  };

  cfg.experiment = need("experiment");
  static const char* kExperiments[] = {"simulate", "homogenize_vanishing", "homogenize_dominant",
                                       "verify_invariants", "walsh"};
  bool known = false;
  for (const char* e : kExperiments) known = known || cfg.experiment == e;
  if (!known)
    throw std::invalid_argument("config: key 'experiment' has unknown value '" + cfg.experiment +
                                "'");

  cfg.scheme.kappa = detail::req_double("kappa", need("kappa"));
  if (auto v = take("c")) cfg.scheme.c = detail::req_double("c", *v);
  if (auto v = take("alpha")) cfg.scheme.alpha = detail::req_double("alpha", *v);
  if (auto v = take("beta")) cfg.scheme.beta = detail::req_double("beta", *v);
  cfg.scheme.validate();

  if (auto v = take("triple.rho")) cfg.rho = detail::req_named_weights("triple.rho", *v);
  for (const auto& [mark, w] : cfg.rho)
    if (!(w >= 0.0))
      throw std::invalid_argument("config: key 'triple.rho' has a negative weight for '" + mark +
                                  "'");
  if (auto v = take("triple.j.type")) cfg.jump.type = *v;
  if (auto v = take("triple.j.atoms")) cfg.jump.atoms = detail::req_atoms("triple.j.atoms", *v);
  if (auto v = take("triple.j.j0")) cfg.jump.j0 = detail::req_double("triple.j.j0", *v);
  if (auto v = take("triple.j.beta")) cfg.jump.beta = detail::req_double("triple.j.beta", *v);
  detail::validate_jump_spec("triple.j", cfg.jump);
  if (auto v = take("triple.varsigma")) cfg.varsigma = detail::req_double("triple.varsigma", *v);
  if (!(cfg.varsigma >= 0.0))
    throw std::invalid_argument("config: key 'triple.varsigma' must be >= 0");

  if (auto v = take("eps")) cfg.eps = detail::req_double("eps", *v);
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("config: key 'eps' must be > 0");
  if (auto v = take("l_max")) cfg.l_max = detail::req_double("l_max", *v);
  if (!(cfg.l_max > 0.0)) throw std::invalid_argument("config: key 'l_max' must be > 0");
  if (auto v = take("n_list")) cfg.n_list = detail::req_ints("n_list", *v);
  for (int n : cfg.n_list)
    if (n < 0) throw std::invalid_argument("config: key 'n_list' must be nonnegative");
  if (auto v = take("n_paths")) cfg.n_paths = static_cast<int>(detail::req_long("n_paths", *v));
  if (cfg.n_paths < 2) throw std::invalid_argument("config: key 'n_paths' must be >= 2");
  if (auto v = take("pilot_reps"))
    cfg.pilot_reps = static_cast<int>(detail::req_long("pilot_reps", *v));
  if (cfg.pilot_reps < 2) throw std::invalid_argument("config: key 'pilot_reps' must be >= 2");
  if (auto v = take("band_level")) cfg.band_level = detail::req_double("band_level", *v);
  if (!(cfg.band_level > 0.0 && cfg.band_level < 1.0))
    throw std::invalid_argument("config: key 'band_level' must lie in (0, 1)");
  if (auto v = take("seed")) cfg.seed = detail::req_u64("seed", *v);
  if (auto v = take("out_dir")) cfg.out_dir = *v;
  if (cfg.out_dir.empty()) throw std::invalid_argument("config: key 'out_dir' must be nonempty");
  if (auto v = take("threads")) cfg.threads = static_cast<int>(detail::req_long("threads", *v));
  if (cfg.threads < 0) throw std::invalid_argument("config: key 'threads' must be >= 0");
  if (auto v = take("delta")) cfg.delta = detail::req_double("delta", *v);
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("config: key 'delta' must be > 0");
  if (auto v = take("fixed_r_min")) {
    cfg.fixed_r_min = detail::req_double("fixed_r_min", *v);
    if (!(*cfg.fixed_r_min > 0.0))
      throw std::invalid_argument("config: key 'fixed_r_min' must be > 0");
  }

  if (auto v = take("functionals.x_times"))
    cfg.functionals.x_times = detail::req_doubles("functionals.x_times", *v);
  for (double t : cfg.functionals.x_times)
    if (!(t > 0.0)) throw std::invalid_argument("config: key 'functionals.x_times' must be > 0");
  if (auto v = take("functionals.t0"))
    cfg.functionals.t0 = detail::req_double("functionals.t0", *v);
  if (!(cfg.functionals.t0 > 0.0))
    throw std::invalid_argument("config: key 'functionals.t0' must be > 0");
  if (auto v = take("functionals.l0"))
    cfg.functionals.l0 = detail::req_double("functionals.l0", *v);
  if (!(cfg.functionals.l0 > 0.0 && cfg.functionals.l0 <= cfg.l_max))
    throw std::invalid_argument("config: key 'functionals.l0' must lie in (0, l_max]");
  if (auto v = take("functionals.grid_m"))
    cfg.functionals.grid_m = static_cast<int>(detail::req_long("functionals.grid_m", *v));
  if (cfg.functionals.grid_m < 1)
    throw std::invalid_argument("config: key 'functionals.grid_m' must be >= 1");

  if (auto v = take("shape_steps"))
    cfg.shape_steps = static_cast<int>(detail::req_long("shape_steps", *v));
  if (cfg.shape_steps < 2) throw std::invalid_argument("config: key 'shape_steps' must be >= 2");
  if (auto v = take("stopped.step")) cfg.stopped_step = detail::req_double("stopped.step", *v);
  if (!(cfg.stopped_step > 0.0))
    throw std::invalid_argument("config: key 'stopped.step' must be > 0");
  if (auto v = take("stopped.cap")) cfg.stopped_cap = detail::req_double("stopped.cap", *v);
  if (!(cfg.stopped_cap > 0.0)) throw std::invalid_argument("config: key 'stopped.cap' must be > 0");

  if (auto v = take("walsh.rho")) cfg.walsh_rho = detail::req_named_weights("walsh.rho", *v);
  for (const auto& [name, w] : cfg.walsh_rho)
    if (!(w >= 0.0))
      throw std::invalid_argument("config: key 'walsh.rho' has a negative weight for '" + name +
                                  "'");
  if (auto v = take("walsh.jump")) cfg.walsh_jump = detail::req_named_weights("walsh.jump", *v);
  if (auto v = take("walsh.radial.type")) cfg.walsh_radial.type = *v;
  if (auto v = take("walsh.radial.atoms"))
    cfg.walsh_radial.atoms = detail::req_atoms("walsh.radial.atoms", *v);
  if (auto v = take("walsh.radial.j0"))
    cfg.walsh_radial.j0 = detail::req_double("walsh.radial.j0", *v);
  if (auto v = take("walsh.radial.beta"))
    cfg.walsh_radial.beta = detail::req_double("walsh.radial.beta", *v);
  detail::validate_jump_spec("walsh.radial", cfg.walsh_radial);
  if (!cfg.walsh_jump.empty() && cfg.walsh_radial.type == "none")
    throw std::invalid_argument("config: key 'walsh.jump' needs walsh.radial.type");
  if (auto v = take("walsh.pieced"))
    cfg.walsh_pieced = static_cast<int>(detail::req_long("walsh.pieced", *v));
  if (cfg.walsh_pieced < 0) throw std::invalid_argument("config: key 'walsh.pieced' must be >= 0");

  if (!rest.empty())
    throw std::invalid_argument("config: unknown key '" + rest.begin()->first + "'");
  return cfg;
}

inline RunConfig parse_run_config_file(const std::string& path) {
  return parse_run_config(parse_kv_file(path));
}

namespace detail {

inline std::string join_named(const std::vector<std::pair<std::string, double>>& v) {
  std::string out;
  for (const auto& [name, w] : v) {
    if (!out.empty()) out += ",";
    out += name + ":" + fmt_double(w);
  }
  return out;
}

inline std::string join_atoms(const std::vector<std::pair<double, double>>& v) {
  std::string out;
  for (const auto& [r, w] : v) {
    if (!out.empty()) out += ",";
    out += fmt_double(r) + ":" + fmt_double(w);
  }
  return out;
}

inline void jump_spec_manifest(std::map<std::string, std::string>& m, const std::string& prefix,
                               const JumpSpecConfig& j) {
  m[prefix + ".type"] = j.type;
  if (j.type == "atomic") m[prefix + ".atoms"] = join_atoms(j.atoms);
  if (j.type == "power_tail") {
    m[prefix + ".j0"] = fmt_double(j.j0);
    m[prefix + ".beta"] = fmt_double(j.beta);
  }
}

}  // namespace detail

// Every parameter that can affect a sample, keyed exactly as in the config
// file; the runner adds resolved values (seed source, thread count) on top.
inline std::map<std::string, std::string> config_manifest(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  m["experiment"] = cfg.experiment;
  m["c"] = fmt_double(cfg.scheme.c);
  m["alpha"] = fmt_double(cfg.scheme.alpha);
  m["kappa"] = fmt_double(cfg.scheme.kappa);
  if (cfg.scheme.beta) m["beta"] = fmt_double(*cfg.scheme.beta);
  m["triple.rho"] = detail::join_named(cfg.rho);
  detail::jump_spec_manifest(m, "triple.j", cfg.jump);
  m["triple.varsigma"] = fmt_double(cfg.varsigma);
  m["eps"] = fmt_double(cfg.eps);
  m["l_max"] = fmt_double(cfg.l_max);
  {
    std::string ns;
    for (int n : cfg.n_list) {
      if (!ns.empty()) ns += ",";
      ns += std::to_string(n);
    }
    m["n_list"] = ns;
  }
  m["n_paths"] = std::to_string(cfg.n_paths);
  m["pilot_reps"] = std::to_string(cfg.pilot_reps);
  m["band_level"] = fmt_double(cfg.band_level);
  m["seed"] = std::to_string(cfg.seed);
  m["out_dir"] = cfg.out_dir;
  m["threads"] = std::to_string(cfg.threads);
  m["delta"] = fmt_double(cfg.delta);
  if (cfg.fixed_r_min) m["fixed_r_min"] = fmt_double(*cfg.fixed_r_min);
  {
    std::string xs;
    for (double t : cfg.functionals.x_times) {
      if (!xs.empty()) xs += ",";
      xs += fmt_double(t);
    }
    m["functionals.x_times"] = xs;
  }
  m["functionals.t0"] = fmt_double(cfg.functionals.t0);
  m["functionals.l0"] = fmt_double(cfg.functionals.l0);
  m["functionals.grid_m"] = std::to_string(cfg.functionals.grid_m);
  m["shape_steps"] = std::to_string(cfg.shape_steps);
  m["stopped.step"] = fmt_double(cfg.stopped_step);
  m["stopped.cap"] = fmt_double(cfg.stopped_cap);
  if (cfg.experiment == "walsh") {
    m["walsh.rho"] = detail::join_named(cfg.walsh_rho);
    if (!cfg.walsh_jump.empty()) m["walsh.jump"] = detail::join_named(cfg.walsh_jump);
    detail::jump_spec_manifest(m, "walsh.radial", cfg.walsh_radial);
    m["walsh.pieced"] = std::to_string(cfg.walsh_pieced);
  }
  return m;
}

}  // namespace exc
