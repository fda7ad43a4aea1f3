#pragma once
// Poisson point processes of excursions on [0, l_max] x D, truncated to the
// sampler's reachable set and carrying the compensating drift rate for the
// discarded small-duration mass.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "exc/io.hpp"
#include "exc/measure.hpp"
#include "exc/path.hpp"
#include "exc/rng.hpp"
#include "exc/scaling.hpp"

namespace exc {

struct MarkedPoint {
  double l = 0.0;  // local-time location in (0, l_max)
  CadlagPath excursion;
  std::string mark;
};

struct MarkedPointProcess {
  std::vector<MarkedPoint> points;  // sorted by l, strictly increasing
  double l_max = 0.0;
  double truncation_eps = 0.0;
  double compensator_rate = 0.0;  // mean discarded duration per unit local time
};

// PPP with intensity leb x nu(. ; T0 > eps) on [0, l_max]: Poisson count,
// iid uniform locations, iid conditioned excursions.
inline MarkedPointProcess sample_ppp(const ExcursionMeasureSpec& spec, double l_max, double eps,
                                     Rng& rng, const std::string& mark = std::string()) {
  if (!(l_max > 0.0)) throw std::invalid_argument("sample_ppp: l_max must be > 0");
  MarkedPointProcess pp;
  pp.l_max = l_max;
  pp.truncation_eps = eps;
  pp.compensator_rate = spec.small_duration_mean(eps);
  const double rate = spec.tail_mass(eps);
  const long n = rng.poisson(rate * l_max);
  pp.points.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    MarkedPoint pt;
    pt.l = l_max * rng.uniform_pos();
    pt.excursion = spec.sample_big(eps, rng);
    pt.mark = mark;
    pp.points.push_back(std::move(pt));
  }
  std::sort(pp.points.begin(), pp.points.end(),
            [](const MarkedPoint& a, const MarkedPoint& b) { return a.l < b.l; });
  return pp;
}

// Superposition of independent processes on the same interval. Location ties
// have probability zero in law; a realized tie is broken by re-drawing the
// second point's location. Compensator rates add.
inline MarkedPointProcess superpose(const MarkedPointProcess& a, const MarkedPointProcess& b,
                                    Rng& rng) {
  if (a.l_max != b.l_max) throw std::invalid_argument("superpose: l_max mismatch");
  MarkedPointProcess out;
  out.l_max = a.l_max;
  out.truncation_eps = std::min(a.truncation_eps, b.truncation_eps);
  out.compensator_rate = a.compensator_rate + b.compensator_rate;
  out.points = a.points;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  bool tied = true;
  while (tied) {
    std::sort(out.points.begin(), out.points.end(),
              [](const MarkedPoint& x, const MarkedPoint& y) { return x.l < y.l; });
    tied = false;
    for (size_t i = 1; i < out.points.size(); ++i) {
      if (out.points[i].l == out.points[i - 1].l) {
        out.points[i].l = out.l_max * rng.uniform_pos();
        tied = true;
      }
    }
  }
  return out;
}

// Image of the process under the n-th scaling map: locations shrink by the
// local-time factor c^{-gamma n}, excursion paths by Psi_alpha^n, and the
// compensator by the drift factor c^{-(1-gamma) n}. gamma is a free exponent,
// not tied to the scheme's alpha kappa.
inline MarkedPointProcess rescale_point_process(const MarkedPointProcess& pp,
                                                const ScalingScheme& s, double gamma, int n) {
  if (!(s.c > 1.0) || !(s.alpha > 0.0))
    throw std::invalid_argument("rescale_point_process: need c > 1 and alpha > 0");
  if (n < 0) throw std::invalid_argument("rescale_point_process: n must be >= 0");
  const double loc_mul = std::pow(s.c, -gamma * n);
  const double dur_mul = std::pow(s.c, -static_cast<double>(n));
  MarkedPointProcess out;
  out.l_max = pp.l_max * loc_mul;
  out.truncation_eps = pp.truncation_eps * dur_mul;
  out.compensator_rate = pp.compensator_rate * std::pow(s.c, -(1.0 - gamma) * n);
  out.points.reserve(pp.points.size());
  for (const auto& pt : pp.points) {
    MarkedPoint q;
    q.l = pt.l * loc_mul;
    q.excursion = apply_psi(s.c, s.alpha, n, pt.excursion);
    q.mark = pt.mark;
    out.points.push_back(std::move(q));
  }
  return out;
}

// Index CSV `l,lifetime,sup,mark,path_file` plus one path CSV per point.
inline void dump_point_process(const MarkedPointProcess& pp, const std::string& dir,
                               const std::string& prefix = "point") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream idx(fs::path(dir) / (prefix + "s.csv"));
  if (!idx) throw std::runtime_error("dump_point_process: cannot open index in " + dir);
  idx << "l,lifetime,sup,mark,path_file\n";
  char name[64];
  for (size_t i = 0; i < pp.points.size(); ++i) {
    const auto& pt = pp.points[i];
    std::snprintf(name, sizeof name, "%s_%06zu.csv", prefix.c_str(), i);
    write_path_csv((fs::path(dir) / name).string(), pt.excursion);
    idx << fmt_double(pt.l) << ',' << fmt_double(pt.excursion.lifetime()) << ','
        << fmt_double(sup_norm(pt.excursion)) << ',' << pt.mark << ',' << name << '\n';
  }
  std::map<std::string, std::string> meta;
  meta["l_max"] = fmt_double(pp.l_max);
  meta["truncation_eps"] = fmt_double(pp.truncation_eps);
  meta["compensator_rate"] = fmt_double(pp.compensator_rate);
  meta["count"] = std::to_string(pp.points.size());
  write_manifest((fs::path(dir) / (prefix + "s.manifest")).string(), meta);
}

}  // namespace exc
