#pragma once
// Reconstruction of the process from its excursion point process: the time
// change eta, its inverse local time, the pieced path, and the exact inverse
// operation recovering the points.

#include <algorithm>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "exc/io.hpp"
#include "exc/path.hpp"
#include "exc/point_process.hpp"

namespace exc {

// eta(l) = drift * l + sum of durations at locations <= l. Right-continuous,
// strictly increasing iff drift > 0.
struct EtaSteps {
  std::vector<double> locations;  // strictly increasing, in (0, l_max]
  std::vector<double> durations;  // each > 0 and finite
  double drift = 0.0;             // varsigma + compensator rate
  double l_max = 0.0;

  double eta(double l) const {
    if (l < 0.0) throw std::invalid_argument("eta: l must be >= 0");
    double s = drift * l;
    for (size_t i = 0; i < locations.size() && locations[i] <= l; ++i) s += durations[i];
    return s;
  }

  double eta_left(double l) const {
    if (l < 0.0) throw std::invalid_argument("eta_left: l must be >= 0");
    double s = drift * l;
    for (size_t i = 0; i < locations.size() && locations[i] < l; ++i) s += durations[i];
    return s;
  }

  double total() const { return eta(l_max); }
};

inline EtaSteps build_eta(const MarkedPointProcess& pp, double varsigma) {
  if (!(varsigma >= 0.0)) throw std::invalid_argument("build_eta: varsigma must be >= 0");
  EtaSteps e;
  e.drift = varsigma + pp.compensator_rate;
  e.l_max = pp.l_max;
  e.locations.reserve(pp.points.size());
  e.durations.reserve(pp.points.size());
  double prev = 0.0;
  for (const auto& pt : pp.points) {
    if (!(pt.l > prev && pt.l <= pp.l_max))
      throw std::invalid_argument("build_eta: locations must be strictly increasing in (0, l_max]");
    const double T = pt.excursion.lifetime();
    if (!(T > 0.0) || T == kInf)
      throw std::invalid_argument("build_eta: excursion lifetimes must lie in (0, inf)");
    e.locations.push_back(pt.l);
    e.durations.push_back(T);
    prev = pt.l;
  }
  return e;
}

struct LocalTimeResult {
  CadlagPath path;       // L(t), scalar, nondecreasing
  double valid_to = 0.0; // = eta(l_max); L is censored (held constant) beyond
  bool right_censored = false;  // drift == 0: L jumps to l_max at the last excursion end
};

// L = right-continuous inverse of eta. With drift > 0 it is continuous and
// piecewise linear: slope 1/drift off the excursion intervals, flat on them.
// With drift == 0 it is a pure jump path.
inline LocalTimeResult build_local_time(const EtaSteps& e) {
  if (!(e.l_max > 0.0)) throw std::invalid_argument("build_local_time: l_max must be > 0");
  LocalTimeResult out;
  out.valid_to = e.total();
  std::vector<Knot> ks;
  if (e.drift == 0.0) {
    out.right_censored = true;
    if (e.locations.empty())
      throw std::invalid_argument("build_local_time: drift 0 with no points leaves L undefined");
    double t = 0.0;
    for (size_t i = 0; i < e.locations.size(); ++i) {
      ks.push_back({t, Vec::scalar(e.locations[i]), SegmentMode::ConstantRight});
      t += e.durations[i];
    }
    ks.push_back({t, Vec::scalar(e.l_max), SegmentMode::ConstantRight});
    out.path = CadlagPath::make(std::move(ks), kInf);
    return out;
  }
  ks.push_back({0.0, Vec::scalar(0.0), SegmentMode::Linear});
  for (size_t i = 0; i < e.locations.size(); ++i) {
    const double l = e.locations[i];
    const double a = e.eta_left(l);
    const double b = a + e.durations[i];
    ks.push_back({a, Vec::scalar(l), SegmentMode::Linear});
    ks.push_back({b, Vec::scalar(l), SegmentMode::Linear});
  }
  ks.push_back({out.valid_to, Vec::scalar(e.l_max), SegmentMode::ConstantRight});
  // a final excursion ending exactly at eta(l_max) collides with the closing knot
  if (ks.size() >= 2 && ks[ks.size() - 2].t == ks.back().t) ks.erase(ks.end() - 2);
  out.path = CadlagPath::make(std::move(ks), kInf);
  return out;
}

struct PiecedTriple {
  CadlagPath x;
  CadlagPath local_time;
  EtaSteps eta;
  double varsigma_eff = 0.0;
  double valid_to = 0.0;
  bool right_censored = false;
};

// X(t): the excursion with location l, translated to start at eta(l-); zero
// in between, stored as explicit constant-right zero knots.
inline PiecedTriple piece_together(const MarkedPointProcess& pp, double varsigma) {
  PiecedTriple out;
  out.eta = build_eta(pp, varsigma);
  out.varsigma_eff = out.eta.drift;
  auto lt = build_local_time(out.eta);
  out.local_time = std::move(lt.path);
  out.valid_to = lt.valid_to;
  out.right_censored = lt.right_censored;

  int dim = 1;
  for (const auto& pt : pp.points) dim = pt.excursion.dim();
  std::vector<Knot> ks;
  double cursor = 0.0;  // current time, X == 0 on [cursor, next excursion start)
  bool at_zero_knot = false;
  for (size_t i = 0; i < out.eta.locations.size(); ++i) {
    const double start = out.eta.eta_left(out.eta.locations[i]);
    if (!at_zero_knot && start > cursor) {
      ks.push_back({cursor, Vec::zero(dim), SegmentMode::ConstantRight});
    }
    const auto& exc = pp.points[i].excursion;
    const auto& ek = exc.knots();
    for (size_t k = 0; k < ek.size(); ++k) {
      const double t = start + ek[k].t;
      Vec v = ek[k].value;
      SegmentMode m = ek[k].mode;
      if (ek[k].t == exc.lifetime()) m = SegmentMode::ConstantRight;  // holds the zero after
      if (!ks.empty() && ks.back().t == t) {
        // collision with the previous excursion's terminal zero: keep the start value
        ks.back() = {t, v, m};
      } else {
        ks.push_back({t, v, m});
      }
    }
    cursor = start + exc.lifetime();
    at_zero_knot = !ek.empty() && ek.back().t == exc.lifetime();
    if (!at_zero_knot) {
      ks.push_back({cursor, Vec::zero(dim), SegmentMode::ConstantRight});
      at_zero_knot = true;
    }
  }
  if (ks.empty()) ks.push_back({0.0, Vec::zero(dim), SegmentMode::ConstantRight});
  out.x = CadlagPath::make(std::move(ks), kInf);
  return out;
}

// Lebesgue time X spends at zero on [0, t], summed exactly from the knots.
inline double occupation_time_at_zero(const CadlagPath& x, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("occupation_time_at_zero: t must be >= 0");
  const auto& ks = x.knots();
  double acc = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    const double a = ks[i].t;
    if (a >= t) break;
    double b = (i + 1 < ks.size()) ? ks[i + 1].t : kInf;
    if (b > x.lifetime()) b = x.lifetime();
    if (b <= a) continue;
    bool zero_seg = false;
    if (ks[i].value.is_zero()) {
      if (ks[i].mode == SegmentMode::ConstantRight) zero_seg = true;
      else if (i + 1 < ks.size() && ks[i + 1].value.is_zero()) zero_seg = true;
      else if (i + 1 == ks.size()) zero_seg = true;
    }
    if (zero_seg) acc += std::min(b, t) - a;
  }
  if (t > x.lifetime()) acc += t - x.lifetime();
  return acc;
}

// Inverse of piece_together: the flat stretches of L are the excursion
// intervals, the flat value is the location. pre: L is flat exactly off the
// zero set of x. Knot recovery is exact subtraction of the interval start.
inline MarkedPointProcess extract_excursions(const CadlagPath& x, const CadlagPath& l_of_t) {
  const auto& lk = l_of_t.knots();
  MarkedPointProcess out;
  out.l_max = lk.back().value[0];
  const auto& xk = x.knots();
  size_t xi = 0;
  size_t i = 0;
  while (i + 1 <= lk.size()) {
    // maximal flat run starting at knot i
    double t_a;
    double t_b;
    double level;
    if (lk[i].mode == SegmentMode::ConstantRight && i + 1 < lk.size()) {
      t_a = lk[i].t;
      t_b = lk[i + 1].t;
      level = lk[i].value[0];
      i += 1;
    } else if (i + 1 < lk.size() && lk[i + 1].value[0] == lk[i].value[0]) {
      t_a = lk[i].t;
      size_t j = i + 1;
      while (j + 1 < lk.size() && lk[j + 1].value[0] == lk[i].value[0]) ++j;
      t_b = lk[j].t;
      level = lk[i].value[0];
      i = j;
    } else {
      ++i;
      continue;
    }
    if (!(t_b > t_a)) continue;
    if (level <= 0.0) continue;  // leading flat of a censored-only path
    // an excursion interval must carry a nonzero stretch of x
    if (evaluate(x, t_a).is_zero() && evaluate(x, 0.5 * (t_a + t_b)).is_zero())
      throw std::invalid_argument("extract_excursions: zero sets inconsistent");
    MarkedPoint pt;
    pt.l = level;
    std::vector<Knot> eks;
    while (xi < xk.size() && xk[xi].t < t_a) ++xi;
    size_t xj = xi;
    // the knot at t_b is the terminal zero (or, with drift 0, the next
    // excursion's start); either way it is re-synthesized, not copied
    while (xj < xk.size() && xk[xj].t < t_b) {
      eks.push_back({xk[xj].t - t_a, xk[xj].value, xk[xj].mode});
      ++xj;
    }
    const double lifetime = t_b - t_a;
    eks.push_back({lifetime, Vec::zero(x.dim()), SegmentMode::ConstantRight});
    pt.excursion = CadlagPath::make(std::move(eks), lifetime);
    out.points.push_back(std::move(pt));
  }
  return out;
}

inline void dump_pieced_triple(const PiecedTriple& tr, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_path_csv((fs::path(dir) / "x.csv").string(), tr.x);
  write_path_csv((fs::path(dir) / "local_time.csv").string(), tr.local_time);
  std::ofstream eta((fs::path(dir) / "eta.csv").string());
  if (!eta) throw std::runtime_error("dump_pieced_triple: cannot open eta.csv");
  eta << "location,duration\n";
  for (size_t i = 0; i < tr.eta.locations.size(); ++i)
    eta << fmt_double(tr.eta.locations[i]) << ',' << fmt_double(tr.eta.durations[i]) << '\n';
  std::map<std::string, std::string> meta;
  meta["varsigma_eff"] = fmt_double(tr.varsigma_eff);
  meta["l_max"] = fmt_double(tr.eta.l_max);
  meta["valid_to"] = fmt_double(tr.valid_to);
  meta["right_censored"] = tr.right_censored ? "1" : "0";
  write_manifest((fs::path(dir) / "triple.manifest").string(), meta);
}

}  // namespace exc
