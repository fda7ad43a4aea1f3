#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "exc/path.hpp"

namespace exc {

// Certified upper bound on the Skorokhod J1 modulus over [0, horizon],
// restricted to piecewise-linear time changes whose breakpoints align event
// times of the two paths. The witness attains the reported distance.
struct J1Result {
  double distance = 0.0;
  TimeChange witness;
};

struct J1Options {
  int skip_cap = 10;          // events skippable between consecutive matches, per side
  size_t max_anchors = 1200;  // anchors per path; larger event sets are thinned
};

namespace detail {

// times where the path may change affine piece: knots, finite lifetime, capped at horizon
inline std::vector<double> event_times(const CadlagPath& p, double horizon) {
  std::vector<double> ts;
  ts.push_back(0.0);
  for (const auto& k : p.knots()) {
    if (k.t > 0.0 && k.t < horizon) ts.push_back(k.t);
  }
  double life = p.lifetime();
  if (life > 0.0 && life < horizon && std::isfinite(life)) ts.push_back(life);
  ts.push_back(horizon);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

// sup over [lo, hi) of |a(t) - b(I(t))| with I affine mapping [lo,hi] onto
// [blo,bhi]; both compositions are affine between merged breakpoints, so the
// sup sits at piece endpoints (right values and left limits). bail: stop
// early once the running max reaches it.
inline double window_cost(const CadlagPath& a, const std::vector<double>& ea,
                          const CadlagPath& b, const std::vector<double>& eb,
                          double lo, double hi, double blo, double bhi, double bail) {
  double slope = (bhi - blo) / (hi - lo);
  std::vector<double> ts;
  {
    auto i0 = std::upper_bound(ea.begin(), ea.end(), lo);
    for (auto it = i0; it != ea.end() && *it < hi; ++it) ts.push_back(*it);
    auto j0 = std::upper_bound(eb.begin(), eb.end(), blo);
    for (auto it = j0; it != eb.end() && *it < bhi; ++it)
      ts.push_back(lo + (*it - blo) / slope);
    ts.push_back(lo);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  auto image = [&](double t) { return t >= hi ? bhi : blo + (t - lo) * slope; };
  double m = 0.0;
  for (size_t k = 0; k < ts.size(); ++k) {
    double t = std::max(ts[k], lo);
    m = std::max(m, evaluate(a, t).dist(evaluate(b, image(t))));
    if (m >= bail) return m;
    double tr = k + 1 < ts.size() ? ts[k + 1] : hi;
    m = std::max(m, evaluate_left(a, tr).dist(evaluate_left(b, image(tr))));
    if (m >= bail) return m;
  }
  return m;
}

}  // namespace detail

// exact uniform distance over [0, horizon], including the value at the horizon
inline double uniform_distance(const CadlagPath& a, const CadlagPath& b, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("uniform_distance: horizon must be > 0");
  auto ea = detail::event_times(a, horizon);
  auto eb = detail::event_times(b, horizon);
  double m = detail::window_cost(a, ea, b, eb, 0.0, horizon, 0.0, horizon, kInf);
  return std::max(m, evaluate(a, horizon).dist(evaluate(b, horizon)));
}

// cost of a candidate time change: max of its deviation from the identity and
// the value discrepancy sup over [0, horizon] of |a - b(I)|
inline double timechange_cost(const CadlagPath& a, const CadlagPath& b, double horizon,
                              const TimeChange& tc) {
  if (!(horizon > 0.0)) throw std::invalid_argument("timechange_cost: horizon must be > 0");
  auto ea = detail::event_times(a, horizon);
  std::vector<double> cuts = ea;
  for (const auto& bp : tc.breakpoints())
    if (bp.first > 0.0 && bp.first < horizon) cuts.push_back(bp.first);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto eb = detail::event_times(b, std::max(tc(horizon), horizon) + 1.0);
  double m = tc.max_deviation(horizon);
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    double lo = cuts[k], hi = cuts[k + 1];
    m = std::max(m, detail::window_cost(a, ea, b, eb, lo, hi, tc(lo), tc(hi), kInf));
  }
  return std::max(m, evaluate(a, horizon).dist(evaluate(b, tc(horizon))));
}

// Banded dynamic program over matchings of the two event sets. A matched pair
// (u, v) pins I(u) = v; between matched pairs I is affine and up to skip_cap
// events on each side are absorbed into the window. The identity and every
// hint are competing candidates, so the result never exceeds the uniform
// distance and hint costs. dist(a, a) is exactly 0.
inline J1Result j1_distance(const CadlagPath& a, const CadlagPath& b, double horizon,
                            const std::vector<TimeChange>& hints = {},
                            const J1Options& opts = {}) {
  if (!(horizon > 0.0)) throw std::invalid_argument("j1_distance: horizon must be > 0");
  if (a.dim() != b.dim()) throw std::invalid_argument("j1_distance: dimension mismatch");

  auto ea = detail::event_times(a, horizon);
  auto eb = detail::event_times(b, horizon);

  auto thin = [&](std::vector<double> ts) {
    if (ts.size() <= opts.max_anchors) return ts;
    std::vector<double> out;
    out.reserve(opts.max_anchors);
    size_t n = ts.size();
    for (size_t k = 0; k + 1 < opts.max_anchors; ++k)
      out.push_back(ts[k * (n - 1) / (opts.max_anchors - 1)]);
    out.push_back(ts.back());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  std::vector<double> A = thin(ea), B = thin(eb);
  const size_t pa = A.size(), pb = B.size();

  J1Result best;
  best.distance = uniform_distance(a, b, horizon);
  best.witness = TimeChange::identity();
  for (const auto& h : hints) {
    double c = timechange_cost(a, b, horizon, h);
    if (c < best.distance) {
      best.distance = c;
      best.witness = h;
    }
  }
  if (best.distance == 0.0) return best;

  const double inf = std::numeric_limits<double>::infinity();
  const double endgap = evaluate(a, horizon).dist(evaluate(b, horizon));
  if (endgap >= best.distance) return best;

  std::vector<double> cost(pa * pb, inf);
  std::vector<int> par(pa * pb, -1);
  cost[0] = endgap;
  const int K = opts.skip_cap + 1;
  for (size_t i = 0; i + 1 < pa; ++i) {
    for (size_t j = 0; j + 1 < pb; ++j) {
      double cur = cost[i * pb + j];
      if (cur >= best.distance) continue;
      for (size_t i2 = i + 1; i2 < pa && i2 <= i + K; ++i2) {
        for (size_t j2 = j + 1; j2 < pb && j2 <= j + K; ++j2) {
          if ((i2 == pa - 1) != (j2 == pb - 1)) continue;
          double tdev = std::fabs(A[i2] - B[j2]);
          if (tdev >= best.distance) {
            if (B[j2] > A[i2]) break;
            continue;
          }
          double floor = std::max(cur, tdev);
          double& slot = cost[i2 * pb + j2];
          double bail = std::min(best.distance, slot);
          if (floor >= bail) continue;
          double wc = detail::window_cost(a, ea, b, eb, A[i], A[i2], B[j], B[j2], bail);
          double total = std::max(floor, wc);
          if (total < slot) {
            slot = total;
            par[i2 * pb + j2] = static_cast<int>(i * pb + j);
          }
        }
      }
    }
  }

  double dp = cost[pa * pb - 1];
  if (dp < best.distance) {
    std::vector<std::pair<double, double>> pts;
    int node = static_cast<int>(pa * pb - 1);
    while (node >= 0) {
      size_t i = static_cast<size_t>(node) / pb, j = static_cast<size_t>(node) % pb;
      pts.emplace_back(A[i], B[j]);
      node = par[node];
    }
    std::reverse(pts.begin(), pts.end());
    best.distance = dp;
    best.witness = TimeChange::through(std::move(pts));
  }
  return best;
}

}  // namespace exc
