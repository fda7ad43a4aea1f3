#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "exc/common.hpp"

namespace exc {

// Interpolation rule on [knot.t, next knot.t).
enum class SegmentMode : uint8_t { ConstantRight, Linear };

struct Knot {
  double t = 0.0;
  Vec value;
  SegmentMode mode = SegmentMode::ConstantRight;
};

// Cadlag path on [0, inf) with finitely many knots. The path evaluates to the
// knot-defined value before `lifetime` and to exactly 0 from `lifetime` on;
// lifetime 0 is the zero path. Beyond the last knot (but before lifetime) the
// last value extends constantly. Knots never lie past lifetime; a knot exactly
// at a finite lifetime must carry the zero value (used by paths absorbed
// through a linear segment).
class CadlagPath {
 public:
  CadlagPath() { *this = zero(1); }

  static CadlagPath zero(int d) {
    if (d < 1 || d > 2) throw std::invalid_argument("CadlagPath: dim must be 1 or 2");
    CadlagPath p(raw_tag{});
    p.dim_ = d;
    p.lifetime_ = 0.0;
    p.knots_ = {Knot{0.0, Vec::zero(d), SegmentMode::ConstantRight}};
    return p;
  }

  static CadlagPath make(std::vector<Knot> knots, double lifetime) {
    if (!(lifetime >= 0.0)) throw std::invalid_argument("CadlagPath: lifetime must be >= 0");
    if (lifetime == 0.0) {
      int d = knots.empty() ? 1 : knots.front().value.dim;
      for (const auto& k : knots)
        if (!k.value.is_zero()) throw std::invalid_argument("CadlagPath: lifetime 0 requires the zero path");
      return zero(d);
    }
    if (knots.empty()) throw std::invalid_argument("CadlagPath: no knots");
    if (knots.front().t != 0.0) throw std::invalid_argument("CadlagPath: first knot must sit at t = 0");
    int d = knots.front().value.dim;
    double prev = -1.0;
    for (const auto& k : knots) {
      if (!std::isfinite(k.t)) throw std::invalid_argument("CadlagPath: non-finite knot time");
      if (k.value.dim != d) throw std::invalid_argument("CadlagPath: mixed knot dimensions");
      if (!(k.t > prev)) throw std::invalid_argument("CadlagPath: knot times must be strictly increasing");
      for (int i = 0; i < k.value.dim; ++i)
        if (!std::isfinite(k.value[i])) throw std::invalid_argument("CadlagPath: non-finite knot value");
      if (k.t > lifetime) throw std::invalid_argument("CadlagPath: knot beyond lifetime");
      if (k.t == lifetime && !k.value.is_zero())
        throw std::invalid_argument("CadlagPath: knot at lifetime must be zero");
      prev = k.t;
    }
    CadlagPath p(raw_tag{});
    p.dim_ = d;
    p.lifetime_ = lifetime;
    p.knots_ = std::move(knots);
    return p;
  }

  int dim() const { return dim_; }
  double lifetime() const { return lifetime_; }
  const std::vector<Knot>& knots() const { return knots_; }
  bool is_zero_path() const { return lifetime_ == 0.0; }

  // index of last knot with time <= t; requires t >= 0
  size_t segment_index(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double v, const Knot& k) { return v < k.t; });
    return static_cast<size_t>(it - knots_.begin()) - 1;
  }

 private:
  struct raw_tag {};
  explicit CadlagPath(raw_tag) {}

  int dim_ = 1;
  double lifetime_ = 0.0;
  std::vector<Knot> knots_;
};

inline Vec evaluate(const CadlagPath& p, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("evaluate: t must be >= 0");
  if (t >= p.lifetime()) return Vec::zero(p.dim());
  const auto& ks = p.knots();
  size_t i = p.segment_index(t);
  const Knot& k = ks[i];
  if (k.mode == SegmentMode::Linear && i + 1 < ks.size()) {
    const Knot& nk = ks[i + 1];
    double s = (t - k.t) / (nk.t - k.t);
    Vec r = k.value;
    for (int d = 0; d < r.dim; ++d) r[d] = k.value[d] + s * (nk.value[d] - k.value[d]);
    return r;
  }
  return k.value;
}

// Left limit at t. At t = 0 this is the value at 0; past the lifetime it is 0;
// exactly at a finite lifetime it is the limit of the pre-absorption values.
inline Vec evaluate_left(const CadlagPath& p, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("evaluate_left: t must be >= 0");
  if (t == 0.0) return evaluate(p, 0.0);
  if (t > p.lifetime()) return Vec::zero(p.dim());
  const auto& ks = p.knots();
  // segment containing times just below t
  auto it = std::lower_bound(ks.begin(), ks.end(), t,
                             [](const Knot& k, double v) { return k.t < v; });
  size_t i = static_cast<size_t>(it - ks.begin());  // first knot with time >= t
  const Knot& k = ks[i - 1];
  if (k.mode == SegmentMode::Linear && i < ks.size()) {
    const Knot& nk = ks[i];
    double s = (t - k.t) / (nk.t - k.t);
    Vec r = k.value;
    for (int d = 0; d < r.dim; ++d) r[d] = k.value[d] + s * (nk.value[d] - k.value[d]);
    return r;
  }
  return k.value;
}

// First time in (0, inf) at which the path equals x, honoring the convention
// that a value held on a right-neighborhood of 0 counts as a hit at 0. For
// planar paths a linear crossing is solved on the coordinate with the largest
// slope and the other coordinate must agree within 1e-9 relative. Returns
// +inf when the level is never reached; the zero level is always reached at a
// finite lifetime.
inline double hitting_time(const CadlagPath& p, const Vec& x) {
  if (x.dim != p.dim()) throw std::invalid_argument("hitting_time: dimension mismatch");
  if (p.is_zero_path()) return x.is_zero() ? 0.0 : kInf;
  const auto& ks = p.knots();
  const double life = p.lifetime();
  for (size_t i = 0; i < ks.size(); ++i) {
    const Knot& k = ks[i];
    if (k.t >= life) break;
    bool linear = k.mode == SegmentMode::Linear && i + 1 < ks.size();
    if (!linear) {
      if (k.value.equals(x)) return k.t;  // value persists on [t_i, t_{i+1})
      continue;
    }
    const Knot& nk = ks[i + 1];
    Vec d = nk.value.minus(k.value);
    if (d.is_zero()) {
      if (k.value.equals(x)) return k.t;
      continue;
    }
    int lead = 0;
    for (int c = 1; c < d.dim; ++c)
      if (std::fabs(d[c]) > std::fabs(d[lead])) lead = c;
    double s = (x[lead] - k.value[lead]) / d[lead];
    if (!(s >= 0.0 && s < 1.0)) continue;
    bool consistent = true;
    for (int c = 0; c < d.dim; ++c) {
      double vc = k.value[c] + s * d[c];
      double scale = std::max({1.0, std::fabs(x[c]), std::fabs(k.value[c]), std::fabs(nk.value[c])});
      if (std::fabs(vc - x[c]) > 1e-9 * scale) { consistent = false; break; }
    }
    if (!consistent) continue;
    double t = k.t + s * (nk.t - k.t);
    if (t > 0.0) return t;
    // s == 0 at t == 0 with the path leaving immediately: not a hit, keep going
  }
  if (x.is_zero() && std::isfinite(life)) return life;
  return kInf;
}

inline double first_zero(const CadlagPath& p) { return hitting_time(p, Vec::zero(p.dim())); }

// Exact over the knot set: on linear segments the norm is convex, so segment
// suprema sit at knot values; the zero tail past the lifetime contributes 0.
inline double sup_norm(const CadlagPath& p) {
  double m = 0.0;
  for (const auto& k : p.knots()) m = std::max(m, k.value.norm());
  return m;
}

inline CadlagPath shift(const CadlagPath& p, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("shift: t must be >= 0");
  if (t == 0.0) return p;
  if (t >= p.lifetime()) return CadlagPath::zero(p.dim());
  const auto& ks = p.knots();
  size_t i = p.segment_index(t);
  std::vector<Knot> out;
  out.reserve(ks.size() - i);
  out.push_back(Knot{0.0, evaluate(p, t), ks[i].mode});
  for (size_t j = i + 1; j < ks.size(); ++j) {
    double nt = ks[j].t - t;
    if (nt <= 0.0) continue;  // collapses onto the new origin
    out.push_back(Knot{nt, ks[j].value, ks[j].mode});
  }
  double nlife = p.lifetime() - t;
  // a knot landing past the shifted lifetime can only be the old absorption knot
  while (!out.empty() && out.back().t > nlife) out.pop_back();
  return CadlagPath::make(std::move(out), nlife);
}

// Increasing piecewise-linear bijection of [0, inf): identity slope past the
// last breakpoint. Breakpoints are (time, image) pairs starting at (0, 0).
class TimeChange {
 public:
  TimeChange() : pts_{{0.0, 0.0}} {}

  static TimeChange identity() { return TimeChange(); }

  static TimeChange through(std::vector<std::pair<double, double>> pts) {
    if (pts.empty() || pts.front() != std::make_pair(0.0, 0.0))
      throw std::invalid_argument("TimeChange: must start at (0,0)");
    for (size_t i = 1; i < pts.size(); ++i)
      if (!(pts[i].first > pts[i - 1].first && pts[i].second > pts[i - 1].second))
        throw std::invalid_argument("TimeChange: breakpoints must be strictly increasing");
    TimeChange tc;
    tc.pts_ = std::move(pts);
    return tc;
  }

  const std::vector<std::pair<double, double>>& breakpoints() const { return pts_; }

  double operator()(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("TimeChange: t must be >= 0");
    if (t >= pts_.back().first) return pts_.back().second + (t - pts_.back().first);
    auto it = std::upper_bound(pts_.begin(), pts_.end(), t,
                               [](double v, const auto& p) { return v < p.first; });
    size_t i = static_cast<size_t>(it - pts_.begin()) - 1;
    double s = (t - pts_[i].first) / (pts_[i + 1].first - pts_[i].first);
    return pts_[i].second + s * (pts_[i + 1].second - pts_[i].second);
  }

  TimeChange inverse() const {
    std::vector<std::pair<double, double>> inv;
    inv.reserve(pts_.size());
    for (const auto& p : pts_) inv.emplace_back(p.second, p.first);
    return through(std::move(inv));
  }

  // composition: (this o first)(t) = this(first(t))
  TimeChange after(const TimeChange& first) const {
    std::vector<double> ts;
    for (const auto& p : first.pts_) ts.push_back(p.first);
    TimeChange firstInv = first.inverse();
    for (const auto& p : pts_) ts.push_back(firstInv(p.first));
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<std::pair<double, double>> pts;
    pts.reserve(ts.size());
    for (double t : ts) {
      double img = (*this)(first(t));
      // rounding in the pullbacks can flatten a step; keep the first point
      if (!pts.empty() && !(t > pts.back().first && img > pts.back().second)) continue;
      pts.emplace_back(t, img);
    }
    return through(std::move(pts));
  }

  double max_deviation(double horizon) const {
    double m = std::fabs((*this)(horizon)-horizon);
    for (const auto& p : pts_) {
      if (p.first > horizon) break;
      m = std::max(m, std::fabs(p.second - p.first));
    }
    return m;
  }

 private:
  std::vector<std::pair<double, double>> pts_;
};

}  // namespace exc
