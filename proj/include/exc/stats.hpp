#pragma once
// Two-sample statistics and report verdict helpers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "exc/common.hpp"

namespace exc {

// Exact Kolmogorov-Smirnov statistic via a merge walk; both runs advance past
// a tied value before the CDF gap is taken.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return std::max(d, std::fabs(i / na - j / nb));
}

// First Wasserstein distance from the merged quantile walk:
// integral over u in (0,1) of |Qa(u) - Qb(u)|. With equal sample sizes this
// reduces to the mean absolute gap between matched order statistics.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double u = 0.0, w = 0.0;
  while (i < a.size() && j < b.size()) {
    const double ua = (i + 1) / na;
    const double ub = (j + 1) / nb;
    const double nu = std::min(ua, ub);
    w += (nu - u) * std::fabs(a[i] - b[j]);
    u = nu;
    if (ua == nu) ++i;
    if (ub == nu) ++j;
  }
  return w;
}

// Szekely-Rizzo energy distance between planar samples:
// 2 E|X-Y| - E|X-X'| - E|Y-Y'|. Nonnegative, zero iff equal laws. Inputs are
// thinned to at most cap points by a deterministic stride so the quadratic
// pair loop stays bounded.
inline double energy_distance_2d(const std::vector<Vec>& x, const std::vector<Vec>& y,
                                 size_t cap = 2000) {
  if (x.empty() || y.empty()) throw std::invalid_argument("energy_distance_2d: empty sample");
  auto pick = [cap](const std::vector<Vec>& v) {
    if (v.size() <= cap) return v;
    std::vector<Vec> out;
    out.reserve(cap);
    const double step = static_cast<double>(v.size()) / static_cast<double>(cap);
    for (size_t k = 0; k < cap; ++k)
      out.push_back(v[static_cast<size_t>(static_cast<double>(k) * step)]);
    return out;
  };
  const std::vector<Vec> xs = pick(x), ys = pick(y);
  auto mean_cross = [](const std::vector<Vec>& u, const std::vector<Vec>& v) {
    double s = 0.0;
    for (const auto& a : u)
      for (const auto& b : v) s += a.dist(b);
    return s / (static_cast<double>(u.size()) * static_cast<double>(v.size()));
  };
  return 2.0 * mean_cross(xs, ys) - mean_cross(xs, xs) - mean_cross(ys, ys);
}

// Empirical (1 - level) quantile of a statistic under the null, evaluated on
// n_reps independent same-law replicate pairs supplied by the caller.
inline double null_band(const std::function<double(int)>& stat_for_rep, int n_reps,
                        double level) {
  if (n_reps < 2) throw std::invalid_argument("null_band: need at least 2 reps");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("null_band: bad level");
  std::vector<double> s(static_cast<size_t>(n_reps));
  for (int r = 0; r < n_reps; ++r) s[static_cast<size_t>(r)] = stat_for_rep(r);
  std::sort(s.begin(), s.end());
  const double q = (1.0 - level) * static_cast<double>(n_reps - 1);
  const size_t lo = static_cast<size_t>(q);
  if (lo + 1 >= s.size()) return s.back();
  const double frac = q - static_cast<double>(lo);
  return s[lo] + frac * (s[lo + 1] - s[lo]);
}

// Rises in a sequence that is expected to decrease.
inline int trend_inversions(const std::vector<double>& v) {
  int c = 0;
  for (size_t k = 0; k + 1 < v.size(); ++k)
    if (v[k + 1] > v[k]) ++c;
  return c;
}

inline bool decreasing_trend(const std::vector<double>& v, int allowed = 1) {
  return trend_inversions(v) <= allowed;
}

// Sign-preserving log1p compression for report rows.
inline double slog(double x) { return x >= 0.0 ? std::log1p(x) : -std::log1p(-x); }

struct MeanErr {
  double mean;
  double se;
};

inline MeanErr mean_stderr(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("mean_stderr: need at least 2 values");
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ls_slope: need matched samples of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ls_slope: degenerate x");
  return sxy / sxx;
}

}  // namespace exc
