#pragma once
// Concrete excursion measures presented as samplers, plus the stopped-process
// laws they are built from.
//
// Normalization convention: the reflecting-Brownian measure carries a free
// positive constant `a` (the local-time convention). With tail masses
//   duration:  nu(T0 > eps) = a * sqrt(2/pi) / sqrt(eps)
//   height:    nu(sup >= r) = a / r
// the hitting constant nu(T_1 < T0) equals a. Everything downstream uses
// normalization-free ratios.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exc/path.hpp"
#include "exc/rng.hpp"

namespace exc {

inline double norm_pdf(double x) { return 0.3989422804014327 * std::exp(-0.5 * x * x); }
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }
inline double norm_sf(double x) { return 0.5 * std::erfc(x * 0.7071067811865476); }

// sigma-finite excursion measure, usable only through conditioned samplers.
struct ExcursionMeasureSpec {
  std::string label;
  int dim = 1;
  double alpha = 0.5;
  double kappa = 1.0;

  std::function<double(double)> tail_mass;            // eps -> nu(T0 > eps)
  std::function<double(double)> small_duration_mean;  // eps -> nu[T0 ; T0 <= eps]
  std::function<double(double)> sup_tail_mass;        // r -> nu(sup |X| >= r)
  std::function<CadlagPath(double, Rng&)> sample_big;        // law nu(. | T0 > eps)
  std::function<CadlagPath(double, Rng&)> sample_sup_big;    // law nu(. | sup >= r)
  std::function<double(double, Rng&)> sample_duration_big;   // T0 under nu(. | T0 > eps)
};

// --- exact first-passage machinery for standard Brownian motion ---

// T0 under BM from x: (x/Z)^2 with Z standard normal.
inline double bm_first_passage_time(double x, Rng& rng) {
  double z = 0.0;
  while (z == 0.0) z = rng.normal();
  const double q = x / z;
  return q * q;
}

// BM from x >= 0 conditioned on T0 = T is the radial part of a 3d Gaussian
// bridge (x,0,0) -> 0. Advancing s1 -> s2 keeps the law exact at the sampled
// times; no discretization bias.
class Bes3Bridge {
 public:
  Bes3Bridge(double x, double duration) : T_(duration), s_(0.0), w_{x, 0.0, 0.0} {
    if (!(duration > 0.0)) throw std::invalid_argument("Bes3Bridge: duration must be > 0");
    if (x < 0.0) throw std::invalid_argument("Bes3Bridge: start must be >= 0");
  }

  double time() const { return s_; }
  double duration() const { return T_; }
  double value() const { return std::sqrt(w_[0] * w_[0] + w_[1] * w_[1] + w_[2] * w_[2]); }

  double advance(double s, Rng& rng) {
    if (!(s > s_ && s < T_)) throw std::invalid_argument("Bes3Bridge: times must increase within (0, T)");
    const double rem = T_ - s_;
    const double shrink = (T_ - s) / rem;
    const double sd = std::sqrt((s - s_) * (T_ - s) / rem);
    for (double& c : w_) c = c * shrink + sd * rng.normal();
    s_ = s;
    return value();
  }

 private:
  double T_;
  double s_;
  double w_[3];
};

// Duration under nu(. | T0 > eps): tail (t/eps)^{-1/2}, inverse CDF.
inline double ito_duration_big(double eps, Rng& rng) {
  const double u = rng.uniform_pos();
  return eps / (u * u);
}

// nu_eps[1 - e^{-lambda T0}] for the duration-truncated Brownian measure;
// closed form, -> a*sqrt(2 lambda) as eps -> 0.
inline double ito_truncated_laplace_exponent(double a, double eps, double lambda) {
  const double root = std::sqrt(lambda * eps);
  return a * 0.3989422804014327 *
         (2.0 * (1.0 - std::exp(-lambda * eps)) / std::sqrt(eps) +
          2.0 * std::sqrt(3.141592653589793 * lambda) * std::erfc(root));
}

namespace detail {

// Excursion shape: scaled radial 3d Brownian bridge 0 -> 0 over [0, T],
// sampled sequentially on a uniform grid. Interior values are positive a.s.
inline CadlagPath ito_excursion_path(double T, int steps, Rng& rng) {
  std::vector<Knot> ks;
  ks.reserve(static_cast<size_t>(steps) + 1);
  ks.push_back({0.0, Vec::scalar(0.0), SegmentMode::Linear});
  double w[3] = {0.0, 0.0, 0.0};
  double s = 0.0;
  for (int i = 1; i < steps; ++i) {
    const double next = T * static_cast<double>(i) / steps;
    const double rem = T - s;
    const double shrink = (T - next) / rem;
    const double sd = std::sqrt((next - s) * (T - next) / rem);
    for (double& c : w) c = c * shrink + sd * rng.normal();
    s = next;
    const double v = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    ks.push_back({next, Vec::scalar(v), SegmentMode::Linear});
  }
  ks.push_back({T, Vec::scalar(0.0), SegmentMode::ConstantRight});
  return CadlagPath::make(std::move(ks), T);
}

// Ascent leg of a height-conditioned excursion: the conditioned process is its
// own Doob transform, a 3d Bessel process run to the first hit of r. Euler
// with a value-adaptive step; the returned path ends exactly at r.
inline std::vector<Knot> bes3_ascent_knots(double r, double start_frac, double step_frac,
                                           Rng& rng) {
  std::vector<Knot> ks;
  double x = r * start_frac;
  double t = 0.0;
  ks.push_back({0.0, Vec::scalar(x), SegmentMode::Linear});
  while (true) {
    const double h = step_frac * x * x;
    const double nx = x + h / x + std::sqrt(h) * rng.normal();
    if (nx >= r) {
      // linear crossing of the level r inside the step
      const double s = (r - x) / (nx - x);
      t += s * h;
      ks.push_back({t, Vec::scalar(r), SegmentMode::Linear});
      return ks;
    }
    t += h;
    x = std::fabs(nx);
    if (x < 1e-300) x = 1e-300;
    ks.push_back({t, Vec::scalar(x), SegmentMode::Linear});
  }
}

// Descent leg: BM from r absorbed at 0, Euler plus Brownian-bridge absorption
// so the hitting event has no O(sqrt(h)) grid bias. Paths still alive at
// t_cap are returned censored (infinite lifetime, knots stop there).
inline void bm_descent_knots(double r, double h, double t_cap, double t0, Rng& rng,
                             std::vector<Knot>& ks, double& lifetime) {
  double x = r;
  double t = t0;
  while (t - t0 < t_cap) {
    const double nx = x + std::sqrt(h) * rng.normal();
    if (nx <= 0.0) {
      const double s = x / (x - nx);
      t += s * h;
      ks.push_back({t, Vec::scalar(0.0), SegmentMode::ConstantRight});
      lifetime = t;
      return;
    }
    // bridge over the step dips below 0 with probability exp(-2 x nx / h)
    if (rng.uniform() < std::exp(-2.0 * x * nx / h)) {
      const double s = x / (x + nx);
      t += s * h;
      ks.push_back({t, Vec::scalar(0.0), SegmentMode::ConstantRight});
      lifetime = t;
      return;
    }
    t += h;
    x = nx;
    ks.push_back({t, Vec::scalar(x), SegmentMode::Linear});
  }
  lifetime = kInf;  // censored
}

}  // namespace detail

struct ItoOptions {
  int shape_steps = 64;        // knots per excursion from sample_big
  double ascent_start_frac = 1e-3;
  double ascent_step_frac = 0.01;   // step = frac * value^2 for the Bessel leg
  double descent_step_frac = 4e-3;  // step = frac * r^2 for the free leg
  double descent_cap_mult = 400.0;  // cap = mult * r^2, then censor
};

// Reflecting-Brownian excursion measure (alpha = 1/2, kappa = 1).
inline ExcursionMeasureSpec ito_brownian_measure(double normalization,
                                                 ItoOptions opt = {}) {
  if (!(normalization > 0.0))
    throw std::invalid_argument("ito_brownian_measure: normalization must be > 0");
  const double a = normalization;
  ExcursionMeasureSpec spec;
  spec.label = "brownian_ito";
  spec.dim = 1;
  spec.alpha = 0.5;
  spec.kappa = 1.0;
  spec.tail_mass = [a](double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("tail_mass: eps must be > 0");
    return a * 0.7978845608028654 / std::sqrt(eps);
  };
  spec.small_duration_mean = [a](double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("small_duration_mean: eps must be >= 0");
    return a * 0.7978845608028654 * std::sqrt(eps);
  };
  spec.sup_tail_mass = [a](double r) {
    if (!(r > 0.0)) throw std::invalid_argument("sup_tail_mass: r must be > 0");
    return a / r;
  };
  spec.sample_duration_big = [](double eps, Rng& rng) { return ito_duration_big(eps, rng); };
  spec.sample_big = [opt](double eps, Rng& rng) {
    const double T = ito_duration_big(eps, rng);
    return detail::ito_excursion_path(T, opt.shape_steps, rng);
  };
  spec.sample_sup_big = [opt](double r, Rng& rng) {
    if (!(r > 0.0)) throw std::invalid_argument("sample_sup_big: r must be > 0");
    auto ks = detail::bes3_ascent_knots(r, opt.ascent_start_frac, opt.ascent_step_frac, rng);
    double lifetime = 0.0;
    detail::bm_descent_knots(r, opt.descent_step_frac * r * r, opt.descent_cap_mult * r * r,
                             ks.back().t, rng, ks, lifetime);
    return CadlagPath::make(std::move(ks), lifetime);
  };
  return spec;
}

// --- stopped laws ---

struct StoppedLaw {
  // (x, step, rng) -> path of the process from x absorbed at the first zero
  std::function<CadlagPath(const Vec&, double, Rng&)> sample_with_step;
  double step = 1e-3;
  std::string label;
};

inline CadlagPath sample_stopped_path(const StoppedLaw& law, const Vec& x, Rng& rng) {
  if (x.is_zero()) throw std::invalid_argument("sample_stopped_path: start must not be 0");
  return law.sample_with_step(x, law.step, rng);
}

// Standard BM from x != 0 absorbed at 0. Gaussian increments are exact at the
// grid; absorption adds the bridge correction so the hitting time has O(h)
// bias instead of O(sqrt(h)). Censors at t_cap (lifetime inf, knots stop).
inline CadlagPath bm_stopped_path(double x, double step, double t_cap, Rng& rng) {
  if (x == 0.0) throw std::invalid_argument("bm_stopped_path: start must not be 0");
  const double sgn = x > 0.0 ? 1.0 : -1.0;
  std::vector<Knot> ks;
  double v = std::fabs(x);
  ks.push_back({0.0, Vec::scalar(sgn * v), SegmentMode::Linear});
  double t = 0.0, lifetime = kInf;
  while (t < t_cap) {
    const double nv = v + std::sqrt(step) * rng.normal();
    if (nv <= 0.0) {
      t += step * v / (v - nv);
      ks.push_back({t, Vec::scalar(0.0), SegmentMode::ConstantRight});
      lifetime = t;
      break;
    }
    if (rng.uniform() < std::exp(-2.0 * v * nv / step)) {
      t += step * v / (v + nv);
      ks.push_back({t, Vec::scalar(0.0), SegmentMode::ConstantRight});
      lifetime = t;
      break;
    }
    t += step;
    v = nv;
    ks.push_back({t, Vec::scalar(sgn * v), SegmentMode::Linear});
  }
  return CadlagPath::make(std::move(ks), lifetime);
}

inline StoppedLaw bm_stopped_law(double step = 1e-3, double t_cap = 1e4) {
  StoppedLaw law;
  law.step = step;
  law.label = "bm_stopped";
  law.sample_with_step = [t_cap](const Vec& x, double h, Rng& rng) {
    if (x.dim != 1) throw std::invalid_argument("bm_stopped_law: scalar states only");
    return bm_stopped_path(x[0], h, t_cap, rng);
  };
  return law;
}

// --- Lamperti machinery ---

struct LevyDriver {
  double drift = -0.5;       // spectrally one-sided family: drift plus volatility
  double volatility = 1.0;
  double jump_rate = 0.0;    // finite-activity negative jumps
  std::function<double(Rng&)> jump_size;  // returns a negative increment
  double cramer_kappa = 1.0;
};

inline LevyDriver bm_drift_driver(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("bm_drift_driver: mu must be > 0");
  LevyDriver d;
  d.drift = -mu;
  d.volatility = 1.0;
  d.cramer_kappa = 2.0 * mu;
  return d;
}

// Z path from z0, Euler linear segments plus explicit jump knots, run until
// it drops to z_floor or the clock exceeds u_max.
inline CadlagPath sample_driver_path(const LevyDriver& d, double z0, double z_floor,
                                     double u_max, double step, Rng& rng) {
  if (!(z0 > z_floor)) throw std::invalid_argument("sample_driver_path: z0 must exceed z_floor");
  std::vector<Knot> ks;
  ks.push_back({0.0, Vec::scalar(z0), SegmentMode::Linear});
  double z = z0, u = 0.0;
  double next_jump = d.jump_rate > 0.0 ? rng.exponential(d.jump_rate) : kInf;
  while (z > z_floor && u < u_max) {
    double h = step;
    bool jump_now = false;
    if (next_jump < u + h) {
      h = next_jump - u;
      jump_now = true;
    }
    if (h > 0.0) {
      z += d.drift * h + d.volatility * std::sqrt(h) * rng.normal();
      u += h;
      ks.push_back({u, Vec::scalar(z), SegmentMode::Linear});
    }
    if (jump_now) {
      z += d.jump_size ? d.jump_size(rng) : 0.0;
      if (ks.back().t == u) {
        ks.back().value = Vec::scalar(z);
        ks.back().mode = SegmentMode::Linear;
      } else {
        ks.push_back({u, Vec::scalar(z), SegmentMode::Linear});
      }
      next_jump = u + rng.exponential(d.jump_rate);
    }
  }
  return CadlagPath::make(std::move(ks), kInf);
}

struct CramerCheck {
  double mean;
  double se;
  bool pass;
};

inline CramerCheck cramer_check(const LevyDriver& d, int n, Rng& rng, double tol = 1e-2) {
  if (n < 2) throw std::invalid_argument("cramer_check: need n >= 2");
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    // Z(1) for the continuous part is exact; jumps added at their count
    double z = d.drift + d.volatility * rng.normal();
    if (d.jump_rate > 0.0 && d.jump_size) {
      long m = rng.poisson(d.jump_rate);
      for (long k = 0; k < m; ++k) z += d.jump_size(rng);
    }
    const double w = std::exp(d.cramer_kappa * z);
    s += w;
    ss += w * w;
  }
  const double mean = s / n;
  const double var = (ss / n - mean * mean) / (n - 1.0);
  const double se = std::sqrt(std::max(var, 0.0));
  return {mean, se, std::fabs(mean - 1.0) <= tol + 3.0 * se};
}

// Y(t) = exp(Z(tau^{-1}(t))) with tau(u) = int_0^u exp(Z(s)/alpha) ds, the
// clock integrated in closed form on each linear segment. If tail_drift m < 0
// is given, Z is extended past its last knot with slope m, which closes the
// clock at tau(inf) = tau(u_last) + alpha e^{Z_last/alpha}/|m|; otherwise the
// driver is treated as killed at its last knot.
inline CadlagPath lamperti_transform(const CadlagPath& z_path, double alpha,
                                     std::optional<double> tail_drift = std::nullopt) {
  if (!(alpha > 0.0)) throw std::invalid_argument("lamperti_transform: alpha must be > 0");
  const auto& zk = z_path.knots();
  if (z_path.dim() != 1) throw std::invalid_argument("lamperti_transform: scalar driver only");
  std::vector<Knot> ks;
  ks.reserve(zk.size() + 1);
  double tau = 0.0;
  ks.push_back({0.0, Vec::scalar(std::exp(zk.front().value[0])), SegmentMode::Linear});
  for (size_t i = 0; i + 1 < zk.size(); ++i) {
    const double u0 = zk[i].t, u1 = zk[i + 1].t;
    const double z0 = zk[i].value[0];
    const double z1 = zk[i].mode == SegmentMode::ConstantRight ? z0 : zk[i + 1].value[0];
    const double du = u1 - u0;
    const double m = (z1 - z0) / du;
    if (m == 0.0) {
      tau += du * std::exp(z0 / alpha);
    } else {
      tau += (alpha / m) * (std::exp(z1 / alpha) - std::exp(z0 / alpha));
    }
    if (!(tau > ks.back().t)) continue;  // degenerate clock increment, drop the knot
    ks.push_back({tau, Vec::scalar(std::exp(zk[i + 1].value[0])), SegmentMode::Linear});
  }
  const double z_last = zk.back().value[0];
  double lifetime;
  if (tail_drift) {
    const double m = *tail_drift;
    if (!(m < 0.0)) throw std::invalid_argument("lamperti_transform: tail drift must be < 0");
    lifetime = tau + alpha * std::exp(z_last / alpha) / (-m);
    ks.push_back({lifetime, Vec::scalar(0.0), SegmentMode::ConstantRight});
  } else {
    // killed at the clock's end: hold the last value, then drop to 0
    lifetime = tau;
    if (ks.back().t < lifetime) {
      ks.back().mode = SegmentMode::ConstantRight;
      ks.push_back({lifetime, Vec::scalar(0.0), SegmentMode::ConstantRight});
    } else {
      ks.back() = {lifetime, Vec::scalar(0.0), SegmentMode::ConstantRight};
      if (ks.size() >= 2) ks[ks.size() - 2].mode = SegmentMode::ConstantRight;
    }
  }
  return CadlagPath::make(std::move(ks), lifetime);
}

// --- pssMp excursion measure via the Lamperti representation ---

struct AscentPolicy {
  double start_frac = 1e-3;   // ascent trials start at r * start_frac
  double reject_drop = 1e-3;  // a trial that falls to start * reject_drop counts as hitting 0
  double driver_step = 5e-3;
  double floor_frac = 1e-4;   // after the ascent, kill the driver once Y <= r * floor_frac
  int calibrate_samples = 2000;
};

class PssmpMeasure {
 public:
  PssmpMeasure(LevyDriver driver, double alpha, AscentPolicy policy, Rng& cal_rng)
      : d_(driver), alpha_(alpha), pol_(policy) {
    if (!(policy.start_frac > 0.0 && policy.start_frac < 1.0))
      throw std::invalid_argument("pssmp_measure: start_frac must lie in (0,1)");
    kappa_ = d_.cramer_kappa;
    if (!(alpha_ > 0.0 && alpha_ * kappa_ < 1.0))
      throw std::invalid_argument("pssmp_measure: need alpha in (0, 1/kappa)");
    auto cc = cramer_check(d_, 4000, cal_rng);
    if (!cc.pass)
      throw std::invalid_argument("pssmp_measure: driver fails the Cramer check, mean " +
                                  std::to_string(cc.mean));
    calibrate(cal_rng);
  }

  double kappa() const { return kappa_; }
  double alpha() const { return alpha_; }

  // nu(sup >= r) = r^{-kappa}; the free constant is fixed at delta = 1.
  double sup_tail(double r) const {
    if (!(r > 0.0)) throw std::invalid_argument("sup_tail: r must be > 0");
    return std::pow(r, -kappa_);
  }

  double duration_tail(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("duration_tail: eps must be > 0");
    return C_ * std::pow(eps, -alpha_ * kappa_);
  }

  double small_duration_mean(double eps) const {
    const double ak = alpha_ * kappa_;
    return C_ * ak / (1.0 - ak) * std::pow(eps, 1.0 - ak);
  }

  // Height-conditioned excursion: ascent by rejection from r*start_frac (the
  // conditioned ascent has acceptance probability start_frac^kappa), then the
  // stopped process from r, both through one driver path.
  CadlagPath sample_sup_big(double r, Rng& rng) const {
    if (!(r > 0.0)) throw std::invalid_argument("sample_sup_big: r must be > 0");
    const double z_top = std::log(r);
    const double z_start = std::log(r * pol_.start_frac);
    const double z_reject = z_start + std::log(pol_.reject_drop);
    while (true) {
      CadlagPath z = sample_driver_to(z_start, z_top, z_reject, rng);
      if (z.knots().back().value[0] < z_top) continue;  // fell back, reject
      CadlagPath tail = sample_driver_to(z_top, kInf, std::log(r * pol_.floor_frac), rng);
      std::vector<Knot> zk = z.knots();
      const double t_join = zk.back().t;
      const auto& tk = tail.knots();
      for (size_t i = 1; i < tk.size(); ++i)
        zk.push_back({t_join + tk[i].t, tk[i].value, tk[i].mode});
      auto full = CadlagPath::make(std::move(zk), kInf);
      // the closed-form tail needs a negative continuous drift; otherwise the
      // clock is closed by killing at the floor, which sits at ~0 anyway
      const std::optional<double> td =
          d_.drift < 0.0 ? std::optional<double>(d_.drift) : std::nullopt;
      return lamperti_transform(full, alpha_, td);
    }
  }

  // Duration-conditioned sampler: height-conditioned at r(eps) plus rejection
  // on the lifetime. Misses {T0 > eps, sup < r(eps)}; r(eps) is calibrated so
  // the acceptance rate stays near 1/3, and the gap is documented rather than
  // corrected.
  CadlagPath sample_big(double eps, Rng& rng) const {
    const double r = r_of_eps(eps);
    while (true) {
      CadlagPath p = sample_sup_big(r, rng);
      if (p.lifetime() > eps) return p;
    }
  }

  double r_of_eps(double eps) const { return r_coef_ * std::pow(eps, alpha_); }

  ExcursionMeasureSpec as_spec() const {
    ExcursionMeasureSpec spec;
    spec.label = "pssmp_bm_drift";
    spec.dim = 1;
    spec.alpha = alpha_;
    spec.kappa = kappa_;
    auto self = *this;
    spec.tail_mass = [self](double eps) { return self.duration_tail(eps); };
    spec.small_duration_mean = [self](double eps) { return self.small_duration_mean(eps); };
    spec.sup_tail_mass = [self](double r) { return self.sup_tail(r); };
    spec.sample_big = [self](double eps, Rng& rng) { return self.sample_big(eps, rng); };
    spec.sample_sup_big = [self](double r, Rng& rng) { return self.sample_sup_big(r, rng); };
    spec.sample_duration_big = [self](double eps, Rng& rng) {
      return self.sample_big(eps, rng).lifetime();
    };
    return spec;
  }

  // One conditioned-ascent trial; the acceptance probability is start_frac^kappa.
  bool ascent_trial(double r, Rng& rng) const {
    const double z_top = std::log(r);
    const double z_start = std::log(r * pol_.start_frac);
    const double z_reject = z_start + std::log(pol_.reject_drop);
    CadlagPath z = sample_driver_to(z_start, z_top, z_reject, rng);
    return z.knots().back().value[0] >= z_top;
  }

 private:
  CadlagPath sample_driver_to(double z0, double z_top, double z_floor, Rng& rng) const {
    // run until the driver exceeds z_top (exact or bridge crossing knot) or
    // falls to z_floor; bridge correction keeps the barrier hit unbiased in h
    std::vector<Knot> ks;
    ks.push_back({0.0, Vec::scalar(z0), SegmentMode::Linear});
    double z = z0, u = 0.0;
    const double h = pol_.driver_step;
    const double s2 = d_.volatility * d_.volatility;
    double next_jump = d_.jump_rate > 0.0 ? rng.exponential(d_.jump_rate) : kInf;
    while (z > z_floor) {
      double dt = h;
      bool jump_now = false;
      if (next_jump < u + dt) {
        dt = next_jump - u;
        jump_now = true;
      }
      if (dt > 0.0) {
        double nz = z + d_.drift * dt + d_.volatility * std::sqrt(dt) * rng.normal();
        if (nz >= z_top) {
          const double s = (z_top - z) / (nz - z);
          u += s * dt;
          ks.push_back({u, Vec::scalar(z_top), SegmentMode::Linear});
          break;
        }
        if (z_top < kInf &&
            rng.uniform() < std::exp(-2.0 * (z_top - z) * (z_top - nz) / (s2 * dt))) {
          u += dt * (z_top - z) / ((z_top - z) + (z_top - nz));
          ks.push_back({u, Vec::scalar(z_top), SegmentMode::Linear});
          break;
        }
        u += dt;
        z = nz;
        ks.push_back({u, Vec::scalar(z), SegmentMode::Linear});
      }
      if (jump_now) {
        z += d_.jump_size ? d_.jump_size(rng) : 0.0;
        if (!ks.empty() && ks.back().t == u)
          ks.back().value = Vec::scalar(z);
        else
          ks.push_back({u, Vec::scalar(z), SegmentMode::Linear});
        next_jump = u + rng.exponential(d_.jump_rate);
      }
    }
    return CadlagPath::make(std::move(ks), kInf);
  }

  void calibrate(Rng& rng) {
    // one reference height fixes the duration-tail constant: nu(T0 > t) =
    // nu(sup >= 1) * P(T0 > t | sup >= 1) * corrections absorbed into C
    const int n = pol_.calibrate_samples;
    std::vector<double> durs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) durs[static_cast<size_t>(i)] = sample_sup_big(1.0, rng).lifetime();
    std::nth_element(durs.begin(), durs.begin() + n / 2, durs.end());
    const double med = durs[static_cast<size_t>(n) / 2];
    // P(T0 > med | sup >= 1) = 1/2, so C = 0.5 * sup_tail(1) * med^{alpha kappa}
    C_ = 0.5 * std::pow(med, alpha_ * kappa_);
    // choose r(eps) so that eps sits near the median duration at height r
    r_coef_ = std::pow(med, -alpha_);
  }

  LevyDriver d_;
  double alpha_;
  double kappa_;
  AscentPolicy pol_;
  double C_ = 1.0;
  double r_coef_ = 1.0;
};

inline PssmpMeasure pssmp_measure(const LevyDriver& driver, double alpha, AscentPolicy policy,
                                  Rng& cal_rng) {
  return PssmpMeasure(driver, alpha, policy, cal_rng);
}

// MC estimate of nu(T_x < T0): fraction of height-conditioned excursions that
// hit x, rescaled by the height tail mass.
inline double estimate_sigma(const ExcursionMeasureSpec& spec, const Vec& x, double r_cond,
                             int n_samples, Rng& rng) {
  if (n_samples <= 0) throw std::invalid_argument("estimate_sigma: n_samples must be > 0");
  if (!(x.norm() >= r_cond))
    throw std::invalid_argument("estimate_sigma: |x| must be >= conditioning height");
  long hits = 0;
  for (int i = 0; i < n_samples; ++i) {
    CadlagPath p = spec.sample_sup_big(r_cond, rng);
    if (hitting_time(p, x) < kInf) ++hits;
  }
  return spec.sup_tail_mass(r_cond) * static_cast<double>(hits) / n_samples;
}

}  // namespace exc
