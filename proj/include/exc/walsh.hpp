#pragma once
// Ray-valued processes on finitely many rays: scalar excursions embedded as
// q(t)·v, the ray map x -> x/|x|, and the angular entry families built from a
// disintegrated planar jump measure. Axis rays keep all embeddings exact.

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exc/jumping_in.hpp"
#include "exc/measure.hpp"
#include "exc/path.hpp"
#include "exc/rng.hpp"

namespace exc {

// Planar path with every knot equal to q(t)·v; lifetime and modes preserved.
inline CadlagPath embed_on_ray(const CadlagPath& q, const Vec& v) {
  if (q.dim() != 1) throw std::invalid_argument("embed_on_ray: path must be scalar");
  if (v.dim != 2) throw std::invalid_argument("embed_on_ray: ray must be planar");
  const double n2 = v[0] * v[0] + v[1] * v[1];
  if (std::fabs(n2 - 1.0) > 2e-12) throw std::invalid_argument("embed_on_ray: |v| != 1");
  if (q.is_zero_path()) return CadlagPath::zero(2);
  std::vector<Knot> ks;
  ks.reserve(q.knots().size());
  for (const Knot& k : q.knots()) {
    if (k.value[0] < 0.0) throw std::invalid_argument("embed_on_ray: path must be nonnegative");
    ks.push_back({k.t, Vec::planar(k.value[0] * v[0], k.value[0] * v[1]), k.mode});
  }
  return CadlagPath::make(std::move(ks), q.lifetime());
}

struct RayExcursion {
  CadlagPath scalar;
  Ray ray;
  CadlagPath embedded() const { return embed_on_ray(scalar, ray.unit); }
};

// Scalar excursion measure pushed onto a ray: mass laws unchanged, samples embedded.
inline ExcursionMeasureSpec embed_spec_on_ray(const ExcursionMeasureSpec& base, const Ray& ray) {
  ExcursionMeasureSpec s = base;
  s.label = "bessel_ray";
  s.dim = 2;
  const Vec u = ray.unit;
  auto sample = base.sample_big;
  s.sample_big = [sample, u](double eps, Rng& rng) { return embed_on_ray(sample(eps, rng), u); };
  auto sup = base.sample_sup_big;
  s.sample_sup_big = [sup, u](double r, Rng& rng) { return embed_on_ray(sup(r, rng), u); };
  return s;
}

// Stopped law entered at r·v for scalar distance r.
inline StoppedLaw embed_stopped_on_ray(const StoppedLaw& base, const Ray& ray) {
  StoppedLaw law;
  law.label = base.label + "_ray";
  law.step = base.step;
  auto inner = base.sample_with_step;
  const Vec u = ray.unit;
  law.sample_with_step = [inner, u](const Vec& x, double step, Rng& rng) {
    if (x.dim != 1) throw std::invalid_argument("ray stopped law expects a scalar distance");
    return embed_on_ray(inner(x, step, rng), u);
  };
  return law;
}

// x -> x/|x| matched against the ray list; exact on axis rays.
inline std::string psi_ray_name(const Vec& x, const std::vector<Ray>& rays) {
  if (x.dim != 2) throw std::invalid_argument("psi_ray_name: planar points only");
  const double n = std::sqrt(x[0] * x[0] + x[1] * x[1]);
  if (!(n > 0.0)) throw std::invalid_argument("psi_ray_name: undefined at the origin");
  for (const Ray& r : rays) {
    // x on the ray means x = |x| * unit exactly for axis rays
    if (x[0] == n * r.unit[0] && x[1] == n * r.unit[1]) return r.name;
    if (std::fabs(x[0] / n - r.unit[0]) < 1e-9 && std::fabs(x[1] / n - r.unit[1]) < 1e-9)
      return r.name;
  }
  throw std::invalid_argument("psi_ray_name: point lies on no listed ray");
}

// Between consecutive zeros all knots must be positive multiples of one ray.
inline bool rays_collinear(const CadlagPath& x, const std::vector<Ray>& rays) {
  if (x.dim() != 2) throw std::invalid_argument("rays_collinear: planar paths only");
  int current = -1;
  for (const Knot& k : x.knots()) {
    if (k.value.is_zero()) {
      current = -1;
      continue;
    }
    int found = -1;
    for (size_t i = 0; i < rays.size(); ++i) {
      const Vec& u = rays[i].unit;
      const double cross = k.value[0] * u[1] - k.value[1] * u[0];
      const double dot = k.value[0] * u[0] + k.value[1] * u[1];
      if (cross == 0.0 && dot > 0.0) {
        found = static_cast<int>(i);
        break;
      }
    }
    if (found < 0) return false;
    if (current >= 0 && found != current) return false;
    current = found;
  }
  return true;
}

// integral of r^kappa over a radial kernel; infinite for power tails (either
// end diverges), finite for atomic kernels
inline double pi_moment(const RadialMeasure& kernel, double kappa) {
  if (kernel.kind == RadialMeasure::Kind::PowerTail) return kInf;
  double s = 0.0;
  for (const auto& [r, w] : kernel.atoms) s += w * std::pow(r, kappa);
  return s;
}

// regular-variation coefficient of the kernel tail: r^beta j_v((r,inf)) -> pi
inline double pi_tail_coef(const RadialMeasure& kernel, double beta) {
  if (kernel.kind != RadialMeasure::Kind::PowerTail)
    throw std::invalid_argument("pi_tail_coef: power-tail kernels only");
  if (kernel.beta != beta) throw std::invalid_argument("pi_tail_coef: exponent mismatch");
  return kernel.j0;
}

struct WalshFamily {
  std::vector<std::pair<Ray, double>> rho;  // angular excursion-entry weights
  std::optional<Disintegration> jump;       // angular x radial jump entries
  double varsigma = 0.0;
  double kappa = 1.0;
  double truncation_tol = 0.1;
  double duration_bound = 2.0;
  ExcursionMeasureSpec scalar_base;  // reflecting-BM instance
  StoppedLaw scalar_stopped;
  std::map<std::string, ExcursionMeasureSpec> ray_specs;
  JumpInTriple triple;  // flattened admissibility view
  std::vector<Ray> all_rays;

  // per-ray jump cut with the duration budget split evenly across jump rays
  double r_min_for(size_t jump_idx, double eps) const {
    const auto& d = *jump;
    const RadialMeasure scaled = d.radial[jump_idx].scaled(d.angular[jump_idx].second);
    return calibrate_r_min(scaled, kappa, eps / static_cast<double>(d.angular.size()),
                           truncation_tol, duration_bound);
  }

  double tail_mass(double eps) const {
    double m = 0.0;
    for (const auto& [ray, w] : rho) m += w * scalar_base.tail_mass(eps);
    if (jump)
      for (size_t i = 0; i < jump->angular.size(); ++i)
        m += jump->angular[i].second * jump->radial[i].tail(r_min_for(i, eps));
    return m;
  }

  double small_duration_mean(double eps) const {
    double m = 0.0;
    for (const auto& [ray, w] : rho) m += w * scalar_base.small_duration_mean(eps);
    return m;
  }

  // planar sample with the entry ray as provenance mark
  std::pair<CadlagPath, std::string> sample_big_marked(double eps, Rng& rng) const {
    struct Arm {
      double weight;
      const Ray* ray;
      int jump_idx;  // -1 for excursion arms
    };
    std::vector<Arm> arms;
    for (const auto& [ray, w] : rho) {
      double t = w * scalar_base.tail_mass(eps);
      if (t > 0.0) arms.push_back({t, &ray, -1});
    }
    std::vector<double> cuts;
    if (jump)
      for (size_t i = 0; i < jump->angular.size(); ++i) {
        double cut = r_min_for(i, eps);
        double t = jump->angular[i].second * jump->radial[i].tail(cut);
        cuts.push_back(cut);
        if (t > 0.0) arms.push_back({t, &jump->angular[i].first, static_cast<int>(i)});
      }
    if (arms.empty()) throw std::invalid_argument("sample_big: no mass above the truncation");
    size_t pick = 0;
    if (arms.size() > 1) {
      double total = 0.0;
      for (const auto& a : arms) total += a.weight;
      double u = rng.uniform() * total;
      while (pick + 1 < arms.size() && u >= arms[pick].weight) u -= arms[pick].weight, ++pick;
    }
    const Arm& a = arms[pick];
    if (a.jump_idx < 0)
      return {embed_on_ray(scalar_base.sample_big(eps, rng), a.ray->unit), a.ray->name};
    const double x =
        jump->radial[static_cast<size_t>(a.jump_idx)].sample_conditional(cuts[static_cast<size_t>(a.jump_idx)], rng);
    CadlagPath scalar = sample_stopped_path(scalar_stopped, Vec::scalar(x), rng);
    return {embed_on_ray(scalar, a.ray->unit), a.ray->name};
  }
};

inline WalshFamily walsh_jumpin_family(std::vector<std::pair<Ray, double>> rho,
                                       std::optional<Disintegration> jump, double varsigma,
                                       const ExcursionMeasureSpec& scalar_base,
                                       const StoppedLaw& scalar_stopped) {
  WalshFamily f;
  f.rho = std::move(rho);
  f.jump = std::move(jump);
  f.varsigma = varsigma;
  f.kappa = scalar_base.kappa;
  f.scalar_base = scalar_base;
  f.scalar_stopped = scalar_stopped;
  for (const auto& [ray, w] : f.rho) {
    if (!(w >= 0.0)) throw std::invalid_argument("walsh_jumpin_family: negative ray weight");
    f.ray_specs.emplace(ray.name, embed_spec_on_ray(scalar_base, ray));
    f.all_rays.push_back(ray);
  }
  if (f.jump)
    for (const auto& [ray, w] : f.jump->angular) {
      if (!f.ray_specs.count(ray.name)) {
        f.ray_specs.emplace(ray.name, embed_spec_on_ray(scalar_base, ray));
        f.all_rays.push_back(ray);
      }
    }

  // flattened admissibility view: total radial mass across rays
  f.triple.varsigma = varsigma;
  f.triple.kappa = f.kappa;
  for (const auto& [ray, w] : f.rho) f.triple.rho.emplace_back(ray.name, w);
  if (f.jump) {
    bool all_atomic = true;
    for (const auto& k : f.jump->radial)
      if (k.kind != RadialMeasure::Kind::Atomic) all_atomic = false;
    if (all_atomic) {
      std::vector<std::pair<double, double>> merged;
      for (size_t i = 0; i < f.jump->angular.size(); ++i)
        for (const auto& [r, w] : f.jump->radial[i].atoms)
          merged.emplace_back(r, w * f.jump->angular[i].second);
      f.triple.j = RadialMeasure::atomic(std::move(merged));
    } else if (f.jump->angular.size() == 1) {
      f.triple.j = f.jump->radial[0].scaled(f.jump->angular[0].second);
    } else {
      throw std::invalid_argument(
          "walsh_jumpin_family: mixed power-tail kernels across several rays are not wired");
    }
  }
  auto rays = f.all_rays;
  f.triple.psi = [rays](const Vec& x) { return psi_ray_name(x, rays); };
  return f;
}

// Vanishing-jump limit weights: w*(v) = rho(v) + (1/delta) pi_kappa(v) rho_j(v).
inline std::vector<std::pair<Ray, double>> walsh_rho_star(
    const std::vector<std::pair<Ray, double>>& rho, const std::optional<Disintegration>& jump,
    double delta, double kappa) {
  if (!(delta > 0.0)) throw std::invalid_argument("walsh_rho_star: delta must be > 0");
  std::vector<std::pair<Ray, double>> out = rho;
  if (!jump) return out;
  for (size_t i = 0; i < jump->angular.size(); ++i) {
    const double pi = pi_moment(jump->radial[i], kappa);
    if (!std::isfinite(pi))
      throw std::invalid_argument("walsh_rho_star: infinite kappa-moment on a ray kernel");
    const double add = pi * jump->angular[i].second / delta;
    bool merged = false;
    for (auto& [ray, w] : out)
      if (ray.name == jump->angular[i].first.name) {
        w += add;
        merged = true;
        break;
      }
    if (!merged) out.emplace_back(jump->angular[i].first, add);
  }
  return out;
}

}  // namespace exc
