#pragma once

#include <optional>

#include "exc/path.hpp"

namespace exc {

// Constants driving the space-time scaling transforms and the scaled
// jumping-in objects. kappa is the hitting exponent of sigma(x) = delta
// x^-kappa, alpha the self-similarity index, beta the jump-tail exponent of
// the dominant regime (absent otherwise).
struct ScalingScheme {
  double c = 2.0;
  double alpha = 0.5;
  double kappa = 1.0;
  std::optional<double> beta;

  void validate() const {
    if (!(c > 1.0)) throw std::invalid_argument("ScalingScheme: c must be > 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("ScalingScheme: alpha must be > 0");
    if (!(kappa > 0.0 && kappa < 1.0 / alpha))
      throw std::invalid_argument("ScalingScheme: kappa must lie in (0, 1/alpha)");
    if (beta && !(*beta > 0.0 && *beta < kappa))
      throw std::invalid_argument("ScalingScheme: beta must lie in (0, kappa)");
  }

  // scaling exponent of the regime where jump-in entry points vanish
  double gamma_vanishing() const { return alpha * kappa; }
  // scaling exponent of the regime where the jump tail dominates
  double gamma_dominant() const {
    if (!beta) throw std::logic_error("ScalingScheme: dominant exponent needs beta");
    return alpha * *beta;
  }
};

namespace detail {
inline CadlagPath scale_path(const CadlagPath& w, double tmul, double vmul) {
  std::vector<Knot> ks = w.knots();
  for (auto& k : ks) {
    k.t *= tmul;
    for (int d = 0; d < k.value.dim; ++d) k.value[d] *= vmul;
  }
  return CadlagPath::make(std::move(ks), w.lifetime() * tmul);
}
}  // namespace detail

// n-fold space-time compression: t -> c^{-gamma n} w(c^n t). Knot data is
// scaled by two precomputed factors, so powers of two scale exactly.
inline CadlagPath apply_psi(double c, double gamma, int n, const CadlagPath& w) {
  if (n < 0) throw std::invalid_argument("apply_psi: n must be >= 0");
  if (n == 0) return w;
  return detail::scale_path(w, std::pow(c, -n), std::pow(c, -gamma * n));
}

// companion clock transform: t -> c^{-n} w(c^{gamma n} t)
inline CadlagPath apply_psi_hat(double c, double gamma, int n, const CadlagPath& w) {
  if (n < 0) throw std::invalid_argument("apply_psi_hat: n must be >= 0");
  if (n == 0) return w;
  return detail::scale_path(w, std::pow(c, -gamma * n), std::pow(c, -n));
}

inline CadlagPath apply_psi(const ScalingScheme& s, double gamma, int n, const CadlagPath& w) {
  return apply_psi(s.c, gamma, n, w);
}

inline CadlagPath apply_psi_hat(const ScalingScheme& s, double gamma, int n, const CadlagPath& w) {
  return apply_psi_hat(s.c, gamma, n, w);
}

}  // namespace exc
