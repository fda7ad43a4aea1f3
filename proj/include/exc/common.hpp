#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace exc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed-capacity state vector. Paths in this library are scalar (d=1) or
// planar (d=2, Walsh-type); higher dimensions are rejected at construction.
struct Vec {
  std::array<double, 2> v{0.0, 0.0};
  int dim = 1;

  static Vec scalar(double x) { return Vec{{x, 0.0}, 1}; }
  static Vec planar(double x, double y) { return Vec{{x, y}, 2}; }
  static Vec zero(int d) {
    if (d < 1 || d > 2) throw std::invalid_argument("Vec: dim must be 1 or 2");
    return Vec{{0.0, 0.0}, d};
  }

  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
  double& operator[](int i) { return v[static_cast<size_t>(i)]; }

  double norm() const {
    if (dim == 1) return std::fabs(v[0]);
    return std::hypot(v[0], v[1]);
  }
  bool is_zero() const {
    for (int i = 0; i < dim; ++i)
      if (v[static_cast<size_t>(i)] != 0.0) return false;
    return true;
  }
  bool equals(const Vec& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (v[static_cast<size_t>(i)] != o.v[static_cast<size_t>(i)]) return false;
    return true;
  }
  Vec scaled(double a) const {
    Vec r = *this;
    for (int i = 0; i < dim; ++i) r.v[static_cast<size_t>(i)] *= a;
    return r;
  }
  Vec minus(const Vec& o) const {
    Vec r = *this;
    for (int i = 0; i < dim; ++i) r.v[static_cast<size_t>(i)] -= o.v[static_cast<size_t>(i)];
    return r;
  }
  double dist(const Vec& o) const { return minus(o).norm(); }
};

inline bool near(double a, double b, double tol) {
  if (a == b) return true;  // covers +-inf
  return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace exc
