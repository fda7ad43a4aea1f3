#pragma once

#include <cstdint>
#include <random>

namespace exc {

// splitmix64; used to decorrelate stream seeds derived from (master, index).
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t stream_seed(uint64_t master, uint64_t index) {
  return mix64(master ^ mix64(index + 1));
}

// Seeded generator with the distributions the samplers need. One instance per
// task/path stream; never shared across threads.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  static Rng stream(uint64_t master, uint64_t index) { return Rng(stream_seed(master, index)); }

  double uniform() { return unif_(eng_); }  // [0,1)
  double uniform_pos() {
    double u;
    do { u = unif_(eng_); } while (u <= 0.0 || u >= 1.0);
    return u;
  }
  double normal() { return norm_(eng_); }
  double exponential(double rate) { return std::exponential_distribution<double>(rate)(eng_); }
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>(mean)(eng_);
  }
  uint64_t raw() { return eng_(); }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace exc
