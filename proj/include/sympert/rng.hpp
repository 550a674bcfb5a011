#ifndef SYMPERT_RNG_HPP
#define SYMPERT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "sympert/matcore.hpp"

namespace sympert {

// Deterministic generator: mt19937_64 plus hand-rolled transforms so the same
// seed yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    do {
      u = uniform();
    } while (u == 0.0);
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double angle = 2.0 * M_PI * v;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  Mat gauss_mat(int rows, int cols) {
    Mat a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = gauss();
    return a;
  }

  Vec gauss_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss();
    return v;
  }

  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t value = 0;
    do {
      value = engine_();
    } while (value >= limit);
    return value % bound;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sympert

#endif
