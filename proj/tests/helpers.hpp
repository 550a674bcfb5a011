#ifndef SYMPERT_TESTS_HELPERS_HPP
#define SYMPERT_TESTS_HELPERS_HPP

#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "sympert/matcore.hpp"
#include "sympert/rng.hpp"

namespace sympert::testing {

inline Mat random_symmetric(Rng& rng, int n) {
  Mat a = rng.gauss_mat(n, n);
  return (a + a.transpose()) / 2.0;
}

// exp(J^{-1} S) is J-symplectic for symmetric S.
inline Mat random_symplectic(Rng& rng, const SymplecticContext& ctx, double scale = 1.0) {
  Mat s = scale * random_symmetric(rng, ctx.dim());
  Mat hamiltonian = ctx.J_inv() * s;
  return hamiltonian.exp();
}

// Resamples until every eigenvalue stays at least `margin` away from `point`.
inline Mat random_symplectic_avoiding(Rng& rng, const SymplecticContext& ctx,
                                      double point, double margin,
                                      double scale = 1.0) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Mat w = random_symplectic(rng, ctx, scale);
    CVec values = eig(w).values;
    double closest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < values.size(); ++i)
      closest = std::min(closest, std::abs(values(i) - point));
    if (closest > margin) return w;
  }
  throw std::runtime_error("could not sample a symplectic matrix with the requested spectral gap");
}

template <typename Fn>
std::string error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  } catch (...) {
    return "<non-library-exception>";
  }
  return "<no-throw>";
}

}  // namespace sympert::testing

#endif
