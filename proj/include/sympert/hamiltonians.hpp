#ifndef SYMPERT_HAMILTONIANS_HPP
#define SYMPERT_HAMILTONIANS_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "sympert/matcore.hpp"
#include "sympert/ode.hpp"

namespace sympert {

// One term of a trigonometric-polynomial coefficient matrix:
// coefficient * cos(frequency * t) or coefficient * sin(frequency * t).
// A constant block is a cosine term with frequency 0.
struct TrigTerm {
  Mat coefficient;
  double frequency = 0.0;
  bool sine = false;
};

inline PeriodicHamiltonian trig_hamiltonian(std::vector<TrigTerm> terms, double period) {
  if (terms.empty()) throw Error("dimension", "need at least one term");
  if (!(period > 0.0)) throw Error("dimension", "period must be positive");
  const int dim = static_cast<int>(terms.front().coefficient.rows());
  if (dim <= 0 || dim % 2 != 0) throw Error("dimension", "coefficients must be 2N x 2N");
  for (const TrigTerm& term : terms) {
    if (term.coefficient.rows() != dim || term.coefficient.cols() != dim)
      throw Error("dimension", "all coefficient matrices must share one shape");
    double scale = std::max(1.0, op_norm(term.coefficient));
    if (op_norm(Mat(term.coefficient - term.coefficient.transpose())) > 1e-10 * scale)
      throw Error("not_symmetric", "coefficient matrices must be symmetric");
  }

  PeriodicHamiltonian sys;
  sys.dim = dim;
  sys.period = period;
  sys.coefficient = [terms = std::move(terms), dim](double t) {
    Mat h = Mat::Zero(dim, dim);
    for (const TrigTerm& term : terms)
      h += term.coefficient *
           (term.sine ? std::sin(term.frequency * t) : std::cos(term.frequency * t));
    return h;
  };
  return sys;
}

namespace detail {

inline Mat block_entry(int dim, int i, int j, double value) {
  Mat m = Mat::Zero(dim, dim);
  m(i, j) = value;
  if (i != j) m(j, i) = value;
  return m;
}

}  // namespace detail

// Three coupled parametrically-forced oscillators eta'' + P(t) eta = 0 with
// P(t) = [[4 + e cos(g t), 0, d cos(2 g t)],
//         [0, 3, e sin(5 g t)],
//         [d cos(2 g t), e sin(5 g t), 2]],  g = sqrt(7),
// written as J dX/dt = diag(P(t), I) X with period 2 pi / sqrt(7).
inline PeriodicHamiltonian example1(double eps, double delta) {
  const double gamma = std::sqrt(7.0);
  Mat constant = Mat::Zero(6, 6);
  constant.diagonal() << 4.0, 3.0, 2.0, 1.0, 1.0, 1.0;
  std::vector<TrigTerm> terms;
  terms.push_back({constant, 0.0, false});
  terms.push_back({detail::block_entry(6, 0, 0, eps), gamma, false});
  terms.push_back({detail::block_entry(6, 0, 2, delta), 2.0 * gamma, false});
  terms.push_back({detail::block_entry(6, 1, 2, eps), 5.0 * gamma, true});
  return trig_hamiltonian(std::move(terms), 2.0 * M_PI / gamma);
}

// Companion system with
// P(t) = [[4 + a cos(7t), 0, b cos(14t)],
//         [0, a + b sin(14t), a sin(35t)],
//         [b cos(14t), a sin(35t), 3]],  period 2 pi / 7.
inline PeriodicHamiltonian example2(double a, double b) {
  Mat constant = Mat::Zero(6, 6);
  constant.diagonal() << 4.0, a, 3.0, 1.0, 1.0, 1.0;
  std::vector<TrigTerm> terms;
  terms.push_back({constant, 0.0, false});
  terms.push_back({detail::block_entry(6, 0, 0, a), 7.0, false});
  terms.push_back({detail::block_entry(6, 1, 1, b), 14.0, true});
  terms.push_back({detail::block_entry(6, 0, 2, b), 14.0, false});
  terms.push_back({detail::block_entry(6, 1, 2, a), 35.0, true});
  return trig_hamiltonian(std::move(terms), 2.0 * M_PI / 7.0);
}

}  // namespace sympert

#endif
