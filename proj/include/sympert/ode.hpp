#ifndef SYMPERT_ODE_HPP
#define SYMPERT_ODE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "sympert/matcore.hpp"
#include "sympert/perturb.hpp"

namespace sympert {

// Linear Hamiltonian system J dX/dt = H(t) X with H symmetric and P-periodic.
struct PeriodicHamiltonian {
  int dim = 0;  // 2N
  double period = 0.0;
  std::function<Mat(double)> coefficient;

  void validate(const SymplecticContext& ctx, int samples = 32) const {
    if (dim != ctx.dim()) throw Error("dimension", "system dimension must equal 2N");
    if (!(period > 0.0)) throw Error("dimension", "period must be positive");
    if (!coefficient) throw Error("structure", "missing coefficient evaluator");
    for (int i = 0; i < samples; ++i) {
      double t = period * i / samples;
      Mat h = coefficient(t);
      if (h.rows() != dim || h.cols() != dim)
        throw Error("dimension", "coefficient matrix has wrong shape");
      double scale = std::max(1.0, op_norm(h));
      if (op_norm(Mat(h - h.transpose())) > ctx.tol_struct * scale)
        throw Error("not_symmetric", "coefficient matrix must be symmetric");
      if (op_norm(Mat(coefficient(t + period) - h)) > ctx.tol_struct * scale)
        throw Error("structure", "coefficient matrix must be P-periodic");
    }
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Mat> states;
  double integrator_tol = 0.0;
  std::optional<double> max_symplectic_drift;  // set when the start is symplectic

  const Mat& final_state() const {
    if (states.empty()) throw Error("dimension", "empty trajectory");
    return states.back();
  }
};

struct IntegratorOptions {
  double tol = 1e-12;
  int samples_per_period = 400;
  std::vector<double> grid;  // when nonempty, replaces the uniform sample grid
  std::uint64_t max_steps = 2000000;
};

namespace detail {

using OdeState = std::vector<double>;

inline bool all_finite(const OdeState& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

inline double max_abs(const OdeState& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline std::vector<double> sample_grid(const IntegratorOptions& opt, double t_end,
                                       double period) {
  if (!opt.grid.empty()) {
    std::vector<double> grid = opt.grid;
    if (grid.front() < 0.0 || grid.back() > t_end * (1.0 + 1e-12))
      throw Error("dimension", "sample grid must lie in [0, t_end]");
    if (!std::is_sorted(grid.begin(), grid.end()))
      throw Error("dimension", "sample grid must be ascending");
    if (grid.back() < t_end * (1.0 - 1e-12)) grid.push_back(t_end);
    return grid;
  }
  int count = std::max(2, static_cast<int>(std::ceil(opt.samples_per_period * t_end /
                                                     period)) + 1);
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = t_end * i / (count - 1);
  return grid;
}

}  // namespace detail

// Integrates dX/dt = J^{-1} H(t) X from X0 with an adaptive order-5(4) pair
// and dense output; samples are interpolated on the requested grid.
inline Trajectory integrate_matrizant(const PeriodicHamiltonian& sys, const Mat& x0,
                                      double t_end, const SymplecticContext& ctx,
                                      const IntegratorOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  sys.validate(ctx);
  if (x0.rows() != sys.dim || x0.cols() != sys.dim)
    throw Error("dimension", "initial state must be 2N x 2N");
  if (!(t_end > 0.0)) throw Error("dimension", "t_end must be positive");

  const int dim = sys.dim;
  const Mat jinv = ctx.J_inv();
  auto rhs = [&](const detail::OdeState& x, detail::OdeState& dxdt, double t) {
    Eigen::Map<const Mat> state(x.data(), dim, dim);
    Eigen::Map<Mat> derivative(dxdt.data(), dim, dim);
    derivative = jinv * (sys.coefficient(t) * state);
  };

  std::vector<double> grid = detail::sample_grid(opt, t_end, sys.period);

  Trajectory traj;
  traj.integrator_tol = opt.tol;
  bool track_drift = is_symplectic(x0, ctx).ok;
  double drift = 0.0;
  auto push = [&](double t, const Mat& state) {
    traj.times.push_back(t);
    traj.states.push_back(state);
    if (track_drift) drift = std::max(drift, is_symplectic(state, ctx).defect);
  };

  std::size_t gi = 0;
  while (gi < grid.size() && grid[gi] <= 0.0) {
    push(0.0, x0);
    ++gi;
  }

  detail::OdeState flat(static_cast<std::size_t>(dim) * dim);
  Eigen::Map<Mat>(flat.data(), dim, dim) = x0;

  auto stepper = odeint::make_dense_output(opt.tol, opt.tol,
                                           odeint::runge_kutta_dopri5<detail::OdeState>());
  stepper.initialize(flat, 0.0, t_end / 1024.0);

  std::uint64_t steps = 0;
  const double min_step = 1e-14 * std::max(1.0, t_end);
  while (gi < grid.size()) {
    std::pair<double, double> interval;
    try {
      interval = stepper.do_step(rhs);
    } catch (const std::exception&) {
      // The controller gave up; huge state means divergence, otherwise the
      // step size collapsed.
      if (!detail::all_finite(stepper.current_state()) ||
          detail::max_abs(stepper.current_state()) > 1e250)
        throw Error("blowup", "state diverged during integration");
      throw Error("stiff", "step size underflow");
    }
    ++steps;
    if (!detail::all_finite(stepper.current_state()))
      throw Error("blowup", "state diverged during integration");
    if (std::abs(stepper.current_time_step()) < min_step)
      throw Error("stiff", "step size underflow");
    if (steps > opt.max_steps) throw Error("stiff", "step budget exhausted");

    detail::OdeState out(flat.size());
    while (gi < grid.size() && grid[gi] <= interval.second) {
      stepper.calc_state(grid[gi], out);
      if (!detail::all_finite(out)) throw Error("blowup", "state diverged during integration");
      push(grid[gi], Mat(Eigen::Map<const Mat>(out.data(), dim, dim)));
      ++gi;
    }
  }

  if (track_drift) traj.max_symplectic_drift = drift;
  return traj;
}

inline Mat monodromy(const PeriodicHamiltonian& sys, const SymplecticContext& ctx,
                     const IntegratorOptions& opt = {}) {
  Mat id = Mat::Identity(sys.dim, sys.dim);
  return integrate_matrizant(sys, id, sys.period, ctx, opt).final_state();
}

// Fixed-step classical Runge-Kutta cross-check of the adaptive integrator.
inline Mat monodromy_fixed_rk4(const PeriodicHamiltonian& sys, const SymplecticContext& ctx,
                               int steps_per_period = 1 << 14) {
  namespace odeint = boost::numeric::odeint;
  sys.validate(ctx);
  const int dim = sys.dim;
  const Mat jinv = ctx.J_inv();
  auto rhs = [&](const detail::OdeState& x, detail::OdeState& dxdt, double t) {
    Eigen::Map<const Mat> state(x.data(), dim, dim);
    Eigen::Map<Mat> derivative(dxdt.data(), dim, dim);
    derivative = jinv * (sys.coefficient(t) * state);
  };

  detail::OdeState flat(static_cast<std::size_t>(dim) * dim);
  Eigen::Map<Mat>(flat.data(), dim, dim) = Mat::Identity(dim, dim);
  odeint::runge_kutta4<detail::OdeState> stepper;
  const double h = sys.period / steps_per_period;
  for (int i = 0; i < steps_per_period; ++i) stepper.do_step(rhs, flat, i * h, h);
  if (!detail::all_finite(flat)) throw Error("blowup", "state diverged during integration");
  return Mat(Eigen::Map<const Mat>(flat.data(), dim, dim));
}

struct PerturbedSystem {
  PeriodicHamiltonian system;
  Mat initial;
};

// Congruence-transformed system whose matrizant is (I + U U^T J) X(t): the
// coefficient becomes (I - U U^T J)^T H(t) (I - U U^T J) and the start I + U U^T J.
inline PerturbedSystem perturbed_system(const PeriodicHamiltonian& sys,
                                        const RankKPerturbation& p) {
  p.validate();
  if (sys.dim != p.basis.ctx.dim())
    throw Error("dimension", "perturbation dimension must match the system");
  if (p.scale == 0.0 || p.k() == 0)
    return {sys, Mat::Identity(sys.dim, sys.dim)};

  Mat m = perturbator_inverse(p);
  PeriodicHamiltonian transformed;
  transformed.dim = sys.dim;
  transformed.period = sys.period;
  transformed.coefficient = [eval = sys.coefficient, m](double t) {
    return Mat(m.transpose() * eval(t) * m);
  };
  return {transformed, perturbator(p)};
}

struct PsiCurves {
  std::vector<double> gaps;  // ||tilde - mapped|| per grid point
  Trajectory mapped;         // (I + U U^T J) X(t), the perturbed solution value
  Trajectory tilde;          // matrizant of the perturbed system
};

// Solution-equivalence gauge: integrates the original system (mapped through
// the perturbator) and the perturbed system, returning the gap norm per grid
// point together with both curves. Gaps are identically zero in exact
// arithmetic.
inline PsiCurves psi_curves(const PeriodicHamiltonian& sys, const RankKPerturbation& p,
                            const std::vector<double>& grid, const SymplecticContext& ctx,
                            const IntegratorOptions& base_opt = {}) {
  if (grid.empty()) throw Error("dimension", "psi needs a nonempty grid");
  if (grid.front() < 0.0 || grid.back() > sys.period * (1.0 + 1e-12))
    throw Error("dimension", "psi grid must lie in [0, P]");

  IntegratorOptions opt = base_opt;
  opt.grid = grid;
  double t_end = std::max(grid.back(), sys.period * 1e-9);

  Mat id = Mat::Identity(sys.dim, sys.dim);
  Trajectory plain = integrate_matrizant(sys, id, t_end, ctx, opt);
  PerturbedSystem ps = perturbed_system(sys, p);

  PsiCurves out;
  out.tilde = integrate_matrizant(ps.system, ps.initial, t_end, ctx, opt);

  Mat forward = perturbator(p);
  out.mapped.times = plain.times;
  out.mapped.integrator_tol = plain.integrator_tol;
  out.mapped.states.reserve(plain.states.size());
  for (const Mat& state : plain.states) out.mapped.states.push_back(forward * state);

  out.gaps.resize(plain.states.size());
  for (std::size_t i = 0; i < out.gaps.size(); ++i)
    out.gaps[i] = op_norm(Mat(out.tilde.states[i] - out.mapped.states[i]));

  // Drop the t_end pad appended when the grid stops short of t_end.
  if (out.gaps.size() > grid.size()) {
    out.gaps.resize(grid.size());
    out.mapped.times.resize(grid.size());
    out.mapped.states.resize(grid.size());
    out.tilde.times.resize(grid.size());
    out.tilde.states.resize(grid.size());
  }
  return out;
}

inline std::vector<double> psi(const PeriodicHamiltonian& sys, const RankKPerturbation& p,
                               const std::vector<double>& grid, const SymplecticContext& ctx,
                               const IntegratorOptions& base_opt = {}) {
  return psi_curves(sys, p, grid, ctx, base_opt).gaps;
}

}  // namespace sympert

#endif
