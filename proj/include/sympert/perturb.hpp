#ifndef SYMPERT_PERTURB_HPP
#define SYMPERT_PERTURB_HPP

#include <vector>

#include "sympert/isotropic.hpp"
#include "sympert/matcore.hpp"

namespace sympert {

// Structured rank-k perturbation parameter. The map it generates is
// I + (s U)(s U)^T J, which is symplectic because U is isotropic; the scale
// is kept separate so sweeps over {1, 1e-1, 1e-2, 1e-3} reuse one basis.
struct RankKPerturbation {
  IsotropicBasis basis;
  double scale = 1.0;

  int k() const { return basis.k(); }
  Mat u_eff() const { return scale * basis.U; }

  void validate() const {
    if (!(scale >= 0.0)) throw Error("structure", "scale must be nonnegative");
    if (basis.k() > 0) basis.validate();
  }
};

inline RankKPerturbation identity_perturbation(const SymplecticContext& ctx) {
  RankKPerturbation p;
  p.basis.U = Mat(ctx.dim(), 0);
  p.basis.ctx = ctx;
  p.scale = 0.0;
  return p;
}

inline Mat perturbator(const RankKPerturbation& p) {
  p.validate();
  const int dim = p.basis.ctx.dim();
  Mat u = p.u_eff();
  return Mat::Identity(dim, dim) + u * (u.transpose() * p.basis.ctx.J);
}

// Exact inverse: (U U^T J)^2 = 0 because U^T J U = 0.
inline Mat perturbator_inverse(const RankKPerturbation& p) {
  p.validate();
  const int dim = p.basis.ctx.dim();
  Mat u = p.u_eff();
  return Mat::Identity(dim, dim) - u * (u.transpose() * p.basis.ctx.J);
}

// dim ker(I~ - I) = 2N - k for scale > 0; the unperturbed map has full kernel.
inline int perturbator_kernel_dim(const RankKPerturbation& p) {
  p.validate();
  const int dim = p.basis.ctx.dim();
  if (p.scale == 0.0 || p.k() == 0) return dim;
  Mat u = p.u_eff();
  Mat shift = u * (u.transpose() * p.basis.ctx.J);
  return dim - numerical_rank(shift, p.basis.ctx.tol_rank);
}

inline Mat apply(const RankKPerturbation& p, const Mat& w) {
  p.validate();
  SymplecticCheck check = is_symplectic(w, p.basis.ctx);
  if (!check.ok) throw Error("not_symplectic", "operand fails the symplectic check");
  return perturbator(p) * w;
}

// Splits the rank-k map into k commuting rank-one maps; cross terms vanish
// by isotropy, so the product reproduces the perturbator in any order.
inline std::vector<RankKPerturbation> factor_rank_one(const RankKPerturbation& p) {
  p.validate();
  std::vector<RankKPerturbation> factors;
  factors.reserve(p.k());
  for (int j = 0; j < p.k(); ++j) {
    RankKPerturbation f;
    f.basis.U = p.basis.U.col(j);
    f.basis.ctx = p.basis.ctx;
    f.scale = p.scale;
    factors.push_back(std::move(f));
  }
  return factors;
}

// Additive change of the coefficient matrix under the perturbed flow:
// E = (I - U U^T J)^T H (I - U U^T J) - H, symmetric by construction.
inline Mat perturbation_term(const RankKPerturbation& p, const Mat& h) {
  p.validate();
  const int dim = p.basis.ctx.dim();
  if (h.rows() != dim || h.cols() != dim)
    throw Error("dimension", "coefficient matrix must be 2N x 2N");
  double scale = std::max(1.0, op_norm(h));
  if (op_norm(Mat(h - h.transpose())) > p.basis.ctx.tol_struct * scale)
    throw Error("not_symmetric", "coefficient matrix must be symmetric");
  Mat m = perturbator_inverse(p);
  return m.transpose() * h * m - h;
}

}  // namespace sympert

#endif
