#ifndef SYMPERT_ISOTROPIC_HPP
#define SYMPERT_ISOTROPIC_HPP

#include <cmath>
#include <vector>

#include "sympert/matcore.hpp"

namespace sympert {

// Which half of a 2N-vector a Householder pair is chosen from.
enum class Half { first, second };

namespace detail {

// The reduction assumes the block form J = [[0, -I],[I, 0]] or its negative.
inline bool is_block_form(const SymplecticContext& ctx) {
  const int n = ctx.n_half;
  Mat ref = Mat::Zero(2 * n, 2 * n);
  ref.topRightCorner(n, n) = -Mat::Identity(n, n);
  ref.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return ctx.J == ref || ctx.J == Mat(-ref);
}

inline void require_block_form(const SymplecticContext& ctx) {
  if (!is_block_form(ctx))
    throw Error("structure", "the reduction requires a block-form J");
}

}  // namespace detail

// One factor of the reduction: either a pair of identical Householder
// reflections (I - beta v v^T) applied to both halves, or the plane rotation
// mixing rows j and N+j. Orthogonal and symplectic for block-form J.
struct ElementarySymplecticOrthogonal {
  enum class Kind { householder_pair, givens };

  Kind kind = Kind::householder_pair;
  int j = 1;  // 1-based pivot index, 1 <= j <= N
  int n_half = 0;
  Vec v;             // N-vector, first j-1 entries zero
  double beta = 0.0;  // satisfies beta*(beta*v^T v - 2) = 0
  double theta = 0.0;  // in [-pi/2, pi/2)

  bool is_identity() const {
    return kind == Kind::householder_pair ? beta == 0.0 : theta == 0.0;
  }

  Mat realize() const {
    const int n = n_half;
    Mat e = Mat::Identity(2 * n, 2 * n);
    if (kind == Kind::householder_pair) {
      if (beta != 0.0) {
        Mat h = Mat::Identity(n, n) - beta * (v * v.transpose());
        e.topLeftCorner(n, n) = h;
        e.bottomRightCorner(n, n) = h;
      }
    } else {
      double c = std::cos(theta), s = std::sin(theta);
      e(j - 1, j - 1) = c;
      e(j - 1, n + j - 1) = s;
      e(n + j - 1, j - 1) = -s;
      e(n + j - 1, n + j - 1) = c;
    }
    return e;
  }

  // a <- E^T a. The reduction of the source matrix applies transposes.
  void apply_reduction(Mat& a) const {
    const int n = n_half;
    if (kind == Kind::householder_pair) {
      if (beta == 0.0) return;
      a.topRows(n) -= beta * v * (v.transpose() * a.topRows(n));
      a.bottomRows(n) -= beta * v * (v.transpose() * a.bottomRows(n));
    } else {
      double c = std::cos(theta), s = std::sin(theta);
      Eigen::RowVectorXd top = a.row(j - 1);
      Eigen::RowVectorXd bottom = a.row(n + j - 1);
      a.row(j - 1) = c * top - s * bottom;
      a.row(n + j - 1) = s * top + c * bottom;
    }
  }

  // q <- q E, accumulating the orthogonal-symplectic factor.
  void accumulate(Mat& q) const {
    const int n = n_half;
    if (kind == Kind::householder_pair) {
      if (beta == 0.0) return;
      q.leftCols(n) -= beta * (q.leftCols(n) * v) * v.transpose();
      q.rightCols(n) -= beta * (q.rightCols(n) * v) * v.transpose();
    } else {
      double c = std::cos(theta), s = std::sin(theta);
      Vec left = q.col(j - 1);
      Vec right = q.col(n + j - 1);
      q.col(j - 1) = c * left - s * right;
      q.col(n + j - 1) = s * left + c * right;
    }
  }
};

// Reflector pair zeroing, within the chosen half of x, the entries below the
// pivot row j (rows j+1..N of that half). The surviving pivot is nonnegative;
// a zero tail yields the identity (beta = 0).
inline ElementarySymplecticOrthogonal householder_pair(int j, const Vec& x,
                                                       const SymplecticContext& ctx,
                                                       Half half = Half::first) {
  detail::require_block_form(ctx);
  const int n = ctx.n_half;
  if (j < 1 || j > n) throw Error("dimension", "pivot index out of range");
  if (x.size() != 2 * n) throw Error("dimension", "vector length must be 2N");

  ElementarySymplecticOrthogonal e;
  e.kind = ElementarySymplecticOrthogonal::Kind::householder_pair;
  e.j = j;
  e.n_half = n;
  e.v = Vec::Zero(n);
  e.beta = 0.0;

  const int offset = half == Half::first ? 0 : n;
  const int m = n - j + 1;
  Vec s = x.segment(offset + j - 1, m);

  if (m <= 1) return e;
  Vec tail = s.tail(m - 1);
  if (tail.cwiseAbs().maxCoeff() == 0.0) return e;

  double mu = s.stableNorm();
  Vec vsub = s;
  if (s(0) > 0.0)
    vsub(0) = -tail.squaredNorm() / (s(0) + mu);
  else
    vsub(0) = s(0) - mu;
  double vsq = vsub.squaredNorm();
  if (vsq == 0.0) return e;

  e.v.segment(j - 1, m) = vsub;
  e.beta = 2.0 / vsq;
  return e;
}

// Rotation G_{j,j+N}(theta) with theta in [-pi/2, pi/2) chosen so that the
// reduction (which applies G^T) zeroes entry N+j of x:
// sin(theta) x(j) + cos(theta) x(N+j) = 0.
inline ElementarySymplecticOrthogonal givens_symplectic(int j, const Vec& x,
                                                        const SymplecticContext& ctx) {
  detail::require_block_form(ctx);
  const int n = ctx.n_half;
  if (j < 1 || j > n) throw Error("dimension", "pivot index out of range");
  if (x.size() != 2 * n) throw Error("dimension", "vector length must be 2N");

  ElementarySymplecticOrthogonal e;
  e.kind = ElementarySymplecticOrthogonal::Kind::givens;
  e.j = j;
  e.n_half = n;
  e.theta = 0.0;

  double a = x(j - 1);
  double b = x(n + j - 1);
  if (b == 0.0) return e;
  if (std::abs(a) < 1e-300 && std::abs(b) < 1e-300) return e;

  double theta = std::atan2(-b, a);
  if (theta < -M_PI / 2.0) theta += M_PI;
  if (theta >= M_PI / 2.0) theta -= M_PI;
  e.theta = theta;
  return e;
}

// Orthonormal columns spanning a J-isotropic subspace: U^T U = I, U^T J U = 0,
// k <= N.
struct IsotropicBasis {
  Mat U;
  SymplecticContext ctx;

  int k() const { return static_cast<int>(U.cols()); }

  double orthonormality_defect() const {
    return op_norm(Mat(U.transpose() * U - Mat::Identity(k(), k())));
  }

  double isotropy_defect() const {
    return op_norm(Mat(U.transpose() * ctx.J * U));
  }

  void validate() const {
    if (U.rows() != ctx.dim()) throw Error("dimension", "basis rows must equal 2N");
    if (k() > ctx.n_half) throw Error("dimension", "isotropic dimension exceeds N");
    if (orthonormality_defect() > ctx.tol_struct)
      throw Error("structure", "columns are not orthonormal");
    if (isotropy_defect() > ctx.tol_struct)
      throw Error("structure", "columns are not J-isotropic");
  }
};

struct IsotropicFromResult {
  IsotropicBasis basis;
  Mat Q;        // accumulated orthogonal-symplectic factor, U = Q(:, 1:k)
  Mat reduced;  // Q^T A: first half upper triangular, second half strictly so
  std::vector<ElementarySymplecticOrthogonal> factors;
};

// Reduction of a full-column-rank A in R^{2N x k}, k <= N. Per column j:
// zero the last N-j entries of the whole vector (second-half tail), zero entry
// N+j with the plane rotation, zero first-half entries j+1..N. U = Q(:, 1:k)
// is orthonormal and J-isotropic because Q is orthogonal-symplectic.
inline IsotropicFromResult isotropic_from(const Mat& a, const SymplecticContext& ctx) {
  detail::require_block_form(ctx);
  const int n = ctx.n_half;
  const int k = static_cast<int>(a.cols());
  if (a.rows() != 2 * n) throw Error("dimension", "input must have 2N rows");
  if (k < 1 || k > n) throw Error("dimension", "column count must satisfy 1 <= k <= N");
  if (numerical_rank(a, ctx.tol_rank) < k)
    throw Error("deficient_input", "input columns are numerically dependent");

  IsotropicFromResult result;
  result.reduced = a;
  result.Q = Mat::Identity(2 * n, 2 * n);
  Mat& work = result.reduced;
  Mat& q = result.Q;

  for (int j = 1; j <= k; ++j) {
    ElementarySymplecticOrthogonal e1 =
        householder_pair(j, work.col(j - 1), ctx, Half::second);
    e1.apply_reduction(work);
    e1.accumulate(q);

    ElementarySymplecticOrthogonal e2 = givens_symplectic(j, work.col(j - 1), ctx);
    e2.apply_reduction(work);
    e2.accumulate(q);

    ElementarySymplecticOrthogonal e3 =
        householder_pair(j, work.col(j - 1), ctx, Half::first);
    e3.apply_reduction(work);
    e3.accumulate(q);

    result.factors.push_back(e1);
    result.factors.push_back(e2);
    result.factors.push_back(e3);
  }

  result.basis.U = q.leftCols(k);
  result.basis.ctx = ctx;
  return result;
}

// Grows an isotropic basis to a Lagrangian one (k = N). Each new column is
// taken from the orthogonal complement of span([U, JU]), which keeps the set
// orthonormal and J-isotropic; a final reduction pass canonicalizes. The span
// of the first k output columns equals the input span.
inline IsotropicBasis extend_to_lagrangian(const IsotropicBasis& basis) {
  basis.validate();
  const SymplecticContext& ctx = basis.ctx;
  const int n = ctx.n_half;
  Mat cols = basis.U;

  while (cols.cols() < n) {
    const int m = static_cast<int>(cols.cols());
    Mat pair(2 * n, 2 * m);
    pair.leftCols(m) = cols;
    pair.rightCols(m) = ctx.J * cols;
    Eigen::HouseholderQR<Mat> qr(pair);
    Mat full = qr.householderQ();
    Mat grown(2 * n, m + 1);
    grown.leftCols(m) = cols;
    grown.col(m) = full.col(2 * m);
    cols = grown;
  }

  return isotropic_from(cols, ctx).basis;
}

// True when JS is skew-symmetric, i.e. Krylov subspaces of S are isotropic.
inline bool is_skew_hamiltonian(const Mat& s, const SymplecticContext& ctx) {
  Mat js = ctx.J * s;
  return op_norm(Mat(js + js.transpose())) <= ctx.tol_struct * std::max(1.0, op_norm(js));
}

// Checks that span{u, S u, ..., S^{j-1} u} is J-isotropic.
inline bool krylov_isotropy_check(const Mat& s, const Vec& u, int j,
                                  const SymplecticContext& ctx) {
  if (s.rows() != ctx.dim() || s.cols() != ctx.dim() || u.size() != ctx.dim())
    throw Error("dimension", "operands must match the context dimension");
  if (j < 1) throw Error("dimension", "Krylov depth must be positive");
  if (!is_skew_hamiltonian(s, ctx))
    throw Error("structure", "J*S must be skew-symmetric");

  Mat krylov(ctx.dim(), j);
  Vec w = u;
  for (int col = 0; col < j; ++col) {
    double scale = w.stableNorm();
    krylov.col(col) = scale == 0.0 ? Vec(Vec::Zero(ctx.dim())) : Vec(w / scale);
    w = s * krylov.col(col);
  }

  Eigen::ColPivHouseholderQR<Mat> qr(krylov);
  qr.setThreshold(ctx.tol_rank);
  const int rank = static_cast<int>(qr.rank());
  if (rank == 0) return true;
  Mat full = qr.householderQ();
  Mat basis = full.leftCols(rank);
  return op_norm(Mat(basis.transpose() * ctx.J * basis)) <= ctx.tol_struct;
}

// Lagrangian-span predicate: rank N and L^T J L = 0 relative to the column scale.
inline bool spans_lagrangian(const Mat& l, const SymplecticContext& ctx,
                             double* defect = nullptr) {
  if (l.rows() != ctx.dim()) throw Error("dimension", "operand must have 2N rows");
  double iso = op_norm(Mat(l.transpose() * ctx.J * l));
  double scale = std::max(1.0, op_norm(l));
  if (defect) *defect = iso / (scale * scale);
  if (l.cols() != ctx.n_half) return false;
  if (numerical_rank(l, ctx.tol_rank) != ctx.n_half) return false;
  return iso <= ctx.tol_struct * scale * scale;
}

}  // namespace sympert

#endif
