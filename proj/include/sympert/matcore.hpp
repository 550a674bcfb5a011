#ifndef SYMPERT_MATCORE_HPP
#define SYMPERT_MATCORE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sympert {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Error with a stable machine-readable code ("dimension", "singular_cayley", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& a) {
  using Plain = typename Derived::PlainObject;
  Plain dense = a;
  if (dense.size() == 0) return 0.0;
  if (!dense.allFinite()) return std::numeric_limits<double>::infinity();
  return Eigen::JacobiSVD<Plain>(dense).singularValues()(0);
}

// Dimension N plus the skew form J (2N x 2N) and tolerances.
// Invariants: J^T = -J exactly as stored, J*J = -I within tol_struct.
struct SymplecticContext {
  int n_half = 0;
  Mat J;
  double tol_struct = 1e-10;
  double tol_circle = 1e-8;
  double tol_rank = 1e-10;

  int dim() const { return 2 * n_half; }

  // J^{-1} = -J since J*J = -I.
  Mat J_inv() const { return -J; }

  // J = [[0, -I],[I, 0]]; the form used by the bundled example systems.
  static SymplecticContext standard(int n_half) {
    SymplecticContext ctx;
    ctx.n_half = n_half;
    ctx.J = Mat::Zero(2 * n_half, 2 * n_half);
    ctx.J.topRightCorner(n_half, n_half) = -Mat::Identity(n_half, n_half);
    ctx.J.bottomLeftCorner(n_half, n_half) = Mat::Identity(n_half, n_half);
    return ctx;
  }

  // J = [[0, I],[-I, 0]].
  static SymplecticContext alternate(int n_half) {
    SymplecticContext ctx = standard(n_half);
    ctx.J = -ctx.J;
    return ctx;
  }

  // Any J with J^T = -J and J*J = -I is accepted.
  static SymplecticContext with_form(const Mat& J, double tol_struct = 1e-10) {
    if (J.rows() != J.cols() || J.rows() % 2 != 0)
      throw Error("dimension", "form matrix must be square of even order");
    SymplecticContext ctx;
    ctx.n_half = static_cast<int>(J.rows()) / 2;
    ctx.J = J;
    ctx.tol_struct = tol_struct;
    ctx.validate();
    return ctx;
  }

  void validate() const {
    if (J.rows() != dim() || J.cols() != dim())
      throw Error("dimension", "J must be 2N x 2N");
    if ((J + J.transpose()).cwiseAbs().maxCoeff() != 0.0)
      throw Error("structure", "J must be exactly skew-symmetric");
    Mat jj = J * J + Mat::Identity(dim(), dim());
    if (op_norm(jj) > tol_struct)
      throw Error("structure", "J*J must equal -I");
  }
};

struct SymplecticCheck {
  bool ok = false;
  double defect = std::numeric_limits<double>::infinity();
};

// defect = ||W^T J W - J||_2; ok iff defect <= tol_struct.
inline SymplecticCheck is_symplectic(const Mat& w, const SymplecticContext& ctx) {
  if (w.rows() != ctx.dim() || w.cols() != ctx.dim())
    throw Error("dimension", "matrix size does not match context");
  SymplecticCheck check;
  check.defect = op_norm(Mat(w.transpose() * ctx.J * w - ctx.J));
  check.ok = check.defect <= ctx.tol_struct;
  return check;
}

// Full spectrum with unit-norm eigenvectors and per-pair residuals
// ||A x - lambda x||_2, sorted by (|lambda|, arg lambda).
struct ComplexSpectrum {
  CVec values;
  CMat vectors;
  Vec residuals;

  double max_residual() const {
    return residuals.size() == 0 ? 0.0 : residuals.maxCoeff();
  }
};

inline ComplexSpectrum eig(const Mat& a) {
  if (a.rows() != a.cols()) throw Error("dimension", "eig needs a square matrix");
  Eigen::EigenSolver<Mat> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error("eig_no_convergence", "dense eigensolver did not converge");

  const int n = static_cast<int>(a.rows());
  CVec values = solver.eigenvalues();
  CMat vectors = solver.eigenvectors();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    double mi = std::abs(values(i)), mj = std::abs(values(j));
    if (mi != mj) return mi < mj;
    return std::arg(values(i)) < std::arg(values(j));
  });

  ComplexSpectrum spectrum;
  spectrum.values.resize(n);
  spectrum.vectors.resize(n, n);
  spectrum.residuals.resize(n);
  for (int idx = 0; idx < n; ++idx) {
    int src = order[idx];
    CVec x = vectors.col(src);
    x /= x.norm();
    spectrum.values(idx) = values(src);
    spectrum.vectors.col(idx) = x;
    spectrum.residuals(idx) = (a.cast<Complex>() * x - values(src) * x).norm();
  }
  return spectrum;
}

inline ComplexSpectrum eig(const CMat& a) {
  if (a.rows() != a.cols()) throw Error("dimension", "eig needs a square matrix");
  Eigen::ComplexEigenSolver<CMat> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error("eig_no_convergence", "dense eigensolver did not converge");

  const int n = static_cast<int>(a.rows());
  CVec values = solver.eigenvalues();
  CMat vectors = solver.eigenvectors();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    double mi = std::abs(values(i)), mj = std::abs(values(j));
    if (mi != mj) return mi < mj;
    return std::arg(values(i)) < std::arg(values(j));
  });

  ComplexSpectrum spectrum;
  spectrum.values.resize(n);
  spectrum.vectors.resize(n, n);
  spectrum.residuals.resize(n);
  for (int idx = 0; idx < n; ++idx) {
    int src = order[idx];
    CVec x = vectors.col(src);
    x /= x.norm();
    spectrum.values(idx) = values(src);
    spectrum.vectors.col(idx) = x;
    spectrum.residuals(idx) = (a * x - values(src) * x).norm();
  }
  return spectrum;
}

// Number of singular values above tol_rank * sigma_max.
template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& a, double tol_rank) {
  using Plain = typename Derived::PlainObject;
  Plain dense = a;
  if (dense.size() == 0) throw Error("dimension", "numerical_rank needs a nonempty matrix");
  Vec sv = Eigen::JacobiSVD<Plain>(dense).singularValues();
  double cutoff = tol_rank * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return sv(0) == 0.0 ? 0 : rank;
}

struct LuInfo {
  double rcond = 1.0;
  bool ill_conditioned = false;  // rcond below 1e-12
};

// LU solve with partial pivoting; reciprocal condition estimate attached.
inline Mat lu_solve(const Mat& a, const Mat& b, LuInfo* info = nullptr) {
  Eigen::PartialPivLU<Mat> lu(a);
  if (info) {
    info->rcond = lu.rcond();
    info->ill_conditioned = info->rcond < 1e-12;
  }
  return lu.solve(b);
}

inline Mat inverse(const Mat& a, LuInfo* info = nullptr) {
  return lu_solve(a, Mat::Identity(a.rows(), a.cols()), info);
}

namespace detail {

inline void require_no_eigenvalue_near(const Mat& w, double point,
                                       const SymplecticContext& ctx) {
  CVec values = eig(w).values;
  for (int i = 0; i < values.size(); ++i)
    if (std::abs(values(i) - point) <= ctx.tol_circle)
      throw Error("singular_cayley",
                  "spectrum touches the excluded point of the transform");
}

}  // namespace detail

// C_1(W) = (I - W)^{-1}(I + W); requires 1 not in the spectrum of W.
// For J-symplectic W the result A is J-Hamiltonian: JA = (JA)^T.
inline Mat cayley_plus(const Mat& w, const SymplecticContext& ctx, LuInfo* info = nullptr) {
  if (w.rows() != ctx.dim() || w.cols() != ctx.dim())
    throw Error("dimension", "matrix size does not match context");
  detail::require_no_eigenvalue_near(w, 1.0, ctx);
  Mat eye = Mat::Identity(w.rows(), w.cols());
  return lu_solve(eye - w, Mat(eye + w), info);
}

// C_{-1}(W) = (I + W)^{-1}(I - W); requires -1 not in the spectrum of W.
inline Mat cayley_minus(const Mat& w, const SymplecticContext& ctx, LuInfo* info = nullptr) {
  if (w.rows() != ctx.dim() || w.cols() != ctx.dim())
    throw Error("dimension", "matrix size does not match context");
  detail::require_no_eigenvalue_near(w, -1.0, ctx);
  Mat eye = Mat::Identity(w.rows(), w.cols());
  return lu_solve(eye + w, Mat(eye - w), info);
}

// Round trips: W = (A - I)(A + I)^{-1} for A = C_1(W),
//              W = (I - B)(B + I)^{-1} for B = C_{-1}(W).
inline Mat cayley_plus_inverse_map(const Mat& a, LuInfo* info = nullptr) {
  Mat eye = Mat::Identity(a.rows(), a.cols());
  Mat rhs = (a - eye).transpose();
  Mat solved = lu_solve(Mat((a + eye).transpose()), rhs, info);
  return solved.transpose();
}

inline Mat cayley_minus_inverse_map(const Mat& b, LuInfo* info = nullptr) {
  Mat eye = Mat::Identity(b.rows(), b.cols());
  Mat rhs = (eye - b).transpose();
  Mat solved = lu_solve(Mat((b + eye).transpose()), rhs, info);
  return solved.transpose();
}

}  // namespace sympert

#endif
