#ifndef SYMPERT_STABILITY_HPP
#define SYMPERT_STABILITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sympert/matcore.hpp"

namespace sympert {

enum class EigClass { inside, outside, red, green, mixed };
enum class Verdict { strongly_stable, stable_not_strong, unstable };

inline const char* to_string(EigClass c) {
  switch (c) {
    case EigClass::inside: return "inside";
    case EigClass::outside: return "outside";
    case EigClass::red: return "red";
    case EigClass::green: return "green";
    default: return "mixed";
  }
}

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::strongly_stable: return "strongly_stable";
    case Verdict::stable_not_strong: return "stable_not_strong";
    default: return "unstable";
  }
}

// Symmetric part of J W; its quadratic form on a unit-circle eigenvector
// decides the eigenvalue's color.
inline Mat s_zero(const Mat& w, const SymplecticContext& ctx) {
  if (w.rows() != ctx.dim() || w.cols() != ctx.dim())
    throw Error("dimension", "operand must be 2N x 2N");
  Mat a = ctx.J * w;
  return 0.5 * (a + a.transpose());
}

struct ColorEntry {
  Complex lambda;
  CVec vector;
  EigClass cls = EigClass::mixed;
  double quad = 0.0;       // real part of x^H S0 x
  double quad_imag = 0.0;  // imaginary residue, ~0 for symmetric S0
};

struct ColorSpectrum {
  std::vector<ColorEntry> entries;
  Mat s0;
  double tol_quad = 0.0;
  double pairing_defect = 0.0;  // max over lambda of min over mu of |lambda mu - 1|

  int count(EigClass c) const {
    int n = 0;
    for (const ColorEntry& e : entries) n += e.cls == c ? 1 : 0;
    return n;
  }
  int on_circle_count() const {
    return count(EigClass::red) + count(EigClass::green) + count(EigClass::mixed);
  }
};

inline ColorSpectrum classify(const Mat& w, const SymplecticContext& ctx) {
  ColorSpectrum out;
  out.s0 = s_zero(w, ctx);
  out.tol_quad = 1e-8 * op_norm(out.s0);

  ComplexSpectrum es = eig(w);
  CMat s0c = out.s0.cast<Complex>();
  for (int i = 0; i < es.values.size(); ++i) {
    ColorEntry entry;
    entry.lambda = es.values(i);
    entry.vector = es.vectors.col(i);
    double r = std::abs(entry.lambda);
    if (r < 1.0 - ctx.tol_circle) {
      entry.cls = EigClass::inside;
    } else if (r > 1.0 + ctx.tol_circle) {
      entry.cls = EigClass::outside;
    } else {
      Complex q = (entry.vector.adjoint() * (s0c * entry.vector))(0, 0);
      entry.quad = q.real();
      entry.quad_imag = std::abs(q.imag());
      entry.cls = entry.quad > out.tol_quad
                      ? EigClass::red
                      : (entry.quad < -out.tol_quad ? EigClass::green : EigClass::mixed);
    }
    out.entries.push_back(std::move(entry));
  }

  for (const ColorEntry& a : out.entries) {
    double best = std::numeric_limits<double>::infinity();
    for (const ColorEntry& b : out.entries)
      best = std::min(best, std::abs(a.lambda * b.lambda - 1.0));
    out.pairing_defect = std::max(out.pairing_defect, best);
  }
  return out;
}

struct GapInfo {
  double delta_s = std::numeric_limits<double>::infinity();
  double min_gap_any = std::numeric_limits<double>::infinity();
};

// delta_s: minimal distance between a red and a green eigenvalue (+inf when a
// color class is empty). min_gap_any: minimal pairwise distance among all
// unit-circle eigenvalues, regardless of color.
inline GapInfo delta_s(const ColorSpectrum& spec) {
  GapInfo info;
  const std::size_t n = spec.entries.size();
  for (std::size_t i = 0; i < n; ++i) {
    const ColorEntry& a = spec.entries[i];
    bool a_circle = a.cls == EigClass::red || a.cls == EigClass::green ||
                    a.cls == EigClass::mixed;
    if (!a_circle) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      const ColorEntry& b = spec.entries[j];
      bool b_circle = b.cls == EigClass::red || b.cls == EigClass::green ||
                      b.cls == EigClass::mixed;
      if (!b_circle) continue;
      double gap = std::abs(a.lambda - b.lambda);
      info.min_gap_any = std::min(info.min_gap_any, gap);
      bool red_green = (a.cls == EigClass::red && b.cls == EigClass::green) ||
                       (a.cls == EigClass::green && b.cls == EigClass::red);
      if (red_green) info.delta_s = std::min(info.delta_s, gap);
    }
  }
  return info;
}

struct AveragedEntry {
  int n;
  Mat s;
  double norm;
};

// Averages of the power-congruence sequence via the doubling recursion
// S(n+1) = (S(n) + (W^T)^{2^n} S(n) W^{2^n}) / 2, S(0) = I. Overflow is
// recorded as +inf norms, not an error: unbounded growth signals instability.
inline std::vector<AveragedEntry> averaged_sequence(const Mat& w, int n_max) {
  if (n_max < 0 || n_max > 60) throw Error("dimension", "n_max must lie in [0, 60]");
  if (w.rows() != w.cols()) throw Error("dimension", "operand must be square");
  const int dim = static_cast<int>(w.rows());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<AveragedEntry> out;
  Mat s = Mat::Identity(dim, dim);
  out.push_back({0, s, op_norm(s)});
  Mat wpow = w;
  bool dead = false;
  for (int n = 1; n <= n_max; ++n) {
    if (!dead) {
      if (!wpow.allFinite()) dead = true;
    }
    if (!dead) {
      Mat s_next = 0.5 * (s + wpow.transpose() * s * wpow);
      if (!s_next.allFinite()) {
        dead = true;
      } else {
        s = s_next;
        wpow = wpow * wpow;
      }
    }
    if (dead)
      out.push_back({n, Mat::Constant(dim, dim, inf), inf});
    else
      out.push_back({n, s, op_norm(s)});
  }
  return out;
}

struct ProjectorStats {
  double trace = 0.0;
  double idempotency_defect = 0.0;
  double commutation_defect = 0.0;
  double imag_residue = 0.0;
  bool ill_posed = false;
};

struct SpectralProjectors {
  Mat p0, pinf, pr, pg;
  ProjectorStats p0_stats, pinf_stats, pr_stats, pg_stats;
  double decomposition_defect = 0.0;  // ||P_r + P_g - I||
  double cross_defect = 0.0;          // ||P_r^T S0 P_g||
  bool defective_circle = false;
};

namespace detail {

inline Mat realify_projector(const CMat& p, ProjectorStats* stats) {
  stats->imag_residue = p.imag().cwiseAbs().maxCoeff();
  return p.real();
}

}  // namespace detail

// Projectors onto the inside / outside / red / green eigenvalue groups,
// built by eigendecomposition grouping. Groups closed under conjugation give
// real projectors; the imaginary residue is recorded and discarded.
inline SpectralProjectors spectral_projectors(const Mat& w, const ColorSpectrum& spec,
                                              const SymplecticContext& ctx) {
  const int dim = static_cast<int>(w.rows());
  if (w.cols() != dim || static_cast<int>(spec.entries.size()) != dim)
    throw Error("dimension", "spectrum does not match the matrix");
  SpectralProjectors out;

  CMat v(dim, dim);
  for (int i = 0; i < dim; ++i) v.col(i) = spec.entries[i].vector;
  Eigen::PartialPivLU<CMat> lu(v);
  CMat vinv = lu.inverse();

  auto build = [&](EigClass cls, ProjectorStats* stats) {
    CMat scaled = CMat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
      if (spec.entries[i].cls == cls) scaled.col(i) = v.col(i);
    CMat p = scaled * vinv;
    Mat real_p = detail::realify_projector(p, stats);
    stats->trace = real_p.trace();
    stats->idempotency_defect = op_norm(Mat(real_p * real_p - real_p));
    stats->commutation_defect = op_norm(Mat(w * real_p - real_p * w));
    return real_p;
  };

  out.p0 = build(EigClass::inside, &out.p0_stats);
  out.pinf = build(EigClass::outside, &out.pinf_stats);
  out.pr = build(EigClass::red, &out.pr_stats);
  out.pg = build(EigClass::green, &out.pg_stats);

  // Unit-circle defectiveness: a cluster whose geometric multiplicity falls
  // short of its size has a Jordan block and unbounded powers.
  std::vector<Complex> circle;
  for (const ColorEntry& e : spec.entries)
    if (e.cls == EigClass::red || e.cls == EigClass::green || e.cls == EigClass::mixed)
      circle.push_back(e.lambda);
  std::vector<bool> used(circle.size(), false);
  for (std::size_t i = 0; i < circle.size(); ++i) {
    if (used[i]) continue;
    std::vector<Complex> cluster{circle[i]};
    used[i] = true;
    for (std::size_t j = i + 1; j < circle.size(); ++j) {
      if (!used[j] && std::abs(circle[j] - circle[i]) <= 1e-6) {
        cluster.push_back(circle[j]);
        used[j] = true;
      }
    }
    if (cluster.size() < 2) continue;
    Complex center(0.0, 0.0);
    for (const Complex& c : cluster) center += c;
    center /= static_cast<double>(cluster.size());
    CMat shifted = w.cast<Complex>() - center * CMat::Identity(dim, dim);
    int geometric = dim - numerical_rank(shifted, ctx.tol_rank);
    if (geometric < static_cast<int>(cluster.size())) out.defective_circle = true;
  }

  bool has_circle = spec.on_circle_count() > 0;
  bool has_mixed = spec.count(EigClass::mixed) > 0;
  out.p0_stats.ill_posed = has_circle;
  out.pinf_stats.ill_posed = has_circle;
  out.pr_stats.ill_posed = has_mixed || out.defective_circle;
  out.pg_stats.ill_posed = has_mixed || out.defective_circle;

  Mat id = Mat::Identity(dim, dim);
  out.decomposition_defect = op_norm(Mat(out.pr + out.pg - id));
  out.cross_defect = op_norm(Mat(out.pr.transpose() * spec.s0 * out.pg));
  return out;
}

inline SpectralProjectors spectral_projectors(const Mat& w, const SymplecticContext& ctx) {
  return spectral_projectors(w, classify(w, ctx), ctx);
}

struct AveragedConvergence {
  bool converged = false;
  double relative_change = std::numeric_limits<double>::infinity();
  double min_eigenvalue = -std::numeric_limits<double>::infinity();
};

// Convergence of the averaged sequence to a positive definite limit:
// ||S(n) - S(n-1)|| / ||S(n-1)|| <= rel_tol at the final step and the final
// S(n) has a positive smallest eigenvalue. Stricter than the norm-ratio test
// the verdict uses; the identity passes it trivially.
inline AveragedConvergence averaged_convergence(const std::vector<AveragedEntry>& history,
                                                double rel_tol = 1e-6) {
  AveragedConvergence out;
  if (history.size() < 2) return out;
  const AveragedEntry& prev = history[history.size() - 2];
  const AveragedEntry& last = history.back();
  if (!last.s.allFinite() || !prev.s.allFinite() || prev.norm == 0.0) return out;
  out.relative_change = op_norm(Mat(last.s - prev.s)) / prev.norm;
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Mat>(last.s).eigenvalues().minCoeff();
  out.converged = out.relative_change <= rel_tol && out.min_eigenvalue > 0.0;
  return out;
}

// True when the norm history has settled: the last `window` ratios stay
// within `tol` of 1 and the tail is finite.
inline bool norms_settled(const std::vector<AveragedEntry>& history, int window = 5,
                          double tol = 1e-3) {
  if (static_cast<int>(history.size()) < window + 1) return false;
  for (std::size_t i = history.size() - window; i < history.size(); ++i) {
    double prev = history[i - 1].norm;
    double cur = history[i].norm;
    if (!std::isfinite(prev) || !std::isfinite(cur) || prev == 0.0) return false;
    if (std::abs(cur / prev - 1.0) > tol) return false;
  }
  return true;
}

inline Verdict verdict(const ColorSpectrum& spec, const std::vector<AveragedEntry>& history,
                       bool defective_circle) {
  if (spec.count(EigClass::outside) > 0 || spec.count(EigClass::inside) > 0)
    return Verdict::unstable;
  if (defective_circle) return Verdict::unstable;
  if (spec.count(EigClass::mixed) == 0 && norms_settled(history))
    return Verdict::strongly_stable;
  return Verdict::stable_not_strong;
}

struct StabilityReport {
  double delta_s = std::numeric_limits<double>::infinity();
  double min_gap_any = std::numeric_limits<double>::infinity();
  std::vector<double> s_n_norms;  // index n = 0..n_max
  AveragedConvergence s_n_convergence;
  SpectralProjectors projectors;
  double pairing_defect = 0.0;
  Verdict verdict = Verdict::unstable;
  int n_inside = 0, n_outside = 0, n_red = 0, n_green = 0, n_mixed = 0;
};

inline StabilityReport analyze(const Mat& w, const SymplecticContext& ctx, int n_max = 30) {
  ColorSpectrum spec = classify(w, ctx);
  GapInfo gaps = delta_s(spec);
  std::vector<AveragedEntry> history = averaged_sequence(w, n_max);
  SpectralProjectors proj = spectral_projectors(w, spec, ctx);

  StabilityReport report;
  report.delta_s = gaps.delta_s;
  report.min_gap_any = gaps.min_gap_any;
  report.s_n_norms.reserve(history.size());
  for (const AveragedEntry& e : history) report.s_n_norms.push_back(e.norm);
  report.s_n_convergence = averaged_convergence(history);
  report.projectors = proj;
  report.pairing_defect = spec.pairing_defect;
  report.verdict = verdict(spec, history, proj.defective_circle);
  report.n_inside = spec.count(EigClass::inside);
  report.n_outside = spec.count(EigClass::outside);
  report.n_red = spec.count(EigClass::red);
  report.n_green = spec.count(EigClass::green);
  report.n_mixed = spec.count(EigClass::mixed);
  return report;
}

}  // namespace sympert

#endif
