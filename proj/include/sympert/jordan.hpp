#ifndef SYMPERT_JORDAN_HPP
#define SYMPERT_JORDAN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sympert/isotropic.hpp"
#include "sympert/matcore.hpp"
#include "sympert/rng.hpp"

namespace sympert {

// Block structure at one eigenvalue: (block_size, multiplicity) pairs in
// strictly descending block size. Empty when lambda is not an eigenvalue.
struct SegreCharacteristic {
  Complex lambda;
  std::vector<std::pair<int, int>> sizes;
  bool borderline = false;

  bool empty() const { return sizes.empty(); }
  int algebraic_multiplicity() const {
    int a = 0;
    for (const auto& [n, l] : sizes) a += n * l;
    return a;
  }
  int block_count() const {
    int c = 0;
    for (const auto& [n, l] : sizes) c += l;
    return c;
  }
};

inline std::string format_sizes(const std::vector<std::pair<int, int>>& sizes) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) os << ",";
    os << "(" << sizes[i].first << "," << sizes[i].second << ")";
  }
  os << "]";
  return os.str();
}

namespace detail {

// Rank of one power against a cutoff anchored to ||A - lambda I||^j. The
// per-matrix relative cutoff would count roundoff in an exactly nilpotent
// power as rank >= 1, so the anchor must come from the unpowered matrix.
inline int anchored_rank(const CMat& power, double cutoff, bool* borderline) {
  Vec sv = Eigen::JacobiSVD<CMat>(power).singularValues();
  if (sv(0) == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
    if (sv(i) >= cutoff / 10.0 && sv(i) <= cutoff * 10.0) *borderline = true;
  }
  return rank;
}

}  // namespace detail

inline SegreCharacteristic segre_at(const Mat& a, Complex lambda, double tol_rank = 1e-10) {
  if (a.rows() != a.cols()) throw Error("dimension", "operand must be square");
  const int dim = static_cast<int>(a.rows());
  SegreCharacteristic out;
  out.lambda = lambda;

  CVec values = eig(a).values;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < values.size(); ++i)
    dist = std::min(dist, std::abs(values(i) - lambda));
  if (dist > 1e-6) return out;

  CMat shifted = a.cast<Complex>() - lambda * CMat::Identity(dim, dim);
  double scale = op_norm(shifted);
  // A numerically zero shift means lambda exhausts the spectrum with a full
  // set of trivial blocks; the power loop would mistake the roundoff floor
  // for structure because its cutoffs scale with the noise itself.
  if (scale <= tol_rank * std::max(1.0, op_norm(a))) {
    out.sizes.push_back({1, dim});
    return out;
  }

  std::vector<int> ranks{dim};
  CMat power = CMat::Identity(dim, dim);
  double cutoff = tol_rank;
  for (int j = 1; j <= dim; ++j) {
    power = power * shifted;
    cutoff *= scale;
    int r = detail::anchored_rank(power, cutoff, &out.borderline);
    ranks.push_back(r);
    if (r == ranks[j - 1]) break;
  }

  // Weyr numbers w_j = r_{j-1} - r_j count blocks of size >= j; the Segre
  // sizes are the conjugate partition.
  std::vector<int> weyr;
  for (std::size_t j = 1; j < ranks.size(); ++j) weyr.push_back(ranks[j - 1] - ranks[j]);
  while (!weyr.empty() && weyr.back() == 0) weyr.pop_back();
  for (int n = static_cast<int>(weyr.size()); n >= 1; --n) {
    int here = weyr[n - 1];
    int above = n < static_cast<int>(weyr.size()) ? weyr[n] : 0;
    if (here - above > 0) out.sizes.push_back({n, here - above});
  }
  return out;
}

// Symplectic matrix with the prescribed block structure, via the pairing
// diag(B, B^{-T}) which is symplectic for either block form J. Eigenvalues
// away from +-1 may be given alone (the reciprocal partner is implied) or
// together with an explicitly matching partner. At +-1 the generator only
// produces paired copies, so every multiplicity there must be even; odd
// multiplicities raise "structure_unrealizable" even in the sizes where a
// different embedding could realize them.
inline Mat symplectic_with_structure(const std::vector<SegreCharacteristic>& parts,
                                     const SymplecticContext& ctx, Rng* rng = nullptr) {
  detail::require_block_form(ctx);

  struct Entry {
    double lambda;
    std::vector<std::pair<int, int>> sizes;
    bool used = false;
  };
  std::vector<Entry> entries;
  for (const SegreCharacteristic& part : parts) {
    if (part.empty()) continue;
    if (std::abs(part.lambda.imag()) > 1e-12)
      throw Error("structure_unrealizable", "complex eigenvalues are not generated");
    double lam = part.lambda.real();
    if (std::abs(lam) < 1e-12)
      throw Error("structure_unrealizable", "zero is never a symplectic eigenvalue");
    entries.push_back({lam, part.sizes, false});
  }

  // One (size, eigenvalue) item per Jordan block on the B side of the pair.
  std::vector<std::pair<int, double>> b_blocks;
  auto push_blocks = [&](const Entry& e, int copies_divisor) {
    for (const auto& [n, l] : e.sizes)
      for (int c = 0; c < l / copies_divisor; ++c) b_blocks.push_back({n, e.lambda});
  };

  for (Entry& e : entries) {
    if (e.used) continue;
    e.used = true;
    bool self_paired = std::abs(e.lambda - 1.0) <= 1e-9 || std::abs(e.lambda + 1.0) <= 1e-9;
    if (self_paired) {
      for (const auto& [n, l] : e.sizes) {
        (void)n;
        if (l % 2 != 0)
          throw Error("structure_unrealizable",
                      "multiplicities at +-1 must be even for the paired embedding");
      }
      push_blocks(e, 2);
      continue;
    }
    for (Entry& other : entries) {
      if (other.used) continue;
      if (std::abs(other.lambda - 1.0 / e.lambda) <= 1e-9) {
        if (other.sizes != e.sizes)
          throw Error("structure_unrealizable",
                      "reciprocal eigenvalues must carry equal block sizes");
        other.used = true;
        break;
      }
    }
    push_blocks(e, 1);
  }

  int half = 0;
  for (const auto& [n, lam] : b_blocks) {
    (void)lam;
    half += n;
  }
  if (half != ctx.n_half)
    throw Error("dimension", "blocks fill " + std::to_string(2 * half) +
                                 " of " + std::to_string(ctx.dim()) + " dimensions");

  std::sort(b_blocks.begin(), b_blocks.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first > b.first;
  });

  const int n_half = ctx.n_half;
  Mat b = Mat::Zero(n_half, n_half);
  int at = 0;
  for (const auto& [n, lam] : b_blocks) {
    for (int i = 0; i < n; ++i) {
      b(at + i, at + i) = lam;
      if (i + 1 < n) b(at + i, at + i + 1) = 1.0;
    }
    at += n;
  }

  Mat w = Mat::Zero(ctx.dim(), ctx.dim());
  w.topLeftCorner(n_half, n_half) = b;
  w.bottomRightCorner(n_half, n_half) = inverse(b).transpose();

  if (rng) {
    Mat q = isotropic_from(rng->gauss_mat(ctx.dim(), n_half), ctx).Q;
    w = q.transpose() * w * q;
  }
  return w;
}

// Predicted post-perturbation structure at lambda for a generic rank-k
// perturbation. Writing k = l_1 + ... + l_{i-1} + o with 1 <= o <= l_i, the
// generic law removes every block above level i and o blocks at level i. At
// lambda = +-1 with n_i odd, an odd offset o = 2k_i - 1 instead promotes one
// block to size n_i + 1 and removes 2k_i blocks of size n_i; an even offset
// removes plainly.
inline std::vector<std::pair<int, int>> predict_rank_k(const SegreCharacteristic& before,
                                                       bool self_inverse, int k,
                                                       std::string* case_label = nullptr) {
  std::vector<std::pair<int, int>> predicted;
  std::string label = "generic_removal";
  int remaining = k;
  std::size_t level = 0;
  while (level < before.sizes.size() && remaining >= before.sizes[level].second) {
    remaining -= before.sizes[level].second;
    ++level;
  }
  if (level >= before.sizes.size()) {
    // All blocks removed: lambda leaves the spectrum.
    if (case_label) *case_label = label;
    return predicted;
  }
  auto [n_i, l_i] = before.sizes[level];
  if (remaining > 0) {
    if (!self_inverse || n_i % 2 == 0) {
      label = self_inverse ? "even_block_removal" : "generic_removal";
      predicted.push_back({n_i, l_i - remaining});
    } else if (remaining % 2 == 1) {
      label = "odd_promotion";
      predicted.push_back({n_i + 1, 1});
      if (l_i - remaining - 1 > 0) predicted.push_back({n_i, l_i - remaining - 1});
    } else {
      label = "even_offset_removal";
      predicted.push_back({n_i, l_i - remaining});
    }
  } else {
    // k consumed exactly by the levels above; level i survives untouched.
    predicted.push_back({n_i, l_i});
  }
  for (std::size_t s = level + 1; s < before.sizes.size(); ++s)
    predicted.push_back(before.sizes[s]);
  if (case_label) *case_label = label;
  return predicted;
}

struct ThrReport {
  std::string case_label;
  SegreCharacteristic before;
  std::vector<std::pair<int, int>> predicted;
  std::map<std::string, int> observed_histogram;
  int trials = 0;
  int matches = 0;
  int borderline_count = 0;
  double match_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Random structured rank-k perturbations of W, compared against the predicted
// block structure at lambda. Each trial draws its own seeded generator, picks
// k columns of a random Lagrangian basis, mixes them by a random invertible
// k x k matrix, and normalizes; borderline rank decisions are excluded from
// the match-fraction denominator.
inline ThrReport check_thr(const Mat& w, Complex lambda, int k, int trials,
                           const SymplecticContext& ctx, std::uint64_t seed = 20260819) {
  if (k < 1 || k > ctx.n_half) throw Error("dimension", "rank must lie in [1, N]");
  if (trials < 1) throw Error("dimension", "at least one trial is required");
  if (w.rows() != ctx.dim() || w.cols() != ctx.dim())
    throw Error("dimension", "matrix size does not match context");

  ThrReport report;
  report.seed = seed;
  report.trials = trials;
  report.before = segre_at(w, lambda, ctx.tol_rank);
  if (report.before.empty())
    throw Error("deficient_input", "lambda is not an eigenvalue of the input");

  bool self_inverse = std::abs(lambda.imag()) <= 1e-9 &&
                      (std::abs(lambda.real() - 1.0) <= 1e-9 ||
                       std::abs(lambda.real() + 1.0) <= 1e-9);
  report.predicted = predict_rank_k(report.before, self_inverse, k, &report.case_label);

  const int dim = ctx.dim();
  const int n_half = ctx.n_half;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(seed + 1000003ull * static_cast<std::uint64_t>(trial));
    Mat lagrangian = isotropic_from(rng.gauss_mat(dim, n_half), ctx).basis.U;

    std::vector<int> idx(n_half);
    for (int i = 0; i < n_half; ++i) idx[i] = i;
    for (int i = n_half - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.below(static_cast<std::uint64_t>(i + 1))]);

    Mat chosen(dim, k);
    for (int c = 0; c < k; ++c) chosen.col(c) = lagrangian.col(idx[c]);
    Mat u = chosen * rng.gauss_mat(k, k);
    for (int c = 0; c < k; ++c) {
      double norm = u.col(c).norm();
      if (norm > 0.0) u.col(c) /= norm;
    }

    Mat perturbed = w + u * (u.transpose() * (ctx.J * w));
    SegreCharacteristic after = segre_at(perturbed, lambda, ctx.tol_rank);
    if (after.borderline) {
      ++report.borderline_count;
      continue;
    }
    ++report.observed_histogram[format_sizes(after.sizes)];
    if (after.sizes == report.predicted) ++report.matches;
  }

  int counted = report.trials - report.borderline_count;
  report.match_fraction = counted > 0 ? static_cast<double>(report.matches) / counted : 0.0;
  return report;
}

}  // namespace sympert

#endif
