#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "sympert/hamiltonians.hpp"
#include "sympert/isotropic.hpp"
#include "sympert/ode.hpp"

using namespace sympert;
using sympert::testing::error_code_of;
using Catch::Matchers::WithinAbs;

namespace {

PeriodicHamiltonian constant_system(const Mat& h, double period) {
  PeriodicHamiltonian sys;
  sys.dim = static_cast<int>(h.rows());
  sys.period = period;
  sys.coefficient = [h](double) { return h; };
  return sys;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = a + (b - a) * i / (count - 1);
  return grid;
}

// Multiset comparison robust to ordering ties among equal-modulus eigenvalues.
void require_spectra_match(const CVec& got, const std::vector<Complex>& expected,
                           double tol) {
  REQUIRE(static_cast<std::size_t>(got.size()) == expected.size());
  for (const Complex& e : expected) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < got.size(); ++i) best = std::min(best, std::abs(got(i) - e));
    REQUIRE(best <= tol);
  }
  for (int i = 0; i < got.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& e : expected) best = std::min(best, std::abs(got(i) - e));
    REQUIRE(best <= tol);
  }
}

RankKPerturbation make_perturbation(Rng& rng, const SymplecticContext& ctx, int k,
                                    double scale) {
  RankKPerturbation p;
  p.basis = isotropic_from(rng.gauss_mat(ctx.dim(), k), ctx).basis;
  p.scale = scale;
  return p;
}

double max_state_norm(const Trajectory& traj) {
  double m = 0.0;
  for (const Mat& x : traj.states) m = std::max(m, op_norm(x));
  return m;
}

}  // namespace

TEST_CASE("constant coefficients rotate the plane", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(1);
  PeriodicHamiltonian sys = constant_system(Mat::Identity(2, 2), 2.0 * M_PI);

  Trajectory traj =
      integrate_matrizant(sys, Mat(Mat::Identity(2, 2)), M_PI / 2.0, ctx);
  REQUIRE(traj.times.front() == 0.0);
  REQUIRE(traj.times.back() == M_PI / 2.0);
  REQUIRE((traj.states.front() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  Mat quarter(2, 2);
  quarter << 0, 1, -1, 0;
  REQUIRE(op_norm(Mat(traj.final_state() - quarter)) <= 1e-10);

  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double t = traj.times[i];
    Mat expected(2, 2);
    expected << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    REQUIRE(op_norm(Mat(traj.states[i] - expected)) <= 1e-10);
  }

  REQUIRE(traj.max_symplectic_drift.has_value());
  REQUIRE(*traj.max_symplectic_drift <= 1e-11);

  SECTION("a full rotation returns to the identity") {
    Mat full = monodromy(sys, ctx);
    REQUIRE(op_norm(Mat(full - Mat::Identity(2, 2))) <= 1e-9);
  }
}

TEST_CASE("decoupled oscillators have closed-form matrizants", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);
  PeriodicHamiltonian sys = example1(0.0, 0.0);
  const double period = 2.0 * M_PI / std::sqrt(7.0);
  REQUIRE_THAT(sys.period, WithinAbs(period, 1e-15));

  const double freq[3] = {2.0, std::sqrt(3.0), std::sqrt(2.0)};

  SECTION("matrizant matches the per-oscillator formula") {
    double t = period / 3.0;
    Trajectory traj = integrate_matrizant(sys, Mat(Mat::Identity(6, 6)), t, ctx);
    Mat expected = Mat::Zero(6, 6);
    for (int j = 0; j < 3; ++j) {
      double w = freq[j];
      expected(j, j) = std::cos(w * t);
      expected(j, 3 + j) = std::sin(w * t) / w;
      expected(3 + j, j) = -w * std::sin(w * t);
      expected(3 + j, 3 + j) = std::cos(w * t);
    }
    REQUIRE(op_norm(Mat(traj.final_state() - expected)) <= 1e-10);
  }

  SECTION("multipliers are the oscillator phases") {
    Mat x_p = monodromy(sys, ctx);
    std::vector<Complex> expected;
    for (double w : freq) {
      expected.push_back(std::exp(Complex(0.0, w * period)));
      expected.push_back(std::exp(Complex(0.0, -w * period)));
    }
    require_spectra_match(eig(x_p).values, expected, 1e-9);
  }
}

TEST_CASE("published systems keep multipliers where the tables say", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);

  SECTION("weak forcing keeps all multipliers on the unit circle") {
    CVec values = eig(monodromy(example1(2.0, 4.0), ctx)).values;
    for (int i = 0; i < values.size(); ++i)
      REQUIRE(std::abs(std::abs(values(i)) - 1.0) <= 1e-6);
  }

  SECTION("strong forcing pushes multipliers off the circle") {
    CVec values = eig(monodromy(example1(15.0, 4.0), ctx)).values;
    double top = 0.0;
    for (int i = 0; i < values.size(); ++i) top = std::max(top, std::abs(values(i)));
    REQUIRE(top > 1.001);
  }
}

TEST_CASE("matrizants stay symplectic and obey the semigroup law", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);
  PeriodicHamiltonian systems[] = {example1(2.0, 4.0), example2(2.0, 2.0)};

  for (const PeriodicHamiltonian& sys : systems) {
    Trajectory one_period =
        integrate_matrizant(sys, Mat(Mat::Identity(6, 6)), sys.period, ctx);
    REQUIRE(one_period.max_symplectic_drift.has_value());
    REQUIRE(*one_period.max_symplectic_drift <= 1e-9);

    const double p = sys.period;
    IntegratorOptions opt;
    opt.grid = {0.0, p / 4.0, p / 2.0, p, p + p / 4.0, p + p / 2.0};
    Trajectory ext =
        integrate_matrizant(sys, Mat(Mat::Identity(6, 6)), 1.5 * p, ctx, opt);
    const Mat& x_p = ext.states[3];
    REQUIRE(op_norm(Mat(ext.states[4] - ext.states[1] * x_p)) <= 1e-8);
    REQUIRE(op_norm(Mat(ext.states[5] - ext.states[2] * x_p)) <= 1e-8);
  }
}

TEST_CASE("fixed-step cross-check agrees with the adaptive run", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);
  PeriodicHamiltonian sys = example1(2.0, 4.0);
  Mat adaptive = monodromy(sys, ctx);
  Mat fixed = monodromy_fixed_rk4(sys, ctx);
  REQUIRE(op_norm(Mat(adaptive - fixed)) <= 1e-8);
}

TEST_CASE("perturbed systems change the coefficient by the computed term", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);
  PeriodicHamiltonian sys = example1(2.0, 4.0);
  Rng rng(107);
  RankKPerturbation p = make_perturbation(rng, ctx, 2, 0.1);
  PerturbedSystem ps = perturbed_system(sys, p);

  REQUIRE((ps.initial - perturbator(p)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_NOTHROW(ps.system.validate(ctx, 64));

  for (int i = 0; i < 64; ++i) {
    double t = sys.period * i / 64.0;
    Mat h = sys.coefficient(t);
    Mat shifted = ps.system.coefficient(t);
    REQUIRE(op_norm(Mat(shifted - h - perturbation_term(p, h))) <= 1e-13);
    REQUIRE(op_norm(Mat(shifted - shifted.transpose())) <= 1e-13);
    REQUIRE(op_norm(Mat(ps.system.coefficient(t + sys.period) - shifted)) <= 1e-12);
  }

  SECTION("zero scale returns the system unchanged") {
    RankKPerturbation none = p;
    none.scale = 0.0;
    PerturbedSystem same = perturbed_system(sys, none);
    REQUIRE((same.initial - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 8; ++i) {
      double t = sys.period * i / 8.0;
      REQUIRE((same.system.coefficient(t) - sys.coefficient(t)).cwiseAbs().maxCoeff() ==
              0.0);
    }
  }

  SECTION("dimension mismatch is rejected") {
    SymplecticContext small = SymplecticContext::standard(1);
    RankKPerturbation tiny;
    tiny.basis.U = Mat::Identity(2, 2).leftCols(1);
    tiny.basis.ctx = small;
    tiny.scale = 1.0;
    REQUIRE(error_code_of([&] { perturbed_system(sys, tiny); }) == "dimension");
  }
}

TEST_CASE("solution equivalence holds across ranks and scales", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);
  Rng rng(127);
  std::vector<double> grid = linspace(0.0, 0.0, 1);

  struct Case {
    PeriodicHamiltonian sys;
    int rank;
  };
  Case cases[] = {{example1(2.0, 4.0), 2}, {example2(2.0, 2.0), 3}};
  const double scales[] = {1.0, 1e-1, 1e-2, 1e-3};

  for (Case& c : cases) {
    grid = linspace(0.0, c.sys.period, 101);
    Trajectory plain =
        integrate_matrizant(c.sys, Mat(Mat::Identity(6, 6)), c.sys.period, ctx);
    double state_scale = max_state_norm(plain);

    for (double scale : scales) {
      RankKPerturbation p = make_perturbation(rng, ctx, c.rank, scale);
      std::vector<double> gaps = psi(c.sys, p, grid, ctx);
      REQUIRE(gaps.size() == grid.size());
      double worst = *std::max_element(gaps.begin(), gaps.end());
      REQUIRE(worst <= 1e3 * 1e-12 * state_scale);
    }

    RankKPerturbation none = make_perturbation(rng, ctx, c.rank, 0.0);
    std::vector<double> zeros = psi(c.sys, none, grid, ctx);
    for (double g : zeros) REQUIRE(g == 0.0);
  }

  SECTION("tightening the tolerance shrinks the gap") {
    PeriodicHamiltonian sys = example1(2.0, 4.0);
    RankKPerturbation p = make_perturbation(rng, ctx, 2, 0.1);
    std::vector<double> fine_grid = linspace(0.0, sys.period, 101);

    IntegratorOptions loose;
    loose.tol = 1e-9;
    IntegratorOptions tight;
    tight.tol = 1e-10;
    std::vector<double> loose_gaps = psi(sys, p, fine_grid, ctx, loose);
    std::vector<double> tight_gaps = psi(sys, p, fine_grid, ctx, tight);
    double loose_max = *std::max_element(loose_gaps.begin(), loose_gaps.end());
    double tight_max = *std::max_element(tight_gaps.begin(), tight_gaps.end());
    REQUIRE(loose_max >= 5.0 * tight_max);
  }
}

TEST_CASE("integration reports hard failures", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(1);

  SECTION("exponential divergence overflows to blowup") {
    Mat h(2, 2);
    h << -1600.0, 0.0, 0.0, 1.0;
    PeriodicHamiltonian sys = constant_system(h, 1.0);
    REQUIRE(error_code_of([&] {
              integrate_matrizant(sys, Mat(Mat::Identity(2, 2)), 20.0, ctx);
            }) == "blowup");
  }

  SECTION("an infinitely winding rotation underflows the step size") {
    // The state stays orthogonal (finite) while the angular speed diverges
    // at the pole, so the controller shrinks the step without bound.
    PeriodicHamiltonian sys;
    sys.dim = 2;
    sys.period = 2.0;
    sys.coefficient = [](double t) {
      return Mat(Mat::Identity(2, 2) / std::abs(1.1 - std::fmod(t, 2.0)));
    };
    REQUIRE(error_code_of([&] {
              integrate_matrizant(sys, Mat(Mat::Identity(2, 2)), 2.0, ctx);
            }) == "stiff");
  }

  SECTION("coefficients that turn into NaN propagate as blowup") {
    PeriodicHamiltonian sys;
    sys.dim = 2;
    sys.period = 0.5;
    sys.coefficient = [](double t) {
      if (t <= 1.1) return Mat(Mat::Identity(2, 2));
      return Mat(Mat::Constant(2, 2, std::numeric_limits<double>::quiet_NaN()));
    };
    REQUIRE(error_code_of([&] {
              integrate_matrizant(sys, Mat(Mat::Identity(2, 2)), 2.0, ctx);
            }) == "blowup");
  }

  SECTION("invalid shapes and ranges") {
    PeriodicHamiltonian sys = constant_system(Mat::Identity(2, 2), 1.0);
    REQUIRE(error_code_of([&] {
              integrate_matrizant(sys, Mat(Mat::Identity(4, 4)), 1.0, ctx);
            }) == "dimension");
    REQUIRE(error_code_of([&] {
              integrate_matrizant(sys, Mat(Mat::Identity(2, 2)), 0.0, ctx);
            }) == "dimension");
    REQUIRE(error_code_of([&] { psi(sys, RankKPerturbation{{Mat(2, 0), ctx}, 0.0}, {}, ctx); }) ==
            "dimension");
  }

  SECTION("asymmetric coefficients are rejected up front") {
    Mat h(2, 2);
    h << 0.0, 1.0, -1.0, 0.0;
    PeriodicHamiltonian sys = constant_system(h, 1.0);
    REQUIRE(error_code_of([&] {
              integrate_matrizant(sys, Mat(Mat::Identity(2, 2)), 1.0, ctx);
            }) == "not_symmetric");
  }
}

TEST_CASE("trig builders reproduce the published coefficients", "[ode]") {
  SymplecticContext ctx = SymplecticContext::standard(3);

  SECTION("first system at t = 0") {
    Mat h = example1(2.0, 4.0).coefficient(0.0);
    Mat expected = Mat::Zero(6, 6);
    expected.topLeftCorner(3, 3) << 6, 0, 4, 0, 3, 0, 4, 0, 2;
    expected.bottomRightCorner(3, 3) = Mat::Identity(3, 3);
    REQUIRE((h - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("second system at t = 0") {
    Mat h = example2(2.0, 2.0).coefficient(0.0);
    Mat expected = Mat::Zero(6, 6);
    expected.topLeftCorner(3, 3) << 6, 0, 2, 0, 2, 0, 2, 0, 3;
    expected.bottomRightCorner(3, 3) = Mat::Identity(3, 3);
    REQUIRE((h - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("generic evaluator matches a direct formula") {
    PeriodicHamiltonian sys = example1(2.0, 4.0);
    const double g = std::sqrt(7.0);
    for (int i = 0; i < 16; ++i) {
      double t = sys.period * i / 16.0;
      Mat h = sys.coefficient(t);
      REQUIRE_THAT(h(0, 0), WithinAbs(4.0 + 2.0 * std::cos(g * t), 1e-15));
      REQUIRE_THAT(h(0, 2), WithinAbs(4.0 * std::cos(2.0 * g * t), 1e-15));
      REQUIRE_THAT(h(1, 2), WithinAbs(2.0 * std::sin(5.0 * g * t), 1e-15));
      REQUIRE_THAT(h(1, 1), WithinAbs(3.0, 0.0));
      REQUIRE(op_norm(Mat(h - h.transpose())) == 0.0);
    }
    REQUIRE_NOTHROW(sys.validate(ctx, 64));
    REQUIRE_NOTHROW(example2(2.0, 2.0).validate(ctx, 64));
  }

  SECTION("builder rejects bad inputs") {
    Mat sym = Mat::Identity(4, 4);
    REQUIRE(error_code_of([&] { trig_hamiltonian({}, 1.0); }) == "dimension");
    REQUIRE(error_code_of([&] { trig_hamiltonian({{sym, 0.0, false}}, 0.0); }) ==
            "dimension");
    Mat odd = Mat::Identity(3, 3);
    REQUIRE(error_code_of([&] { trig_hamiltonian({{odd, 0.0, false}}, 1.0); }) ==
            "dimension");
    Mat skew(2, 2);
    skew << 0, 1, -1, 0;
    REQUIRE(error_code_of([&] { trig_hamiltonian({{skew, 1.0, false}}, 1.0); }) ==
            "not_symmetric");
  }
}
