#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gnes/ppa.hpp"

#include <cmath>

using namespace gnes;

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

// Resolvent of B(omega) = mu * omega: J(omega) = omega / (1 + mu).
ResolventOracle linear_resolvent(double mu) {
  return [mu](const Vec& omega, int) {
    StepResult r;
    r.u = omega / (1.0 + mu);
    r.comms = 1;
    return r;
  };
}

// Resolvent of the skew rotation B = [[0,-1],[1,0]]: J = (I + B)^{-1}.
Vec skew_resolvent(const Vec& omega) {
  Mat j(2, 2);
  j << 0.5, 0.5, -0.5, 0.5;
  return j * omega;
}

Vec random_vec(Rng& rng, int n, double lo, double hi) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("km_step: gamma in {0,1} is exact") {
  Vec omega(2), u(2);
  omega << 0.1, -0.2;
  u << 0.7, 0.3;
  const Vec at1 = km_step(omega, u, 1.0);
  CHECK(at1[0] == u[0]);
  CHECK(at1[1] == u[1]);
  const Vec at0 = km_step(omega, u, 0.0);
  CHECK(at0[0] == omega[0]);
  CHECK(at0[1] == omega[1]);
  const Vec mid = km_step(omega, u, 0.5);
  CHECK(mid[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("plain PPA on B(omega) = omega halves the iterate") {
  // J = (I + I)^{-1} = Id/2: omega = 2 -> 1 -> 0.5 -> ...
  std::vector<double> seen;
  StepObserver obs = [&](int, const Vec&, const Vec&, const StepResult&, double,
                         const Vec& next) { seen.push_back(next[0]); };
  StopRule stop;
  stop.tol = 1e-12;
  const EngineResult res = run(linear_resolvent(1.0), scalar(2.0), Schedule::plain(), stop, obs);
  REQUIRE(seen.size() >= 2);
  CHECK(seen[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(seen[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(res.converged);
  CHECK(std::abs(res.omega[0]) <= 1e-11);
}

TEST_CASE("B(omega) = 2 omega contracts at 1/3 per step, inside the 2/3 envelope") {
  Vec omega = scalar(2.0);
  const auto oracle = linear_resolvent(2.0);
  double prev = std::abs(omega[0]);
  for (int k = 0; k < 20; ++k) {
    omega = km_step(omega, oracle(omega, k).u, 1.0);
    const double cur = std::abs(omega[0]);
    CHECK(cur == doctest::Approx(prev / 3.0).epsilon(1e-13));
    CHECK(cur <= (2.0 / 3.0) * prev + 1e-15);
    prev = cur;
  }

  // Relaxed variants stay within the linear-rate envelope
  // rho_gamma = max(|1 - gamma (1 - 1/(1+mu))|, gamma - 1).
  for (double gamma : {1.2, 1.5, 1.9}) {
    Vec w = scalar(1.0);
    const double rho = std::max(std::abs(1.0 - gamma * 2.0 / 3.0), gamma - 1.0);
    double bound = 1.0;
    for (int k = 0; k < 20; ++k) {
      w = km_step(w, oracle(w, k).u, gamma);
      bound *= rho;
      CHECK(std::abs(w[0]) <= bound + 1e-14);
    }
  }
}

TEST_CASE("degenerate schedules reproduce Plain bit-for-bit") {
  // Non-trivial 2-D dynamics so any extrapolation arithmetic would show up.
  const auto oracle = [](const Vec& omega, int) {
    StepResult r;
    r.u = skew_resolvent(omega);
    return r;
  };
  Vec w0(2);
  w0 << 1.3, -0.4;
  StopRule stop;
  stop.tol = 1e-10;
  stop.max_iters = 60;

  const EngineResult plain = run(oracle, w0, Schedule::plain(), stop);
  const EngineResult zeta0 = run(oracle, w0, Schedule::inertia(0.0), stop);
  const EngineResult eta0 = run(oracle, w0, Schedule::alternated_inertia(0.0), stop);
  const EngineResult g1 = run(oracle, w0, Schedule::overrelax(1.0), stop);

  REQUIRE(zeta0.iterations == plain.iterations);
  REQUIRE(eta0.iterations == plain.iterations);
  REQUIRE(g1.iterations == plain.iterations);
  for (int i = 0; i < 2; ++i) {
    CHECK(zeta0.omega[i] == plain.omega[i]);
    CHECK(eta0.omega[i] == plain.omega[i]);
    CHECK(g1.omega[i] == plain.omega[i]);
  }
}

TEST_CASE("schedule validation rejects out-of-range parameters") {
  CHECK_THROWS_AS(Schedule::overrelax(0.9).validate(), Error);
  CHECK_THROWS_AS(Schedule::overrelax(2.0).validate(), Error);
  CHECK_THROWS_AS(Schedule::overrelax(2.5).validate(), Error);
  CHECK_THROWS_AS(Schedule::inertia(1.0 / 3.0).validate(), Error);
  CHECK_THROWS_AS(Schedule::inertia(-0.1).validate(), Error);
  CHECK_THROWS_AS(Schedule::alternated_inertia(1.1).validate(), Error);
  CHECK_NOTHROW(Schedule::overrelax(1.99).validate());
  CHECK_NOTHROW(Schedule::inertia(0.33).validate());
  CHECK_NOTHROW(Schedule::alternated_inertia(1.0).validate());
}

TEST_CASE("fejer_check: exact runs pass, an expanding relaxation is flagged") {
  // Exact plain run on the skew resolvent, reference = fixed point 0.
  std::vector<Vec> iterates;
  std::vector<double> gammas, errs;
  Vec w(2);
  w << 1.0, 0.5;
  iterates.push_back(w);
  for (int k = 0; k < 30; ++k) {
    w = skew_resolvent(w);
    iterates.push_back(w);
    gammas.push_back(1.0);
    errs.push_back(0.0);
  }
  const FejerReport good = fejer_check(iterates, gammas, errs, Vec::Zero(2));
  CHECK(good.ok);
  CHECK(good.first_violation == -1);

  // gamma = 2.5 turns the same resolvent into an expansion; flag it.
  std::vector<Vec> bad_it;
  std::vector<double> bad_g, bad_e;
  Vec v(2);
  v << 1.0, 0.5;
  bad_it.push_back(v);
  for (int k = 0; k < 10; ++k) {
    v = v + 2.5 * (skew_resolvent(v) - v);  // km_step itself rejects gamma > 2
    bad_it.push_back(v);
    bad_g.push_back(2.5);
    bad_e.push_back(0.0);
  }
  const FejerReport bad = fejer_check(bad_it, bad_g, bad_e, Vec::Zero(2));
  CHECK_FALSE(bad.ok);
  CHECK(bad.first_violation >= 0);
  CHECK(bad.worst_slack < 0.0);
}

TEST_CASE("fejer_check: summable inexactness is absorbed by the error budget") {
  Rng rng(11);
  std::vector<Vec> iterates;
  std::vector<double> gammas, errs;
  Vec w(2);
  w << 2.0, -1.0;
  iterates.push_back(w);
  for (int k = 0; k < 200; ++k) {
    const double eps_k = 1.0 / ((k + 1.0) * (k + 1.0));
    Vec noise = random_vec(rng, 2, -1.0, 1.0);
    noise *= eps_k / std::max(noise.norm(), 1e-12);
    w = skew_resolvent(w) + noise;
    iterates.push_back(w);
    gammas.push_back(1.0);
    errs.push_back(eps_k);
  }
  const FejerReport rep = fejer_check(iterates, gammas, errs, Vec::Zero(2));
  CHECK(rep.ok);
}

TEST_CASE("fejer_check: weighted metric uses the P norm") {
  Mat p(2, 2);
  p << 4.0, 0.0, 0.0, 1.0;
  // Sequence shrinking in P-norm but not in the Euclidean norm:
  // (1, 0) -> (0, 1.5): P-norms 2 -> 1.5, Euclidean 1 -> 1.5.
  std::vector<Vec> iterates;
  Vec a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.5;
  iterates.push_back(a);
  iterates.push_back(b);
  const std::vector<double> g{1.0}, e{0.0};
  CHECK(fejer_check(iterates, g, e, Vec::Zero(2), &p).ok);
  CHECK_FALSE(fejer_check(iterates, g, e, Vec::Zero(2)).ok);
}

TEST_CASE("quasinonexpansiveness of the toy resolvents") {
  // <omega - u, u - omega*> >= 0 for resolvents of monotone operators.
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec omega = random_vec(rng, 2, -5.0, 5.0);
    const Vec u_lin = omega / 3.0;  // B = 2 omega, omega* = 0
    CHECK((omega - u_lin).dot(u_lin) >= -1e-8);
    const Vec u_skew = skew_resolvent(omega);
    CHECK((omega - u_skew).dot(u_skew) >= -1e-8);
  }
}

TEST_CASE("residual_rate: constants, short input, and the k r_k statistic") {
  CHECK_THROWS_AS(residual_rate(std::vector<double>(5, 1.0)), Error);

  // Constant displacement d: r_k = d^2 for all k, so C = n d^2.
  const int n = 50;
  const double d = 0.25;
  const ResidualRate cst = residual_rate(std::vector<double>(n, d));
  REQUIRE(static_cast<int>(cst.r.size()) == n);
  for (double rk : cst.r) CHECK(rk == doctest::Approx(d * d).epsilon(1e-12));
  CHECK(cst.C == doctest::Approx(n * d * d).epsilon(1e-12));

  // Geometric decay: k r_k stays bounded by the total sum of squares.
  std::vector<double> geo;
  double total = 0.0;
  for (int k = 0; k < 400; ++k) {
    const double dk = std::pow(0.9, k);
    geo.push_back(dk);
    total += dk * dk;
  }
  const ResidualRate gr = residual_rate(geo);
  CHECK(gr.C <= total + 1e-12);
  CHECK(gr.r.back() <= total / 400.0 + 1e-12);
}

TEST_CASE("engine: ergodic residual of the toy run obeys the O(1/k) envelope") {
  StopRule stop;
  stop.tol = 0.0;  // run the full horizon
  stop.max_iters = 500;
  std::vector<double> disp;
  StepObserver obs = [&](int, const Vec& omega, const Vec&, const StepResult&, double,
                         const Vec& next) { disp.push_back((next - omega).norm()); };
  run([](const Vec& omega, int) {
        StepResult r;
        r.u = skew_resolvent(omega);
        return r;
      },
      (Vec(2) << 3.0, -2.0).finished(), Schedule::plain(), stop, obs);
  const ResidualRate rr = residual_rate(disp);
  for (std::size_t k = 10; k < rr.r.size(); ++k) {
    CHECK(static_cast<double>(k + 1) * rr.r[k] <= rr.C + 1e-12);
  }
}

TEST_CASE("stop rule: extra criterion ends the run as converged") {
  StopRule stop;
  stop.tol = 0.0;
  stop.max_iters = 1000;
  stop.extra = [](int, const Vec& omega) { return omega.cwiseAbs().maxCoeff() < 1e-3; };
  const EngineResult res = run(linear_resolvent(1.0), scalar(2.0), Schedule::plain(), stop);
  CHECK(res.converged);
  CHECK(res.iterations < 1000);
  CHECK(std::abs(res.omega[0]) < 1e-3);
}

TEST_CASE("solve_pseudomonotone_vi: strongly monotone shift Psi = omega - c") {
  Vec c(2);
  c << 0.7, -0.3;
  const Vec sol = solve_pseudomonotone_vi(
      [&](const Vec& omega) { return Vec(omega - c); }, LocalSet::full_space(), Vec::Zero(2),
      1e-8, 0.5);
  CHECK((sol - c).norm() <= 1e-6);
}

TEST_CASE("solve_pseudomonotone_vi: rotation-plus-shrink on the unit box") {
  Mat a(2, 2);
  a << 0.1, -1.0, 1.0, 0.1;
  const auto psi = [&](const Vec& omega) { return Vec(a * omega); };
  const LocalSet box = LocalSet::box(Vec::Constant(2, -1.0), Vec::Ones(2));
  const Vec sol = solve_pseudomonotone_vi(psi, box, Vec::Ones(2), 1e-8, 0.3);
  CHECK(sol.norm() <= 1e-5);
  // Natural-map residual at the reported solution.
  CHECK((sol - box.project(Vec(sol - psi(sol)))).norm() <= 1e-5);
}

TEST_CASE("solve_pseudomonotone_vi: pseudomonotone scalar example on [0,4]") {
  // Psi(omega) = omega / (1 + omega) is pseudomonotone but not monotone-affine;
  // the unique solution on [0,4] is 0.
  const auto psi = [](const Vec& omega) { return Vec(omega.array() / (1.0 + omega.array())); };
  const LocalSet seg = LocalSet::box(Vec::Zero(1), Vec::Constant(1, 4.0));
  const Vec sol = solve_pseudomonotone_vi(psi, seg, Vec::Constant(1, 3.0), 1e-8, 0.5);
  CHECK(sol[0] >= 0.0);
  CHECK(sol[0] <= 1e-5);

  // Brute-force confirmation: the natural-map residual over a fine grid is
  // minimized at the left endpoint.
  double best_w = -1.0, best_r = 1e100;
  for (int i = 0; i <= 400000; ++i) {
    const double w = 4.0 * i / 400000.0;
    const double r = std::abs(w - std::min(4.0, std::max(0.0, w - w / (1.0 + w))));
    if (r < best_r) {
      best_r = r;
      best_w = w;
    }
  }
  CHECK(best_w == doctest::Approx(0.0).epsilon(1e-12));
}
