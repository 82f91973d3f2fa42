#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gnes/experiments.hpp"
#include "gnes/io.hpp"
#include "gnes/stepsizes.hpp"

#include <Eigen/Eigenvalues>

using namespace gnes;

namespace {

double lambda_min(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("alpha_max: closed form and edge cases") {
  CHECK(alpha_max(1, 1, 1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(alpha_max(0, 1, 1, 1), Error);
  CHECK_THROWS_AS(alpha_max(1, 1, 1, 0), Error);
}

TEST_CASE("alpha_max: seeded draws land in the expected order-of-magnitude band") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const CournotInstance inst = gen_nash_cournot(seed, 20, 7);
    const GameConstants c = game_constants(inst.game);
    const double am = alpha_max(c.mu, c.theta0, c.theta, inst.graph.algebraic_connectivity());
    CHECK(am >= 0.1);
    CHECK(am <= 100.0);
  }
}

TEST_CASE("mu_fa: M is PSD exactly at alpha_max, loses it above") {
  CHECK(mu_fa(0.5, 1, 1, 1, 1, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(mu_fa(1e-9, 1, 1, 1, 1, 4)) <= 1e-8);  // alpha -> 0+ gives M -> 0

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = rng.uniform(0.1, 2.0);
    const double theta = mu + rng.uniform(0.0, 2.0);
    const double theta0 = theta + rng.uniform(0.0, 2.0);
    const double l2 = rng.uniform(0.2, 5.0);
    const int n_agents = 2 + static_cast<int>(rng.below(10));
    const double am = alpha_max(mu, theta0, theta, l2);
    CHECK(mu_fa(am, mu, theta0, theta, l2, n_agents) >= -1e-10);
    CHECK(mu_fa(1.05 * am, mu, theta0, theta, l2, n_agents) < 1e-12);
    CHECK(mu_fa(0.5 * am, mu, theta0, theta, l2, n_agents) > 0.0);
  }
}

TEST_CASE("alpha_max monotonicity in its arguments") {
  const double base = alpha_max(1.0, 3.0, 2.0, 1.5);
  CHECK(alpha_max(1.2, 3.0, 2.0, 1.5) > base);   // increasing in mu
  CHECK(alpha_max(1.0, 3.0, 2.0, 2.0) > base);   // increasing in lambda2
  CHECK(alpha_max(1.0, 3.5, 2.0, 1.5) < base);   // decreasing in theta0
  CHECK(alpha_max(1.0, 3.0, 2.5, 1.5) < base);   // decreasing in theta
}

TEST_CASE("gne_step_bounds: hand formulas") {
  // 3-agent path graph; agent 1 has degree 2. One coupling row of ones:
  // ||A_i^T||_inf = ||A_i||_inf = 1.
  Mat w = Mat::Zero(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  w(1, 2) = w(2, 1) = 1.0;
  GameProblem game;
  game.m = 1;
  for (int i = 0; i < 3; ++i) {
    game.dims.push_back(1);
    Mat gi = Mat::Zero(1, 3);
    gi(0, i) = 1.0;
    game.G.push_back(gi);
    game.g.push_back(Vec::Zero(1));
    game.sets.push_back(LocalSet::full_space());
    game.A.push_back(Mat::Constant(1, 1, 1.0));
    game.b.push_back(Vec::Constant(1, 1.0));
    game.cost.push_back(nullptr);
    game.grad.push_back(nullptr);
  }
  game.finalize();
  const CommGraph graph = CommGraph::build(w);
  const StepPlan plan = gne_step_bounds(game, graph, 0.99);
  CHECK(plan.tau[1] == doctest::Approx(0.33).epsilon(1e-12));        // 0.99/(2+1)
  CHECK(plan.tau[0] == doctest::Approx(0.495).epsilon(1e-12));       // 0.99/(1+1)
  CHECK(plan.delta[0] == doctest::Approx(0.495).epsilon(1e-12));     // 0.99/(1+1)
  CHECK(plan.delta[1] == doctest::Approx(0.33).epsilon(1e-12));      // 0.99/(1+2)
  CHECK(plan.nu[0] == doctest::Approx(0.495).epsilon(1e-12));        // 0.99/2

  // Edge weight 4 gives nu bound 1/(2*2) = 0.25, returned 0.2475.
  Mat w4 = Mat::Zero(2, 2);
  w4(0, 1) = w4(1, 0) = 4.0;
  GameProblem g2;
  g2.m = 1;
  for (int i = 0; i < 2; ++i) {
    g2.dims.push_back(1);
    Mat gi = Mat::Zero(1, 2);
    gi(0, i) = 1.0;
    g2.G.push_back(gi);
    g2.g.push_back(Vec::Zero(1));
    g2.sets.push_back(LocalSet::full_space());
    g2.A.push_back(Mat::Constant(1, 1, 1.0));
    g2.b.push_back(Vec::Constant(1, 1.0));
    g2.cost.push_back(nullptr);
    g2.grad.push_back(nullptr);
  }
  g2.finalize();
  const StepPlan p2 = gne_step_bounds(g2, CommGraph::build(w4), 0.99);
  CHECK(p2.nu[0] == doctest::Approx(0.2475).epsilon(1e-12));
}

TEST_CASE("assemble_phi: symmetry, NE block, positive definiteness") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const CournotInstance inst = gen_nash_cournot(seed, 2 + seed % 7, 1 + seed % 4);
    const StepPlan plan = gne_step_bounds(inst.game, inst.graph);
    const Mat phi = assemble_phi(inst.game, inst.graph, plan);
    CHECK((phi - phi.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lambda_min(phi) > 0.0);

    // NE sub-block equals tau^{-1} + W_n.
    const Mat phi_ne = assemble_phi_ne(inst.game, inst.graph, plan);
    const int nn = inst.game.N * inst.game.n;
    CHECK((phi.topLeftCorner(nn, nn) - phi_ne).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("assemble_phi: loses definiteness at oversized tau") {
  const CournotInstance inst = gen_nash_cournot(4, 5, 3);
  StepPlan plan = gne_step_bounds(inst.game, inst.graph);
  plan.tau *= 4.0;  // well past the derived bound
  const Mat phi = assemble_phi(inst.game, inst.graph, plan);
  CHECK(lambda_min(phi) <= 0.0);
}

TEST_CASE("aggregative_bounds: hand formulas and Phi-tilde definiteness") {
  CHECK(alpha_max_agg(1.0, 2.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(alpha_max_agg(1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(std::min(4.0, 2.0 * std::sqrt(2.0))).epsilon(1e-12));

  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const PevInstance inst = gen_pev(seed, 3 + seed % 4, 6);
    const GameProblem standard = inst.game.to_game_problem();
    const GameConstants c = game_constants(standard);
    const StepPlan plan =
        aggregative_bounds(standard, inst.graph, c.mu, inst.game.theta_tilde());
    double dmax = 0.0;
    for (int i = 0; i < inst.game.N; ++i) dmax = std::max(dmax, inst.graph.degree(i));
    CHECK(*plan.beta == doctest::Approx(0.99 / (4.0 * dmax)).epsilon(1e-12));
    const Mat phit = assemble_phi_tilde(standard, inst.graph, plan);
    CHECK((phit - phit.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(lambda_min(phit) > 0.0);
  }
}

TEST_CASE("ne_rate and optimal_gamma") {
  const double mf = 0.3, np = 2.0;
  CHECK(ne_rate(1.0, mf, np) == doctest::Approx(1.0 - mf / (np + mf)).epsilon(1e-14));
  CHECK(ne_rate(1.999, mf, np) > 0.99);
  CHECK_THROWS_AS(ne_rate(0.0, mf, np), Error);
  CHECK_THROWS_AS(ne_rate(2.0, mf, np), Error);

  const double gbar = optimal_gamma(mf, np);
  CHECK(gbar == doctest::Approx(1.0 + np / (np + 2.0 * mf)).epsilon(1e-14));
  CHECK(ne_rate(gbar, mf, np) == doctest::Approx(1.0 - 2.0 * mf / (np + 2.0 * mf)).epsilon(1e-12));

  // rho_gamma in (0,1) across the range when mu_fa > 0.
  for (double g = 0.05; g < 2.0; g += 0.05) {
    const double r = ne_rate(g, mf, np);
    CHECK(r > 0.0);
    CHECK(r < 1.0);
  }
}

TEST_CASE("norm_phi_ne: exact value matches dense assembly, cheap bound dominates") {
  const CournotInstance inst = gen_nash_cournot(6, 6, 3);
  GameProblem game = inst.game;
  StepPlan plan = gne_step_bounds(game, inst.graph, 0.99, 0.5);
  const double exact = norm_phi_ne(inst.graph, plan);
  const double cheap = norm_phi_ne(inst.graph, plan, /*cheap=*/true);
  const Mat phi_ne = assemble_phi_ne(game, inst.graph, plan);
  Eigen::SelfAdjointEigenSolver<Mat> es(phi_ne, Eigen::EigenvaluesOnly);
  CHECK(exact == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-10));
  CHECK(cheap >= exact - 1e-12);
}

TEST_CASE("fill_ne_data populates mu_fa and norm_phi_ne") {
  const CournotInstance inst = gen_nash_cournot(8, 5, 2);
  StepPlan plan = gne_step_bounds(inst.game, inst.graph, 0.99, 0.5);
  fill_ne_data(plan, inst.game, inst.graph);
  CHECK(plan.norm_phi_ne > 0.0);
  CHECK(plan.mu_fa > 0.0);  // alpha at half the bound keeps M positive definite
  const GameConstants c = game_constants(inst.game);
  CHECK(plan.mu_fa ==
        doctest::Approx(mu_fa(plan.alpha, c.mu, c.theta0, c.theta,
                              inst.graph.algebraic_connectivity(), inst.game.N))
            .epsilon(1e-12));
}

TEST_CASE("step plan JSON provenance") {
  const CournotInstance inst = gen_nash_cournot(9, 4, 2);
  const StepPlan plan = gne_step_bounds(inst.game, inst.graph);
  const nlohmann::json j = step_plan_to_json(plan);
  CHECK(j.at("alpha").get<double>() == plan.alpha);
  CHECK(j.at("eta_safe").get<double>() == plan.eta_safe);
  CHECK(j.at("tau").size() == static_cast<std::size_t>(inst.game.N));
  CHECK(j.at("nu").size() == static_cast<std::size_t>(inst.graph.num_edges()));
}
