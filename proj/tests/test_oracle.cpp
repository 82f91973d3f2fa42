#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gnes/experiments.hpp"
#include "gnes/io.hpp"
#include "gnes/oracle.hpp"

#include <cstdio>
#include <filesystem>

using namespace gnes;

namespace {

// Unconstrained quadratic game: F(x) = Q x + q with Q row i owned by agent i.
GameProblem quadratic_game(const Mat& q, const Vec& lin) {
  const int n = static_cast<int>(q.rows());
  GameProblem game;
  game.m = 1;
  for (int i = 0; i < n; ++i) {
    game.dims.push_back(1);
    game.G.push_back(q.row(i));
    game.g.push_back(Vec::Constant(1, lin[i]));
    game.sets.push_back(LocalSet::full_space());
    game.A.push_back(Mat::Zero(1, 1));
    game.b.push_back(Vec::Zero(1));
    game.cost.push_back(nullptr);
    game.grad.push_back(nullptr);
  }
  game.finalize();
  return game;
}

// Two agents, J_i = 1/2 (x_i - 1)^2 on [0,2], shared constraint x1 + x2 <= 1.
GameProblem hand_game() {
  GameProblem game;
  game.m = 1;
  for (int i = 0; i < 2; ++i) {
    game.dims.push_back(1);
    Mat gi = Mat::Zero(1, 2);
    gi(0, i) = 1.0;
    game.G.push_back(gi);
    game.g.push_back(Vec::Constant(1, -1.0));
    game.sets.push_back(LocalSet::box(Vec::Zero(1), Vec::Constant(1, 2.0)));
    game.A.push_back(Mat::Constant(1, 1, 1.0));
    game.b.push_back(Vec::Constant(1, 0.5));
    game.cost.push_back(nullptr);
    game.grad.push_back(nullptr);
  }
  game.finalize();
  return game;
}

}  // namespace

TEST_CASE("unconstrained quadratic: x* = -Q^{-1} q, lambda* = 0") {
  Mat q(3, 3);
  q << 2.0, 0.3, 0.1, 0.2, 3.0, 0.4, 0.1, 0.2, 2.5;
  Vec lin(3);
  lin << -1.0, 0.5, -0.7;
  const GameProblem game = quadratic_game(q, lin);
  const OracleSolution sol = solve_vgne_centralized(game, 1e-10);
  const Vec want = q.fullPivLu().solve(-lin);
  CHECK((sol.x - want).norm() <= 1e-8);
  CHECK(sol.lambda.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(sol.kkt_res <= 1e-10);
}

TEST_CASE("hand two-agent coupled game: KKT point and grid confirmation") {
  const GameProblem game = hand_game();
  const OracleSolution sol = solve_vgne_centralized(game, 1e-10);
  // By hand: x_i = 1 - lambda, active constraint 2(1 - lambda) = 1.
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.x[1] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.lambda[0] == doctest::Approx(0.5).epsilon(1e-6));

  // Grid search: no unilateral feasible deviation improves either cost
  // (1e6 candidate points in total).
  for (int i = 0; i < 2; ++i) {
    const double xi = sol.x[i], xj = sol.x[1 - i];
    const double ji = 0.5 * (xi - 1.0) * (xi - 1.0);
    for (int t = 0; t <= 500000; ++t) {
      const double y = 2.0 * t / 500000.0;
      if (y + xj > 1.0 + 1e-12) continue;  // keeps the shared constraint
      const double jy = 0.5 * (y - 1.0) * (y - 1.0);
      CHECK(jy >= ji - 1e-6);
    }
  }
}

TEST_CASE("seeded instance: KKT residual and feasibility of the reported point") {
  const CournotInstance inst = gen_nash_cournot(2, 10, 4);
  const OracleSolution sol = solve_vgne_centralized(inst.game, 1e-9);
  CHECK(sol.kkt_res <= 1e-8);
  for (int i = 0; i < inst.game.N; ++i) {
    CHECK(inst.game.sets[i].contains(inst.game.segment(sol.x, i), 1e-9));
  }
  const Vec slack = inst.game.stacked_A() * sol.x - inst.game.stacked_b();
  CHECK(slack.maxCoeff() <= 1e-9);
  CHECK(sol.lambda.minCoeff() >= 0.0);
}

TEST_CASE("self-consistency across tolerances") {
  const CournotInstance inst = gen_nash_cournot(4, 6, 3);
  const double tol = 1e-7;
  const OracleSolution coarse = solve_vgne_centralized(inst.game, tol);
  const OracleSolution fine = solve_vgne_centralized(inst.game, tol / 10.0);
  CHECK((coarse.x - fine.x).norm() <= 10.0 * tol);
}

TEST_CASE("project_feasible and feasibility_probe") {
  const GameProblem game = hand_game();
  // A feasible point is left in place.
  Vec feas(2);
  feas << 0.2, 0.3;
  CHECK((project_feasible(game, feas) - feas).cwiseAbs().maxCoeff() <= 1e-9);
  // An infeasible point lands in the intersection.
  Vec bad(2);
  bad << 1.5, 1.5;
  const Vec proj = project_feasible(game, bad);
  CHECK(proj.sum() <= 1.0 + 1e-8);
  CHECK(game.sets[0].contains(proj.head(1), 1e-8));
  CHECK(game.sets[1].contains(proj.tail(1), 1e-8));
  // By symmetry the projection of (1.5, 1.5) is (0.5, 0.5).
  CHECK((proj - Vec::Constant(2, 0.5)).cwiseAbs().maxCoeff() <= 1e-6);

  CHECK(feasibility_probe(game));

  GameProblem empty = hand_game();
  empty.b = {Vec::Constant(1, -1.0), Vec::Constant(1, -1.0)};  // sum x <= -2 on [0,2]^2
  empty.finalize();
  CHECK_FALSE(feasibility_probe(empty));
}

TEST_CASE("cached oracle: round trip through disk is bit-identical") {
  const CournotInstance inst = gen_nash_cournot(6, 5, 2);
  const std::string dir = "test_oracle_cache_tmp";
  std::filesystem::remove_all(dir);
  const std::string key = fnv1a_hex(game_to_json(inst.game).dump());
  const OracleSolution first = solve_vgne_cached(inst.game, 1e-9, dir, key);
  CHECK(std::filesystem::exists(dir + "/" + key + ".json"));
  const OracleSolution second = solve_vgne_cached(inst.game, 1e-9, dir, key);
  REQUIRE(first.x.size() == second.x.size());
  for (int i = 0; i < first.x.size(); ++i) CHECK(first.x[i] == second.x[i]);
  for (int i = 0; i < first.lambda.size(); ++i) CHECK(first.lambda[i] == second.lambda[i]);
  CHECK(first.kkt_res == second.kkt_res);
  std::filesystem::remove_all(dir);
}
