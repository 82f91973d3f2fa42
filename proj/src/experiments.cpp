#include "gnes/experiments.hpp"

#include "gnes/oracle.hpp"
#include "gnes/ppa.hpp"
#include "gnes/stepsizes.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace gnes {

namespace {

Mat random_connected_er_graph(Rng& rng, int N, double p) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Mat w = Mat::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        if (rng.bernoulli(p)) w(i, j) = w(j, i) = 1.0;
      }
    }
    try {
      CommGraph::build(w);
      return w;
    } catch (const Error& e) {
      if (e.code() != Errc::Disconnected) throw;
    }
  }
  fail(Errc::DegenerateDraw, "could not draw a connected graph in 1000 attempts");
}

}  // namespace

CournotInstance gen_nash_cournot(std::uint64_t seed, int N, int m) {
  require(N >= 2 && m >= 1, Errc::BadConfig, "gen_nash_cournot needs N >= 2, m >= 1");
  for (int redraw = 0; redraw < 100; ++redraw) {
    Rng rng(seed + static_cast<std::uint64_t>(redraw));

    Vec caps(m), pbar(m), chi(m);
    for (int k = 0; k < m; ++k) caps[k] = rng.uniform(1.0, 2.0);
    for (int k = 0; k < m; ++k) pbar[k] = rng.uniform(10.0, 20.0);
    for (int k = 0; k < m; ++k) chi[k] = rng.uniform(1.0, 3.0);

    GameProblem game;
    game.m = m;
    std::vector<std::vector<int>> markets(N);
    std::vector<Vec> qdiag(N), qlin(N);
    std::vector<double> xmax(N);
    const double p_extra = m > 1 ? 0.6 / (m - 1) : 0.0;
    for (int i = 0; i < N; ++i) {
      int ni = 1;
      for (int t = 0; t < m - 1; ++t) {
        if (rng.bernoulli(p_extra)) ++ni;
      }
      // Fisher-Yates prefix for the market subset, then sort for a fixed
      // component order.
      std::vector<int> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      for (int t = 0; t < ni; ++t) {
        const int j = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - t)));
        std::swap(perm[t], perm[j]);
      }
      markets[i].assign(perm.begin(), perm.begin() + ni);
      std::sort(markets[i].begin(), markets[i].end());

      qdiag[i].resize(ni);
      qlin[i].resize(ni);
      for (int c = 0; c < ni; ++c) qdiag[i][c] = rng.uniform(1.0, 8.0);
      for (int c = 0; c < ni; ++c) qlin[i][c] = rng.uniform(1.0, 2.0);
      xmax[i] = rng.uniform(5.0, 10.0);

      game.dims.push_back(ni);
      Mat ai = Mat::Zero(m, ni);
      for (int c = 0; c < ni; ++c) ai(markets[i][c], c) = 1.0;
      game.A.push_back(ai);
      game.b.push_back(caps / static_cast<double>(N));
      game.sets.push_back(LocalSet::box(Vec::Zero(ni), Vec::Constant(ni, xmax[i])));
    }
    const Mat weights = random_connected_er_graph(rng, N, 0.3);

    game.finalize();
    const int n = game.n;
    const double scale = 1e-3;
    const Mat a_full = [&] {
      Mat a = Mat::Zero(m, n);
      for (int i = 0; i < N; ++i) a.middleCols(game.offsets[i], game.dims[i]) = game.A[i];
      return a;
    }();

    for (int i = 0; i < N; ++i) {
      const int ni = game.dims[i];
      const Mat& ai = game.A[i];
      // grad_i J_i = 1e-3 (2 Q_i x_i + q_i - A_i^T pbar + A_i^T diag(chi) A x
      //              + A_i^T diag(chi) A_i x_i).
      Mat gi = scale * (ai.transpose() * chi.asDiagonal() * a_full);
      gi.middleCols(game.offsets[i], ni) +=
          scale * (Mat(Vec(2.0 * qdiag[i]).asDiagonal()) + ai.transpose() * chi.asDiagonal() * ai);
      game.G.push_back(std::move(gi));
      game.g.push_back(scale * Vec(qlin[i] - ai.transpose() * pbar));

      const Vec qd = qdiag[i];
      const Vec ql = qlin[i];
      game.cost.push_back([qd, ql, pbar, chi, a_full, ai, off = game.offsets[i], ni,
                           scale](const Vec& x) {
        const Vec xi = x.segment(off, ni);
        const Vec price = pbar - Vec(chi.cwiseProduct(a_full * x));
        return scale * (xi.dot(qd.cwiseProduct(xi)) + ql.dot(xi) - price.dot(ai * xi));
      });
      game.grad.push_back(nullptr);
    }

    try {
      game_constants(game);  // throws NotStronglyMonotone on a bad draw
    } catch (const Error& e) {
      if (e.code() == Errc::NotStronglyMonotone) continue;
      throw;
    }
    CournotInstance inst{std::move(game), CommGraph::build(weights), caps, redraw};
    return inst;
  }
  fail(Errc::DegenerateDraw, "gen_nash_cournot: no strongly monotone draw in 100 attempts");
}

PevInstance gen_pev(std::uint64_t seed, int N, int nbar, double capacity_scale,
                    const Vec* demand_profile) {
  require(N >= 2 && nbar >= 1, Errc::BadConfig, "gen_pev needs N >= 2, nbar >= 1");
  require(capacity_scale > 0.0, Errc::BadConfig, "capacity_scale must be positive");

  // Default inelastic-demand profile: overnight valley shape, one value
  // per charging interval (repeated/truncated when nbar != 12).
  static const double kDemand12[12] = {2.2, 2.0, 1.8, 1.6, 1.4, 1.2,
                                       1.0, 0.9, 0.8, 1.0, 1.5, 2.0};
  Vec d(nbar);
  if (demand_profile) {
    require(demand_profile->size() == nbar, Errc::BadConfig, "demand profile length != nbar");
    d = *demand_profile;
  } else {
    for (int j = 0; j < nbar; ++j) d[j] = kDemand12[j % 12];
  }

  Vec cbar(nbar);
  for (int j = 0; j < nbar; ++j) {
    const bool high = j < 3 || j >= nbar - 2;  // {1,2,3,11,12} in 1-based terms
    cbar[j] = high ? 0.04 : 0.01;
  }
  const double a_price = 0.38, b_price = 0.6;

  for (int redraw = 0; redraw < 100; ++redraw) {
    Rng rng(seed + static_cast<std::uint64_t>(redraw));
    AggregativeGame game;
    game.m = 2 * nbar;
    game.Qagg = a_price * Mat::Identity(nbar, nbar);
    game.pconst = a_price * d + b_price * Vec::Ones(nbar);

    bool ok = true;
    for (int i = 0; i < N && ok; ++i) {
      Vec ci(nbar);
      for (int j = 0; j < nbar; ++j) ci[j] = rng.uniform(0.55, 0.95);
      Mat q(nbar, nbar);
      for (int j = 0; j < nbar; ++j) q(j, j) = rng.uniform(0.2, 0.8);
      for (int j = 0; j < nbar; ++j) {
        for (int k = j + 1; k < nbar; ++k) q(j, k) = q(k, j) = rng.uniform(0.0, 0.05);
      }
      Eigen::SelfAdjointEigenSolver<Mat> es(q, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() <= 0.0) {
        ok = false;
        break;
      }
      const double gamma_i = rng.uniform(0.6, 1.0);
      Vec xbar(nbar);
      bool drawn = false;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        for (int j = 0; j < nbar; ++j) xbar[j] = rng.bernoulli(0.2) ? 0.25 : 0.0;
        if (xbar.sum() >= gamma_i) {
          drawn = true;
          break;
        }
      }
      if (!drawn) {
        ok = false;
        break;
      }
      game.Qown.push_back(q);
      game.lin.push_back(ci);
      game.sets.push_back(LocalSet::box_hyperplane(Vec::Zero(nbar), xbar, gamma_i));
      Mat ai(2 * nbar, nbar);
      ai << Mat::Identity(nbar, nbar), -Mat::Identity(nbar, nbar);
      game.A.push_back(ai);
      Vec bi(2 * nbar);
      bi << capacity_scale * cbar, Vec::Zero(nbar);
      game.b.push_back(bi);
    }
    if (!ok) continue;
    const Mat weights = random_connected_er_graph(rng, N, 0.3);
    game.finalize();

    GameProblem standard = game.to_game_problem();
    try {
      game_constants(standard);
    } catch (const Error& e) {
      if (e.code() == Errc::NotStronglyMonotone) continue;
      throw;
    }
    if (!feasibility_probe(standard)) continue;
    return PevInstance{std::move(game), CommGraph::build(weights), cbar, d, capacity_scale,
                       redraw};
  }
  fail(Errc::DegenerateDraw, "gen_pev: no admissible draw in 100 attempts");
}

namespace {

GameProblem strip_coupling(const GameProblem& game) {
  GameProblem g = game;
  g.m = 0;
  for (int i = 0; i < g.N; ++i) {
    g.A[i] = Mat::Zero(0, g.dims[i]);
    g.b[i] = Vec::Zero(0);
  }
  return g;
}

void note_thresholds(RunSummary& s, int k, double dist) {
  if (s.iters_to_1e1 < 0 && dist <= 1e-1) s.iters_to_1e1 = k;
  if (s.iters_to_1e2 < 0 && dist <= 1e-2) s.iters_to_1e2 = k;
  if (s.iters_to_1e4 < 0 && dist <= 1e-4) s.iters_to_1e4 = k;
}

bool targets_met(const RunConfig& cfg, const TraceCsvRow& row) {
  const bool any = cfg.dist_stop > 0.0 || cfg.kkt_stop > 0.0 || cfg.disagreement_stop > 0.0;
  if (!any) return false;
  if (cfg.dist_stop > 0.0 && row.dist_x > cfg.dist_stop) return false;
  if (cfg.kkt_stop > 0.0 && row.kkt_res > cfg.kkt_stop) return false;
  if (cfg.disagreement_stop > 0.0 && row.disagreement > cfg.disagreement_stop) return false;
  return true;
}

}  // namespace

RunSummary run_experiment(const RunConfig& config) {
  require(config.kind == "nash_cournot" || config.kind == "pev", Errc::BadConfig,
          "unknown experiment kind: " + config.kind);
  RunSummary summary;
  nlohmann::json meta;
  meta["seed"] = config.seed;
  meta["kind"] = config.kind;
  meta["algorithm"] = config.algorithm;

  const auto eps_at = [&](int k) {
    return config.exact_inner ? kExactEps : config.eps0 / (static_cast<double>(k + 1) * (k + 1));
  };

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto wall_ms = [&] {
    return config.timing
               ? std::chrono::duration<double, std::milli>(clock::now() - t0).count()
               : 0.0;
  };

  if (config.kind == "pev") {
    require(config.algorithm == "agg", Errc::BadConfig, "pev runs use the aggregative algorithm");
    PevInstance inst = gen_pev(config.seed, config.N, config.nbar, config.capacity_scale);
    GameProblem standard = inst.game.to_game_problem();
    const std::string key = fnv1a_hex(game_to_json(standard).dump());
    const OracleSolution sol = solve_vgne_cached(standard, config.oracle_tol, config.cache_dir, key);

    const GameConstants c = game_constants(standard);
    StepPlan plan = aggregative_bounds(standard, inst.graph, c.mu, inst.game.theta_tilde(),
                                       config.eta_safe, config.alpha_scale);
    AggAlgorithm alg(inst.game, inst.graph, plan);
    const Vec x0 = [&] {
      Vec x(standard.n);
      for (int i = 0; i < standard.N; ++i) {
        x.segment(standard.offsets[i], standard.dims[i]) =
            inst.game.sets[i].project(Vec::Zero(inst.game.nbar));
      }
      return x;
    }();

    StepObserver obs = [&](int k, const Vec&, const Vec&, const StepResult& sr, double,
                           const Vec& next) {
      TraceCsvRow row;
      row.k = k;
      row.dist_x = (alg.x_of(next) - sol.x).norm();
      row.kkt_res = kkt_residual(standard, alg.x_of(next), alg.kkt_lambda(next));
      row.disagreement = alg.avg_s(next).cwiseAbs().maxCoeff();
      row.fp_res = 0.0;  // filled from the engine rows after the run
      row.inner_max = sr.inner_max;
      row.inner_mean = sr.inner_mean;
      row.comms = sr.comms;
      row.wall_ms = wall_ms();
      summary.rows.push_back(row);
      summary.total_inner += static_cast<long>(sr.inner_mean * inst.game.N + 0.5);
      summary.total_comms += sr.comms;
      note_thresholds(summary, k, row.dist_x);
    };
    StopRule stop{config.stop_tol, config.max_iters};
    stop.extra = [&](int, const Vec&) { return targets_met(config, summary.rows.back()); };
    EngineResult res = run(alg.oracle(eps_at), alg.initial_state(x0), config.schedule, stop, obs);
    for (std::size_t r = 0; r < summary.rows.size() && r < res.rows.size(); ++r) {
      summary.rows[r].fp_res = res.rows[r].fp_res;
    }
    summary.converged = res.converged;
    summary.iterations = res.iterations;
    if (!summary.rows.empty()) {
      summary.final_dist_x = summary.rows.back().dist_x;
      summary.final_kkt = summary.rows.back().kkt_res;
      summary.final_disagreement = summary.rows.back().disagreement;
    }
    meta["step_plan"] = step_plan_to_json(plan);
    meta["oracle_kkt_res"] = sol.kkt_res;
  } else {
    CournotInstance inst = gen_nash_cournot(config.seed, config.N, config.m);
    const bool unconstrained = config.algorithm == "ne" || config.algorithm == "fb-ne";
    GameProblem game = unconstrained ? strip_coupling(inst.game) : std::move(inst.game);
    const std::string key = fnv1a_hex(game_to_json(game).dump());
    const OracleSolution sol = solve_vgne_cached(game, config.oracle_tol, config.cache_dir, key);

    StepPlan plan = gne_step_bounds(game, inst.graph, config.eta_safe, config.alpha_scale);

    if (config.algorithm == "pppa") {
      GneAlgorithm alg(game, inst.graph, plan, /*track_v=*/true);
      // Phi-norm Fejer gap, affordable at desk scale.
      Mat phi;
      Vec omega_star;
      bool fejer = config.track_fejer && alg.layout().dim() <= 2500;
      if (fejer) {
        phi = assemble_phi(game, inst.graph, plan);
        omega_star = alg.lift_consensus(sol.x, sol.lambda);
      }
      double prev_gap = 0.0;
      bool have_prev = false;
      StepObserver obs = [&](int k, const Vec&, const Vec&, const StepResult& sr, double,
                             const Vec& next) {
        TraceCsvRow row;
        row.k = k;
        row.dist_x = (alg.own_actions(next) - sol.x).norm();
        row.kkt_res = kkt_residual(game, alg.own_actions(next), alg.kkt_lambda(next));
        row.disagreement = alg.disagreement(next);
        row.inner_max = sr.inner_max;
        row.inner_mean = sr.inner_mean;
        row.comms = sr.comms;
        if (fejer) {
          const Vec diff = next - omega_star;
          const double gap = std::sqrt(std::max(0.0, diff.dot(phi * diff)));
          row.fejer_gap = have_prev ? gap - prev_gap : 0.0;
          prev_gap = gap;
          have_prev = true;
        }
        row.wall_ms = wall_ms();
        summary.rows.push_back(row);
        summary.total_inner += static_cast<long>(sr.inner_mean * game.N + 0.5);
        summary.total_comms += sr.comms;
        note_thresholds(summary, k, row.dist_x);
      };
      const Vec x0 = project_omega(game, Vec::Zero(game.n));
      StopRule stop{config.stop_tol, config.max_iters};
      stop.extra = [&](int, const Vec&) { return targets_met(config, summary.rows.back()); };
      EngineResult res = run(alg.oracle(eps_at), alg.initial_state(x0), config.schedule, stop, obs);
      for (std::size_t r = 0; r < summary.rows.size() && r < res.rows.size(); ++r) {
        summary.rows[r].fp_res = res.rows[r].fp_res;
      }
      summary.converged = res.converged;
      summary.iterations = res.iterations;
    } else if (config.algorithm == "ne") {
      NeAlgorithm alg(game, inst.graph, plan);
      const Vec x0 = project_omega(game, Vec::Zero(game.n));
      Vec xbold = alg.initial_state(x0);
      for (int k = 0; k < config.max_iters; ++k) {
        StepResult sr = alg.resolvent(xbold, eps_at(k));
        const double fp = (sr.u - xbold).norm();
        xbold = km_step(xbold, sr.u, config.gamma_ne);
        TraceCsvRow row;
        row.k = k;
        row.dist_x = (alg.own_actions(xbold) - sol.x).norm();
        row.kkt_res = kkt_residual(game, alg.own_actions(xbold), Vec::Zero(0));
        row.fp_res = fp;
        row.inner_max = sr.inner_max;
        row.inner_mean = sr.inner_mean;
        row.comms = sr.comms;
        row.wall_ms = wall_ms();
        summary.rows.push_back(row);
        summary.total_inner += static_cast<long>(sr.inner_mean * game.N + 0.5);
        summary.total_comms += sr.comms;
        note_thresholds(summary, k, row.dist_x);
        summary.iterations = k + 1;
        if (fp <= config.stop_tol || targets_met(config, row)) {
          summary.converged = true;
          break;
        }
      }
    } else if (config.algorithm == "fb-ne") {
      fill_ne_data(plan, game, inst.graph);
      const GameConstants c = game_constants(game);
      const double tfa = theta_fa(inst.graph, plan.alpha, c.theta);
      require(plan.mu_fa > 0.0, Errc::NonpositiveInput,
              "fb-ne baseline needs mu_fa > 0 (reduce alpha_scale)");
      const double tau_fb = fb_ne_step_bound(plan.mu_fa, tfa, config.fb_step_scale);
      const Vec x0 = project_omega(game, Vec::Zero(game.n));
      Vec xbold(game.N * game.n);
      for (int i = 0; i < game.N; ++i) xbold.segment(i * game.n, game.n) = x0;
      for (int k = 0; k < config.max_iters; ++k) {
        Vec next = fb_ne_baseline_step(game, inst.graph, plan.alpha, xbold, tau_fb);
        const double fp = (next - xbold).norm();
        xbold = std::move(next);
        TraceCsvRow row;
        row.k = k;
        Vec x(game.n);
        for (int i = 0; i < game.N; ++i) {
          x.segment(game.offsets[i], game.dims[i]) =
              xbold.segment(i * game.n + game.offsets[i], game.dims[i]);
        }
        row.dist_x = (x - sol.x).norm();
        row.kkt_res = kkt_residual(game, x, Vec::Zero(0));
        row.fp_res = fp;
        row.comms = 1;
        row.wall_ms = wall_ms();
        summary.rows.push_back(row);
        summary.total_comms += 1;
        note_thresholds(summary, k, row.dist_x);
        summary.iterations = k + 1;
        if (fp <= config.stop_tol || targets_met(config, row)) {
          summary.converged = true;
          break;
        }
      }
    } else {
      fail(Errc::BadConfig, "unknown algorithm: " + config.algorithm);
    }
    if (!summary.rows.empty()) {
      summary.final_dist_x = summary.rows.back().dist_x;
      summary.final_kkt = summary.rows.back().kkt_res;
      summary.final_disagreement = summary.rows.back().disagreement;
    }
    meta["step_plan"] = step_plan_to_json(plan);
    meta["oracle_kkt_res"] = sol.kkt_res;
  }

  meta["converged"] = summary.converged;
  meta["iterations"] = summary.iterations;
  meta["final_dist_x"] = summary.final_dist_x;
  meta["final_kkt_res"] = summary.final_kkt;
  meta["final_disagreement"] = summary.final_disagreement;
  meta["iters_to_1e-1"] = summary.iters_to_1e1;
  meta["iters_to_1e-2"] = summary.iters_to_1e2;
  meta["iters_to_1e-4"] = summary.iters_to_1e4;
  meta["total_inner_steps"] = summary.total_inner;
  meta["total_comms"] = summary.total_comms;
  summary.summary_json = meta;

  if (!config.trace_path.empty()) write_trace_csv(config.trace_path, summary.rows);
  if (!config.summary_path.empty()) {
    std::ofstream out(config.summary_path);
    require(out.good(), Errc::BadConfig, "cannot open summary file: " + config.summary_path);
    out << meta.dump(2) << "\n";
  }
  return summary;
}

}  // namespace gnes
