// Command-line surface: instance generation, oracle solves, experiment
// runs, paired comparisons, parameter sweeps, and instance checking.
//
// Exit codes: 0 success, 2 assumption-check failure, 3 non-convergence at
// the iteration cap, 1 usage/other errors.

#include "gnes/experiments.hpp"
#include "gnes/oracle.hpp"
#include "gnes/stepsizes.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace gnes;

constexpr int kExitAssumption = 2;
constexpr int kExitNoConvergence = 3;

struct GenOpts {
  std::string kind = "nash-cournot";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int N = 20, m = 7, nbar = 12;
  double capacity_scale = 4.0;
  std::string out;
};

nlohmann::json instance_json(const GenOpts& o) {
  nlohmann::json j;
  if (o.kind == "nash-cournot") {
    CournotInstance inst = gen_nash_cournot(o.seed, o.N, o.m);
    j["game"] = game_to_json(inst.game);
    j["graph"] = graph_to_json(inst.graph);
    j["redraws"] = inst.redraws;
  } else if (o.kind == "pev") {
    PevInstance inst = gen_pev(o.seed, o.N, o.nbar, o.capacity_scale);
    j["game"] = aggregative_to_json(inst.game);
    j["graph"] = graph_to_json(inst.graph);
    j["cbar"] = std::vector<double>(inst.cbar.data(), inst.cbar.data() + inst.cbar.size());
    j["redraws"] = inst.redraws;
  } else {
    fail(Errc::BadConfig, "unknown kind: " + o.kind);
  }
  return j;
}

GameProblem load_standard_game(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::BadConfig, "cannot read instance file: " + path);
  nlohmann::json j;
  in >> j;
  const nlohmann::json& g = j.contains("game") ? j.at("game") : j;
  if (g.value("schema", "") == "gnes-aggregative") {
    return aggregative_from_json(g).to_game_problem();
  }
  return game_from_json(g);
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& accel, double& accel_param) {
  cmd->add_option("--kind", cfg.kind, "nash_cournot | pev");
  cmd->add_option("--seed", cfg.seed, "instance seed")->required();
  cmd->add_option("--n-agents", cfg.N, "number of agents");
  cmd->add_option("--m", cfg.m, "number of markets (nash_cournot)");
  cmd->add_option("--nbar", cfg.nbar, "intervals per agent (pev)");
  cmd->add_option("--capacity-scale", cfg.capacity_scale, "pev transformer-limit scale");
  cmd->add_option("--alg", cfg.algorithm, "pppa | ne | fb-ne | agg");
  cmd->add_option("--accel", accel, "none | overrelax | inertia | alternated-inertia");
  cmd->add_option("--gamma", accel_param, "overrelaxation gamma / schedule parameter");
  cmd->add_option("--zeta", accel_param, "inertia parameter");
  cmd->add_option("--eta", accel_param, "alternated-inertia parameter");
  cmd->add_option("--gamma-ne", cfg.gamma_ne, "relaxation for the ne algorithm");
  cmd->add_option("--eta-safe", cfg.eta_safe, "safety factor on step-size bounds");
  cmd->add_option("--alpha-scale", cfg.alpha_scale, "fraction of alpha_max to use");
  cmd->add_flag("--exact-inner", cfg.exact_inner, "exact-mode inner solves");
  cmd->add_option("--eps0", cfg.eps0, "inner accuracy eps0/k^2");
  cmd->add_option("--tol", cfg.stop_tol, "fixed-point stop tolerance");
  cmd->add_option("--max-iters", cfg.max_iters, "iteration cap");
  cmd->add_option("--step-scale", cfg.fb_step_scale, "fb-ne baseline step scale");
  cmd->add_flag("--track-fejer", cfg.track_fejer,
                "record the preconditioner-metric Fejer gap (dense; desk scale only)");
  cmd->add_flag("--timing", cfg.timing, "record wall times (breaks byte determinism)");
  cmd->add_option("--trace", cfg.trace_path, "CSV trace output path");
  cmd->add_option("--summary", cfg.summary_path, "JSON summary output path");
  cmd->add_option("--cache-dir", cfg.cache_dir, "oracle cache directory");
}

Schedule make_schedule(const std::string& accel, double p) {
  if (accel == "none" || accel.empty()) return Schedule::plain();
  if (accel == "overrelax") return Schedule::overrelax(p);
  if (accel == "inertia") return Schedule::inertia(p);
  if (accel == "alternated-inertia") return Schedule::alternated_inertia(p);
  fail(Errc::BadConfig, "unknown acceleration: " + accel);
}

int check_instance(const GameProblem& game) {
  int failures = 0;
  const auto report = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };
  try {
    const GameConstants c = game_constants(game);
    report("mu > 0 (strong monotonicity)", c.mu > 0.0);
    report("mu <= theta <= theta0", c.mu <= c.theta + 1e-12 && c.theta <= c.theta0 + 1e-12);
  } catch (const Error& e) {
    report(std::string("constants: ") + e.what(), false);
  }
  try {
    report("feasible set nonempty", feasibility_probe(game));
  } catch (const Error& e) {
    report(std::string("feasibility: ") + e.what(), false);
  }
  return failures == 0 ? 0 : kExitAssumption;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed generalized Nash equilibrium seeking toolkit"};
  app.require_subcommand(1);

  GenOpts gen_opts;
  auto* gen = app.add_subcommand("gen", "emit a seeded instance as JSON");
  gen->add_option("--kind", gen_opts.kind, "nash-cournot | pev");
  gen->add_option("--seed", gen_opts.seed, "instance seed")->required();
  gen->add_option("--n-agents,--n", gen_opts.N, "number of agents");
  gen->add_option("--m", gen_opts.m, "number of markets");
  gen->add_option("--nbar", gen_opts.nbar, "intervals per agent");
  gen->add_option("--capacity-scale", gen_opts.capacity_scale, "pev limit scale");
  gen->add_option("-o,--out", gen_opts.out, "output path (default stdout)");

  std::string oracle_instance, oracle_cache = "oracle_cache";
  double oracle_tol = 1e-9;
  auto* orc = app.add_subcommand("oracle", "solve an instance centrally and cache the solution");
  orc->add_option("instance", oracle_instance, "instance JSON path")->required();
  orc->add_option("--tol", oracle_tol, "oracle tolerance");
  orc->add_option("--cache-dir", oracle_cache, "cache directory");

  RunConfig run_cfg;
  std::string run_accel = "none";
  double run_accel_param = 1.0;
  auto* runc = app.add_subcommand("run", "run one experiment");
  add_run_flags(runc, run_cfg, run_accel, run_accel_param);

  RunConfig cmp_cfg;
  std::vector<std::string> cmp_algs;
  double cmp_tol = 1e-2;
  auto* cmp = app.add_subcommand("compare", "paired algorithms on a shared seed");
  {
    static std::string unused_accel;
    static double unused_param = 1.0;
    add_run_flags(cmp, cmp_cfg, unused_accel, unused_param);
  }
  cmp->add_option("--algs", cmp_algs, "algorithms to pair")->expected(-1);
  cmp->add_option("--target", cmp_tol, "distance threshold for the iteration table");

  RunConfig sweep_cfg;
  std::vector<int> sweep_n{10, 20, 40};
  auto* sweep = app.add_subcommand("sweep", "grid over N: bounds and iteration counts");
  {
    static std::string unused_accel;
    static double unused_param = 1.0;
    add_run_flags(sweep, sweep_cfg, unused_accel, unused_param);
  }
  sweep->add_option("--sizes", sweep_n, "agent counts")->expected(-1);

  std::string check_path;
  auto* chk = app.add_subcommand("check", "assumption-check an instance file");
  chk->add_option("instance", check_path, "instance JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const nlohmann::json j = instance_json(gen_opts);
      if (gen_opts.out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::ofstream out(gen_opts.out);
        out << j.dump(2) << "\n";
      }
      return 0;
    }
    if (*orc) {
      const GameProblem game = load_standard_game(oracle_instance);
      std::ifstream in(oracle_instance);
      nlohmann::json raw;
      in >> raw;
      const nlohmann::json& g = raw.contains("game") ? raw.at("game") : raw;
      const OracleSolution sol =
          solve_vgne_cached(game, oracle_tol, oracle_cache, fnv1a_hex(g.dump()));
      std::cout << "kkt_res " << sol.kkt_res << "  iterations " << sol.iterations << "\n";
      return 0;
    }
    if (*runc) {
      run_cfg.schedule = make_schedule(run_accel, run_accel_param);
      const RunSummary s = run_experiment(run_cfg);
      std::cout << s.summary_json.dump(2) << "\n";
      return s.converged ? 0 : kExitNoConvergence;
    }
    if (*cmp) {
      if (cmp_algs.empty()) cmp_algs = {"pppa", "fb-ne"};
      std::cout << "algorithm  iters_to_target  final_dist\n";
      bool all_converged = true;
      for (const auto& alg : cmp_algs) {
        RunConfig c = cmp_cfg;
        c.algorithm = alg;
        const RunSummary s = run_experiment(c);
        int to_target = -1;
        for (const auto& row : s.rows) {
          if (row.dist_x <= cmp_tol) {
            to_target = row.k;
            break;
          }
        }
        std::cout << alg << "  " << to_target << "  " << s.final_dist_x << "\n";
        all_converged = all_converged && (to_target >= 0 || s.converged);
      }
      return all_converged ? 0 : kExitNoConvergence;
    }
    if (*sweep) {
      std::cout << "N  tau_min  mu_fa  iters_to_1e-2\n";
      bool ok = true;
      for (int n_agents : sweep_n) {
        RunConfig c = sweep_cfg;
        c.N = n_agents;
        const RunSummary s = run_experiment(c);
        const auto& plan = s.summary_json.at("step_plan");
        const auto tau = plan.at("tau").get<std::vector<double>>();
        const double tau_min = *std::min_element(tau.begin(), tau.end());
        std::cout << n_agents << "  " << tau_min << "  " << plan.value("mu_fa", 0.0) << "  "
                  << s.iters_to_1e2 << "\n";
        ok = ok && s.converged;
      }
      return ok ? 0 : kExitNoConvergence;
    }
    if (*chk) return check_instance(load_standard_game(check_path));
  } catch (const gnes::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto code = e.code();
    if (code == Errc::NotStronglyMonotone || code == Errc::Infeasible ||
        code == Errc::DegenerateDraw) {
      return kExitAssumption;
    }
    if (code == Errc::ToleranceNotReached) return kExitNoConvergence;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
