#pragma once

#include "gnes/algorithms.hpp"
#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/io.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace gnes {

/// Nash-Cournot instance: N firms on m markets, random 0/1 participation,
/// quadratic production costs, linear inverse demand, box strategy sets.
struct CournotInstance {
  GameProblem game;
  CommGraph graph;
  Vec market_caps;  // r, length m
  int redraws = 0;  // degenerate draws discarded
};

/// Draw order (all through Rng, splitmix64): market caps r_k in [1,2];
/// prices Pbar_k in [10,20]; slopes chi_k in [1,3]; then per firm in index
/// order: market count (m-1 bernoullis at 0.6/(m-1)), market subset
/// (Fisher-Yates prefix), Q_i diagonal in [1,8], q_i in [1,2], X_i in
/// [5,10]; then the graph (bernoulli per pair at 0.3, redrawn until
/// connected). Instances failing mu > 0 are redrawn with seed+1.
CournotInstance gen_nash_cournot(std::uint64_t seed, int N, int m);

struct PevInstance {
  AggregativeGame game;
  CommGraph graph;
  Vec cbar;               // per-component transformer limit pattern
  Vec demand;             // inelastic demand profile d
  double capacity_scale;  // multiplies cbar N in the upper coupling rows
  int redraws = 0;
};

/// Electric-vehicle charging game, nbar charging intervals. Draw order:
/// per agent in index order: c_i in [0.55,0.95]; Q_i diagonal in
/// [0.2,0.8], upper off-diagonal in [0,0.05] (symmetrized); gamma_i in
/// [0.6,1]; xbar_i components 0.25 w.p. 20 percent else 0, redrawn until
/// sum xbar_i >= gamma_i; then the graph as in gen_nash_cournot.
/// capacity_scale widens the transformer limits so the coupled set is
/// nonempty at these demand levels.
PevInstance gen_pev(std::uint64_t seed, int N, int nbar, double capacity_scale = 4.0,
                    const Vec* demand_profile = nullptr);

struct RunConfig {
  std::string kind = "nash_cournot";  // nash_cournot | pev
  std::uint64_t seed = 1;
  int N = 20;
  int m = 7;      // markets (nash_cournot)
  int nbar = 12;  // intervals (pev)
  double capacity_scale = 4.0;

  std::string algorithm = "pppa";  // pppa | ne | fb-ne | agg
  Schedule schedule;
  double gamma_ne = 1.0;    // relaxation for the ne algorithm
  double eta_safe = 0.99;
  double alpha_scale = 1.0;
  bool exact_inner = false;
  double eps0 = 1e-2;       // inner accuracy eps0 / k^2
  double stop_tol = 1e-8;
  int max_iters = 10000;
  // Oracle-referenced early stops, all of the enabled (> 0) ones must hold.
  double dist_stop = 0.0;
  double kkt_stop = 0.0;
  double disagreement_stop = 0.0;
  double fb_step_scale = 1.0;

  bool track_fejer = false;  // per-iteration Phi-norm gap (dense matvec, slow)
  bool timing = false;  // fill wall_ms (breaks byte determinism)
  std::string trace_path;
  std::string summary_path;
  std::string cache_dir = "oracle_cache";
  double oracle_tol = 1e-9;
};

struct RunSummary {
  bool converged = false;
  int iterations = 0;
  double final_dist_x = 0.0;
  double final_kkt = 0.0;
  double final_disagreement = 0.0;
  int iters_to_1e1 = -1;
  int iters_to_1e2 = -1;
  int iters_to_1e4 = -1;
  long total_inner = 0;
  long total_comms = 0;
  std::vector<TraceCsvRow> rows;
  nlohmann::json summary_json;
};

/// Generates the instance, solves (or loads) the oracle, builds the step
/// plan, runs the configured algorithm, and fills the trace. Writes the
/// CSV/JSON files when paths are set.
RunSummary run_experiment(const RunConfig& config);

}  // namespace gnes
