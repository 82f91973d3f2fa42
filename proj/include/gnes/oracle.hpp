#pragma once

#include "gnes/game.hpp"

#include <string>

namespace gnes {

struct OracleSolution {
  Vec x;
  Vec lambda;
  double kkt_res = 0.0;
  int iterations = 0;
  double tol = 0.0;
  bool ridge_flagged = false;  // rank-deficient active set in lambda recovery
};

/// Centralized referee: solves VI(F, Omega ∩ {Ax <= b}) by extragradient
/// with step 1/(2 theta0), projecting onto the intersection with Dykstra's
/// alternating projections, then recovers lambda* from the active rows by
/// projected-gradient nonnegative least squares on the stationarity
/// residual. Shares no iteration code with the distributed algorithms.
OracleSolution solve_vgne_centralized(const GameProblem& game, double tol = 1e-9,
                                      int max_iters = 500000);

/// Euclidean projection onto Omega ∩ {Ax <= b} via Dykstra. Iteration cap
/// 1e5 cycles, per-constraint tolerance 1e-11.
Vec project_feasible(const GameProblem& game, const Vec& y);

/// True if the feasible set is nonempty (Dykstra probe from the Omega
/// projection of zero lands feasible).
bool feasibility_probe(const GameProblem& game);

/// Disk-cached wrapper: looks up <cache_dir>/<key>.json, else solves and
/// stores. key should be a hash of the canonical instance serialization.
OracleSolution solve_vgne_cached(const GameProblem& game, double tol,
                                 const std::string& cache_dir, const std::string& key);

}  // namespace gnes
