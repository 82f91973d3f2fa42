#pragma once

#include "gnes/game.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace gnes {

/// One resolvent evaluation: the point u = J_B(omega) up to the reported
/// error bound (Euclidean norm on the flat omega vector), plus the inner
/// solve and communication statistics the trace wants.
struct StepResult {
  Vec u;
  double err_bound = 0.0;
  int inner_max = 0;
  double inner_mean = 0.0;
  int comms = 0;
};

/// omega, iteration counter -> resolvent output. Oracles own all
/// algorithm-specific state layout; the engine only sees flat vectors.
using ResolventOracle = std::function<StepResult(const Vec&, int)>;

struct Schedule {
  enum class Kind { Plain, Overrelax, Inertia, AlternatedInertia };
  Kind kind = Kind::Plain;
  double gamma = 1.0;  // Overrelax, [1,2)
  double zeta = 0.0;   // Inertia, [0,1/3)
  double eta = 0.0;    // AlternatedInertia, [0,1]

  static Schedule plain() { return {}; }
  static Schedule overrelax(double gamma);
  static Schedule inertia(double zeta);
  static Schedule alternated_inertia(double eta);

  void validate() const;
  /// Inertial weight applied at iteration k (0 unless an inertia variant).
  double inertia_weight(int k) const;
  /// Relaxation applied after the resolvent (1 for inertia variants).
  double relaxation() const;
};

struct StopRule {
  double tol = 1e-8;     // on the fixed-point residual ||u - omega_tilde||
  int max_iters = 100000;
  /// Optional extra criterion, checked after the observer; returning true
  /// ends the run as converged (e.g. oracle-distance targets in tests).
  std::function<bool(int, const Vec&)> extra;
};

struct TraceRow {
  int k = 0;
  double fp_res = 0.0;
  double err_bound = 0.0;
  double gamma = 1.0;
  int inner_max = 0;
  double inner_mean = 0.0;
  int comms = 0;
};

struct EngineResult {
  Vec omega;
  bool converged = false;
  int iterations = 0;
  std::vector<TraceRow> rows;
};

/// Per-iteration hook: (k, omega^k, omega_tilde, step result, gamma used,
/// omega^{k+1}). Runs after the update, before the stop check.
using StepObserver =
    std::function<void(int, const Vec&, const Vec&, const StepResult&, double, const Vec&)>;

/// omega + gamma (u - omega), with gamma = 1 returning u exactly so plain
/// runs are reproduced bit-for-bit by degenerate schedules.
Vec km_step(const Vec& omega, const Vec& u, double gamma);

/// Inexact relaxed/inertial proximal-point loop. Inertia variants apply
/// the extrapolation before the resolvent and skip relaxation; alternated
/// inertia extrapolates on odd iterations only. Inertia runs abort if the
/// displacement grows for 100 consecutive iterations.
EngineResult run(const ResolventOracle& oracle, const Vec& omega0, const Schedule& schedule,
                 const StopRule& stop, const StepObserver& observer = nullptr);

struct FejerReport {
  bool ok = true;
  int first_violation = -1;
  double worst_slack = 0.0;  // most negative margin seen
};

/// Per-iteration check of ||omega^{k+1} - ref||_P <= ||omega^k - ref||_P
/// + gamma_k err_k_P + slack, with err_k_P = sqrt(lambda_max(P)) * err_k.
/// P empty means the Euclidean metric.
FejerReport fejer_check(const std::vector<Vec>& iterates, const std::vector<double>& gammas,
                        const std::vector<double>& err_bounds, const Vec& reference,
                        const Mat* P = nullptr, double slack = 1e-9);

struct ResidualRate {
  std::vector<double> r;  // r_k = (1/k) sum_{i<k} ||omega^{i+1}-omega^i||^2
  double C = 0.0;         // max_k k r_k
};

/// Ergodic fixed-point residual statistic from consecutive displacements.
ResidualRate residual_rate(const std::vector<double>& displacements);

/// PPA for a (pseudo)monotone VI on a compact convex set: each outer step
/// solves the strongly monotone VI(Psi + Id - omega^k, S) by projected
/// gradient with the given step, to tolerance min(tol, 1/k^2)/10.
Vec solve_pseudomonotone_vi(const std::function<Vec(const Vec&)>& psi, const LocalSet& set,
                            const Vec& omega0, double tol, double inner_step,
                            int max_outer = 100000);

}  // namespace gnes
