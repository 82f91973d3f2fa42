#pragma once

#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/local_solver.hpp"
#include "gnes/ppa.hpp"
#include "gnes/stepsizes.hpp"

#include <functional>
#include <vector>

namespace gnes {

/// Flat layout of the GNE iterate omega. Runtime uses the agent-local z
/// variables; verification builds track the edge variable v instead, with
/// z = V_m^T v derived.
struct GneLayout {
  int N = 0, n = 0, m = 0, E = 0;
  bool vform = false;

  int dual_size() const { return (vform ? E : N) * m; }
  int dim() const { return N * n + dual_size() + N * m; }
  int x_off(int i) const { return i * n; }
  int dual_off() const { return N * n; }
  int lambda_off(int i) const { return N * n + dual_size() + i * m; }
};

/// Per-agent inner-solve data, fixed for the whole run.
struct AgentInner {
  double mu_i = 0.0, theta_i = 0.0;
  double c = 0.0;     // 1/(alpha tau_i) + d_i/alpha
  double step = 0.0;  // 2/(theta_i + mu_i + c)
  double rho = 0.0;   // (theta_i - mu_i + c)/(theta_i + mu_i + c)
  double amp = 1.0;   // omega-space error amplification sqrt(1 + (2 delta_i ||A_i||)^2)
};

/// Algorithm-1 machinery: the per-agent resolvent over the network state.
/// The dual iterate converges to alpha times the KKT multiplier; the
/// kkt_lambda accessor undoes the scaling.
class GneAlgorithm {
 public:
  GneAlgorithm(const GameProblem& game, const CommGraph& graph, StepPlan plan,
               bool track_v = false);

  const GneLayout& layout() const { return layout_; }
  const StepPlan& plan() const { return plan_; }
  const std::vector<AgentInner>& inner() const { return inner_; }

  /// Estimates broadcast from x0, duals at zero.
  Vec initial_state(const Vec& x0) const;

  /// One full Algorithm-1 iteration (estimate averaging, x, z|v, lambda),
  /// inner solves to accuracy eps. Exactly one neighbor exchange.
  StepResult resolvent(const Vec& omega, double eps) const;

  /// Engine adapter; eps_at(k) gives the inner accuracy at iteration k.
  ResolventOracle oracle(std::function<double(int)> eps_at) const;

  // --- metric accessors -------------------------------------------------
  Vec own_actions(const Vec& omega) const;  // col(x_i), length n
  Vec lambda_of(const Vec& omega, int i) const;
  Vec z_of(const Vec& omega, int i) const;  // derived from v in v-form
  Vec sum_z(const Vec& omega) const;
  double disagreement(const Vec& omega) const;         // max_{i,j} ||x_i - x_j||
  double lambda_disagreement(const Vec& omega) const;  // max_{i,j} ||lambda_i - lambda_j||
  /// Mean dual rescaled to the KKT system (division by alpha), clipped >= 0.
  Vec kkt_lambda(const Vec& omega) const;

  /// Consensus lift of an oracle pair (x*, lambda*): estimates at 1 (x) x*,
  /// duals at alpha lambda*, z_i = A_i x_i* - b_i + (b - A x*)/N (v solved
  /// from V_m^T v = z in v-form). A fixed point when strict complementarity
  /// holds.
  Vec lift_consensus(const Vec& x_star, const Vec& lambda_star) const;

  /// Max componentwise residual of 0 in Phi(omega'-omega) + A(omega'),
  /// normal cones measured by projection residuals. v-form only.
  double inclusion_residual(const Vec& omega_k, const Vec& omega_next) const;

 private:
  const GameProblem& game_;
  const CommGraph& graph_;
  StepPlan plan_;
  GneLayout layout_;
  std::vector<AgentInner> inner_;
  std::vector<Mat> hown_;  // own-block Jacobians, linear-gradient games
  std::vector<Mat> hc_;    // hown_ + c I, the affine inner-gradient matrix
};

/// Algorithm-3 machinery (no coupling constraints): iterate is xbold only.
class NeAlgorithm {
 public:
  NeAlgorithm(const GameProblem& game, const CommGraph& graph, StepPlan plan);

  int dim() const { return game_.N * game_.n; }
  Vec initial_state(const Vec& x0) const;
  StepResult resolvent(const Vec& xbold, double eps) const;
  ResolventOracle oracle(std::function<double(int)> eps_at) const;
  Vec own_actions(const Vec& xbold) const;

 private:
  const GameProblem& game_;
  const CommGraph& graph_;
  StepPlan plan_;
  std::vector<AgentInner> inner_;
  std::vector<Mat> hown_;
  std::vector<Mat> hc_;
};

/// Quadratic aggregative game: f_i(x_i, xi) = x_i^T Qown_i x_i + lin_i^T x_i
/// + (Qagg xi + pconst)^T x_i with xi = avg(x). Qagg must be symmetric for
/// the closed-form potential path.
struct AggregativeGame {
  int N = 0, nbar = 0, m = 0;
  std::vector<Mat> Qown;
  std::vector<Vec> lin;
  Mat Qagg;
  Vec pconst;
  std::vector<LocalSet> sets;
  std::vector<Mat> A;
  std::vector<Vec> b;

  void finalize();  // validates shapes and Qown/Qagg symmetry

  /// tilde F_i(x_i, xi_i) = 2 Qown x_i + lin + Qagg xi_i + pconst
  ///                        + (1/N) Qagg^T x_i.
  Vec agg_gradient(int i, const Vec& x_i, const Vec& xi_i) const;
  /// Lipschitz constant of the stacked (x_i, xi) -> tilde F_i map.
  double theta_tilde() const;
  /// Equivalent standard-form game (dense per-agent Jacobian rows).
  GameProblem to_game_problem() const;
};

/// Algorithm-4 machinery: omega = (x, s, z, lambda), all agent-local.
class AggAlgorithm {
 public:
  enum class XUpdate { Inclusion, Potential };

  AggAlgorithm(const AggregativeGame& game, const CommGraph& graph, StepPlan plan,
               XUpdate mode = XUpdate::Inclusion);

  int dim() const { return 2 * game_.N * game_.nbar + 2 * game_.N * game_.m; }
  Vec initial_state(const Vec& x0) const;  // s = 0, z = 0, lambda = 0
  StepResult resolvent(const Vec& omega, double eps) const;
  ResolventOracle oracle(std::function<double(int)> eps_at) const;

  Vec x_of(const Vec& omega) const;  // col(x_i), length N nbar
  Vec s_of(const Vec& omega) const;
  Vec lambda_of(const Vec& omega, int i) const;
  Vec sum_z(const Vec& omega) const;
  Vec avg_s(const Vec& omega) const;
  Vec kkt_lambda(const Vec& omega) const;

 private:
  const AggregativeGame& game_;
  const CommGraph& graph_;
  StepPlan plan_;
  XUpdate mode_;
  std::vector<double> step_, rho_;  // inner projected-gradient data
  std::vector<double> amp_;
  std::vector<Mat> hx_;  // affine inner-gradient matrix per agent
};

/// One projected pseudo-gradient step on the extended space:
/// proj_Omegahat(xbold - tau_fb F_a(xbold)); estimate slots unconstrained.
Vec fb_ne_baseline_step(const GameProblem& game, const CommGraph& graph, double alpha,
                        const Vec& xbold, double tau_fb);

/// tau_fb <= c mu_fa/(theta_fa^2 + mu_fa).
double fb_ne_step_bound(double mu_fa_val, double theta_fa_val, double c = 1.0);

}  // namespace gnes
