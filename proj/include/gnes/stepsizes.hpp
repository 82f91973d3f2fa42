#pragma once

#include "gnes/game.hpp"
#include "gnes/graph.hpp"

#include <optional>

namespace gnes {

/// Everything a run needs to know about its step sizes. Immutable once
/// filled; the dense preconditioners are assembled on demand by the
/// assemble_* helpers and only in test/verification paths.
struct StepPlan {
  double alpha = 0.0;
  double eta_safe = 0.99;
  Vec tau;    // per agent
  Vec delta;  // per agent
  Vec nu;     // per edge, graph edge order
  std::optional<double> beta;  // aggregative only
  double mu_fa = 0.0;
  double norm_phi_ne = 0.0;  // filled by fill_ne_data
};

/// 4 mu lambda2 / ((theta0+theta)^2 + 4 mu theta).
double alpha_max(double mu, double theta0, double theta, double lambda2);

/// lambda_min of M = alpha * [[mu/N, -(theta0+theta)/(2 sqrt N)],
///                            [-(theta0+theta)/(2 sqrt N), lambda2/alpha - theta]].
double mu_fa(double alpha, double mu, double theta0, double theta, double lambda2, int N);

/// tau_i = eta/(d_i + ||A_i^T||_inf), delta_i = eta/(||A_i||_inf + sum_j sqrt(w_ij)),
/// nu_l = eta/(2 sqrt(w_l)). alpha and mu_fa are filled from the game
/// constants with alpha = alpha_scale * alpha_max.
StepPlan gne_step_bounds(const GameProblem& game, const CommGraph& graph, double eta_safe = 0.99,
                         double alpha_scale = 1.0);

/// beta = eta/(4 max_i d_i), tau_i = eta/(4 d_i + ||A_i^T||_inf), delta and nu
/// as above; alpha = alpha_scale * alpha_max_agg.
StepPlan aggregative_bounds(const GameProblem& game, const CommGraph& graph, double mu,
                            double theta_tilde, double eta_safe = 0.99, double alpha_scale = 1.0);

/// min(4 mu lambda2 / theta_tilde^2, 2 sqrt(2) d_min / theta_tilde).
double alpha_max_agg(double mu, double theta_tilde, double lambda2, double d_min);

/// Dense preconditioner in the (xbold, v, lambdabold) layout;
/// size N n + E m + N m.
Mat assemble_phi(const GameProblem& game, const CommGraph& graph, const StepPlan& plan);

/// tau^{-1} + W_n = (diag(1/tau_i) + W) (x) I_n; returned as the small
/// N x N factor is not enough for weighted norms, so the full N n x N n
/// matrix is built.
Mat assemble_phi_ne(const GameProblem& game, const CommGraph& graph, const StepPlan& plan);

/// Dense aggregative preconditioner in the (x, s, v, lambdabold) layout.
Mat assemble_phi_tilde(const GameProblem& game, const CommGraph& graph, const StepPlan& plan);

/// rho_gamma = max(1 - gamma mu_fa/(norm_phi_ne + mu_fa), gamma - 1).
double ne_rate(double gamma, double mu_fa_val, double norm_phi_ne);

/// gammabar = 1 + norm_phi_ne/(norm_phi_ne + 2 mu_fa).
double optimal_gamma(double mu_fa_val, double norm_phi_ne);

/// theta_fa = 2 max_i d_i + alpha theta.
double theta_fa(const CommGraph& graph, double alpha, double theta);

/// Exact spectral norm of tau^{-1} + W_n, i.e. lambda_max(diag(1/tau_i) + W);
/// with cheap=true, the bound max_i(d_i + 1/tau_i) instead.
double norm_phi_ne(const CommGraph& graph, const StepPlan& plan, bool cheap = false);

/// Computes mu_fa and norm_phi_ne for an already-built plan.
void fill_ne_data(StepPlan& plan, const GameProblem& game, const CommGraph& graph);

}  // namespace gnes
