#include "gnes/stepsizes.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gnes {

double alpha_max(double mu, double theta0, double theta, double lambda2) {
  require(mu > 0.0 && theta0 > 0.0 && theta > 0.0 && lambda2 > 0.0, Errc::NonpositiveInput,
          "alpha_max: all inputs must be positive");
  return 4.0 * mu * lambda2 / ((theta0 + theta) * (theta0 + theta) + 4.0 * mu * theta);
}

double mu_fa(double alpha, double mu, double theta0, double theta, double lambda2, int N) {
  require(alpha > 0.0, Errc::NonpositiveInput, "mu_fa: alpha must be positive");
  const double c = (theta0 + theta) / (2.0 * std::sqrt(static_cast<double>(N)));
  Mat m(2, 2);
  m << mu / N, -c, -c, lambda2 / alpha - theta;
  m *= alpha;
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

// ||A_i^T||_inf = largest column 1-norm of A_i; ||A_i||_inf = largest row
// 1-norm. Zero for empty (m = 0) blocks.
double inf_norm_rows(const Mat& a) {
  return a.rows() == 0 || a.cols() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}
double inf_norm_cols(const Mat& a) {
  return a.rows() == 0 || a.cols() == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
}

double sqrt_weight_sum(const CommGraph& graph, int i) {
  double s = 0.0;
  for (int j : graph.neighbors()[i]) s += std::sqrt(graph.weight(i, j));
  return s;
}

void fill_dual_steps(StepPlan& plan, const GameProblem& game, const CommGraph& graph) {
  const int N = game.N;
  plan.delta.resize(N);
  for (int i = 0; i < N; ++i) {
    plan.delta[i] = plan.eta_safe / (inf_norm_rows(game.A[i]) + sqrt_weight_sum(graph, i));
  }
  plan.nu.resize(graph.num_edges());
  for (int l = 0; l < graph.num_edges(); ++l) {
    plan.nu[l] = plan.eta_safe / (2.0 * std::sqrt(graph.edges()[l].w));
  }
}

}  // namespace

StepPlan gne_step_bounds(const GameProblem& game, const CommGraph& graph, double eta_safe,
                         double alpha_scale) {
  require(eta_safe > 0.0 && eta_safe < 1.0, Errc::BadConfig, "eta_safe must be in (0,1)");
  require(alpha_scale > 0.0 && alpha_scale <= 1.0, Errc::BadConfig, "alpha_scale must be in (0,1]");
  StepPlan plan;
  plan.eta_safe = eta_safe;
  const int N = game.N;
  plan.tau.resize(N);
  for (int i = 0; i < N; ++i) {
    plan.tau[i] = eta_safe / (graph.degree(i) + inf_norm_cols(game.A[i]));
  }
  fill_dual_steps(plan, game, graph);
  const GameConstants c = game_constants(game);
  const double l2 = graph.algebraic_connectivity();
  plan.alpha = alpha_scale * alpha_max(c.mu, c.theta0, c.theta, l2);
  plan.mu_fa = mu_fa(plan.alpha, c.mu, c.theta0, c.theta, l2, N);
  return plan;
}

double alpha_max_agg(double mu, double theta_tilde, double lambda2, double d_min) {
  require(mu > 0.0 && theta_tilde > 0.0 && lambda2 > 0.0 && d_min > 0.0, Errc::NonpositiveInput,
          "alpha_max_agg: all inputs must be positive");
  return std::min(4.0 * mu * lambda2 / (theta_tilde * theta_tilde),
                  2.0 * std::sqrt(2.0) * d_min / theta_tilde);
}

StepPlan aggregative_bounds(const GameProblem& game, const CommGraph& graph, double mu,
                            double theta_tilde, double eta_safe, double alpha_scale) {
  require(eta_safe > 0.0 && eta_safe < 1.0, Errc::BadConfig, "eta_safe must be in (0,1)");
  require(alpha_scale > 0.0 && alpha_scale <= 1.0, Errc::BadConfig, "alpha_scale must be in (0,1]");
  StepPlan plan;
  plan.eta_safe = eta_safe;
  const int N = game.N;
  double d_max = 0.0, d_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    d_max = std::max(d_max, graph.degree(i));
    d_min = std::min(d_min, graph.degree(i));
  }
  plan.beta = eta_safe / (4.0 * d_max);
  plan.tau.resize(N);
  for (int i = 0; i < N; ++i) {
    plan.tau[i] = eta_safe / (4.0 * graph.degree(i) + inf_norm_cols(game.A[i]));
  }
  fill_dual_steps(plan, game, graph);
  plan.alpha = alpha_scale * alpha_max_agg(mu, theta_tilde, graph.algebraic_connectivity(), d_min);
  return plan;
}

namespace {

void check_plan(const StepPlan& plan, const GameProblem& game, const CommGraph& graph,
                bool need_beta = false) {
  require(plan.tau.size() == game.N && plan.delta.size() == game.N &&
              plan.nu.size() == graph.num_edges(),
          Errc::StepPlanIncomplete, "step plan does not match instance");
  require((plan.tau.array() > 0.0).all() && (plan.delta.array() > 0.0).all() &&
              (plan.nu.array() > 0.0).all(),
          Errc::StepPlanIncomplete, "step sizes must be positive");
  if (need_beta) {
    require(plan.beta.has_value() && *plan.beta > 0.0, Errc::StepPlanIncomplete,
            "aggregative plan needs beta");
  }
}

}  // namespace

Mat assemble_phi(const GameProblem& game, const CommGraph& graph, const StepPlan& plan) {
  check_plan(plan, game, graph);
  const int N = game.N, n = game.n, m = game.m, E = graph.num_edges();
  const int dim = N * n + E * m + N * m;
  Mat phi = Mat::Zero(dim, dim);
  const int v0 = N * n, l0 = N * n + E * m;

  // (1,1): tau^{-1} + W_n.
  for (int i = 0; i < N; ++i) {
    phi.block(i * n, i * n, n, n) = (1.0 / plan.tau[i]) * Mat::Identity(n, n);
    for (int j : graph.neighbors()[i]) {
      phi.block(i * n, j * n, n, n) = graph.weight(i, j) * Mat::Identity(n, n);
    }
  }
  // (1,3)/(3,1): -R^T A^T and its transpose (own-action slots only).
  for (int i = 0; i < N; ++i) {
    phi.block(i * n + game.offsets[i], l0 + i * m, game.dims[i], m) = -game.A[i].transpose();
    phi.block(l0 + i * m, i * n + game.offsets[i], m, game.dims[i]) = -game.A[i];
  }
  // (2,2): nu^{-1}; (3,3): delta^{-1}.
  for (int l = 0; l < E; ++l) {
    phi.block(v0 + l * m, v0 + l * m, m, m) = (1.0 / plan.nu[l]) * Mat::Identity(m, m);
  }
  for (int i = 0; i < N; ++i) {
    phi.block(l0 + i * m, l0 + i * m, m, m) = (1.0 / plan.delta[i]) * Mat::Identity(m, m);
  }
  // (2,3)/(3,2): V_m and its transpose.
  const Mat v = graph.incidence();
  for (int l = 0; l < E; ++l) {
    for (int i = 0; i < N; ++i) {
      if (v(l, i) != 0.0) {
        phi.block(v0 + l * m, l0 + i * m, m, m) = v(l, i) * Mat::Identity(m, m);
        phi.block(l0 + i * m, v0 + l * m, m, m) = v(l, i) * Mat::Identity(m, m);
      }
    }
  }
  return phi;
}

Mat assemble_phi_ne(const GameProblem& game, const CommGraph& graph, const StepPlan& plan) {
  check_plan(plan, game, graph);
  const int N = game.N, n = game.n;
  Mat phi = Mat::Zero(N * n, N * n);
  for (int i = 0; i < N; ++i) {
    phi.block(i * n, i * n, n, n) = (1.0 / plan.tau[i]) * Mat::Identity(n, n);
    for (int j : graph.neighbors()[i]) {
      phi.block(i * n, j * n, n, n) = graph.weight(i, j) * Mat::Identity(n, n);
    }
  }
  return phi;
}

Mat assemble_phi_tilde(const GameProblem& game, const CommGraph& graph, const StepPlan& plan) {
  check_plan(plan, game, graph, /*need_beta=*/true);
  const int N = game.N, m = game.m, E = graph.num_edges();
  const int nbar = game.dims[0];
  const int x0 = 0, s0 = N * nbar, v0 = 2 * N * nbar, l0 = 2 * N * nbar + E * m;
  const int dim = l0 + N * m;
  Mat phi = Mat::Zero(dim, dim);
  const Mat lap = graph.laplacian();

  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const Mat lb = lap(i, j) * Mat::Identity(nbar, nbar);
      phi.block(x0 + i * nbar, x0 + j * nbar, nbar, nbar) = -lb;
      phi.block(x0 + i * nbar, s0 + j * nbar, nbar, nbar) = -lb;
      phi.block(s0 + i * nbar, x0 + j * nbar, nbar, nbar) = -lb;
      phi.block(s0 + i * nbar, s0 + j * nbar, nbar, nbar) = -lb;
    }
    phi.block(x0 + i * nbar, x0 + i * nbar, nbar, nbar) +=
        (1.0 / plan.tau[i]) * Mat::Identity(nbar, nbar);
    phi.block(s0 + i * nbar, s0 + i * nbar, nbar, nbar) +=
        (1.0 / *plan.beta) * Mat::Identity(nbar, nbar);
    phi.block(x0 + i * nbar, l0 + i * m, nbar, m) = -game.A[i].transpose();
    phi.block(l0 + i * m, x0 + i * nbar, m, nbar) = -game.A[i];
    phi.block(l0 + i * m, l0 + i * m, m, m) = (1.0 / plan.delta[i]) * Mat::Identity(m, m);
  }
  for (int l = 0; l < E; ++l) {
    phi.block(v0 + l * m, v0 + l * m, m, m) = (1.0 / plan.nu[l]) * Mat::Identity(m, m);
  }
  const Mat v = graph.incidence();
  for (int l = 0; l < E; ++l) {
    for (int i = 0; i < N; ++i) {
      if (v(l, i) != 0.0) {
        phi.block(v0 + l * m, l0 + i * m, m, m) = v(l, i) * Mat::Identity(m, m);
        phi.block(l0 + i * m, v0 + l * m, m, m) = v(l, i) * Mat::Identity(m, m);
      }
    }
  }
  return phi;
}

double ne_rate(double gamma, double mu_fa_val, double norm_phi_ne) {
  require(gamma > 0.0 && gamma < 2.0, Errc::GammaOutOfRange, "ne_rate: gamma must be in (0,2)");
  require(mu_fa_val >= 0.0, Errc::NonpositiveInput, "ne_rate: mu_fa must be nonnegative");
  return std::max(1.0 - gamma * mu_fa_val / (norm_phi_ne + mu_fa_val), gamma - 1.0);
}

double optimal_gamma(double mu_fa_val, double norm_phi_ne) {
  return 1.0 + norm_phi_ne / (norm_phi_ne + 2.0 * mu_fa_val);
}

double theta_fa(const CommGraph& graph, double alpha, double theta) {
  double d_max = 0.0;
  for (int i = 0; i < graph.num_agents(); ++i) d_max = std::max(d_max, graph.degree(i));
  return 2.0 * d_max + alpha * theta;
}

double norm_phi_ne(const CommGraph& graph, const StepPlan& plan, bool cheap) {
  const int N = graph.num_agents();
  require(plan.tau.size() == N, Errc::StepPlanIncomplete, "plan tau does not match graph");
  if (cheap) {
    double bound = 0.0;
    for (int i = 0; i < N; ++i) bound = std::max(bound, graph.degree(i) + 1.0 / plan.tau[i]);
    return bound;
  }
  // Phi_NE = (diag(1/tau) + W) (x) I_n, so its norm is that of the N x N factor.
  Mat f = graph.weights();
  for (int i = 0; i < N; ++i) f(i, i) += 1.0 / plan.tau[i];
  Eigen::SelfAdjointEigenSolver<Mat> es(f, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void fill_ne_data(StepPlan& plan, const GameProblem& game, const CommGraph& graph) {
  const GameConstants c = game_constants(game);
  plan.mu_fa = mu_fa(plan.alpha, c.mu, c.theta0, c.theta, graph.algebraic_connectivity(), game.N);
  plan.norm_phi_ne = norm_phi_ne(graph, plan);
}

}  // namespace gnes
