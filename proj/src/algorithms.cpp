#include "gnes/algorithms.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <utility>

namespace gnes {

namespace {

// Strong-convexity / smoothness pair of a linear map y -> B y.
std::pair<double, double> map_constants(const Mat& b) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (b + b.transpose()), Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), spectral_norm(b)};
}

double error_amplification(double delta, const Mat& a) {
  const double s = 2.0 * delta * spectral_norm(a);
  return std::sqrt(1.0 + s * s);
}

}  // namespace

// ---------------------------------------------------------------------------
// GneAlgorithm

GneAlgorithm::GneAlgorithm(const GameProblem& game, const CommGraph& graph, StepPlan plan,
                           bool track_v)
    : game_(game), graph_(graph), plan_(std::move(plan)) {
  require(graph.num_agents() == game.N, Errc::DimensionMismatch, "graph/game agent count mismatch");
  require(plan_.tau.size() == game.N && plan_.delta.size() == game.N &&
              plan_.nu.size() == graph.num_edges() && plan_.alpha > 0.0,
          Errc::StepPlanIncomplete, "step plan does not match instance");
  layout_ = {game.N, game.n, game.m, graph.num_edges(), track_v};

  const GameConstants c = game_constants(game);
  inner_.resize(game.N);
  hown_.resize(game.N);
  for (int i = 0; i < game.N; ++i) {
    AgentInner& a = inner_[i];
    if (game.linear_gradient()) {
      hown_[i] = game.G[i].middleCols(game.offsets[i], game.dims[i]);
      std::tie(a.mu_i, a.theta_i) = map_constants(hown_[i]);
    } else {
      a.mu_i = c.mu;
      a.theta_i = c.theta;
    }
    a.c = 1.0 / (plan_.alpha * plan_.tau[i]) + graph.degree(i) / plan_.alpha;
    // The proximal/consensus curvature c strengthens both sides of the inner
    // map y -> (hown + cI) y: modulus mu_i + c, Lipschitz theta_i + c. Use
    // the bound ||I - tB||^2 <= 1 - 2 t m + t^2 L^2, valid without symmetry,
    // at its minimizer t = m / L^2.
    {
      const double m_in = a.mu_i + a.c;
      const double l_in = a.theta_i + a.c;
      a.step = m_in / (l_in * l_in);
      a.rho = std::sqrt(std::max(0.0, 1.0 - (m_in / l_in) * (m_in / l_in)));
    }
    a.amp = error_amplification(plan_.delta[i], game.A[i]);
    if (game.linear_gradient()) {
      hc_.push_back(hown_[i] + a.c * Mat::Identity(game.dims[i], game.dims[i]));
    }
  }
}

Vec GneAlgorithm::initial_state(const Vec& x0) const {
  require(x0.size() == game_.n, Errc::DimensionMismatch, "initial_state: x0 must have length n");
  Vec omega = Vec::Zero(layout_.dim());
  for (int i = 0; i < game_.N; ++i) omega.segment(layout_.x_off(i), game_.n) = x0;
  return omega;
}

StepResult GneAlgorithm::resolvent(const Vec& omega, double eps) const {
  require(omega.size() == layout_.dim(), Errc::DimensionMismatch, "resolvent: bad omega size");
  const int N = game_.N, n = game_.n, m = game_.m;
  const double alpha = plan_.alpha;

  StepResult out;
  out.u = Vec::Zero(layout_.dim());
  out.comms = 1;
  int total_steps = 0;

  for (int i = 0; i < N; ++i) {
    const auto est = omega.segment(layout_.x_off(i), n);
    const auto lam = omega.segment(layout_.lambda_off(i), m);

    // Weighted neighbor sum of estimate vectors (the one exchange).
    Vec navg = Vec::Zero(n);
    for (int j : graph_.neighbors()[i]) {
      navg += graph_.weight(i, j) * omega.segment(layout_.x_off(j), n);
    }

    // Estimate averaging; the own slot is overwritten by the x-update.
    Vec est_new = (est + plan_.tau[i] * navg) / (1.0 + plan_.tau[i] * graph_.degree(i));

    // x-update: argmin over Omega_i of
    //   J_i(y, est_new) + ||y - x_i||^2/(2 alpha tau_i)
    //   + d_i/(2 alpha) ||y - navg_own/d_i||^2 + (A_i^T lam)^T y / alpha.
    const Vec x_k = est.segment(game_.offsets[i], game_.dims[i]);
    const Vec own_avg = navg.segment(game_.offsets[i], game_.dims[i]);
    const Vec dual_lin =
        (game_.A[i].transpose() * lam - own_avg) / alpha - x_k / (alpha * plan_.tau[i]);
    const AgentInner& ai = inner_[i];

    std::pair<Vec, InnerSolveReport> solved;
    if (game_.linear_gradient()) {
      Vec e0 = est_new;
      e0.segment(game_.offsets[i], game_.dims[i]).setZero();
      const Vec c0 = game_.G[i] * e0 + game_.g[i] + dual_lin;
      solved = prox_best_response_linear(hc_[i], c0, game_.sets[i], x_k, ai.step, ai.rho, eps);
    } else {
      Vec full = est_new;
      const int off = game_.offsets[i], di = game_.dims[i];
      std::function<Vec(const Vec&)> subgrad = [&, full, off, di, dual_lin](const Vec& y) mutable {
        full.segment(off, di) = y;
        return Vec(game_.grad[i](full) + dual_lin + ai.c * y);
      };
      solved = prox_best_response(subgrad, game_.sets[i], x_k, ai.step, ai.rho, eps);
    }
    auto& [x_new, report] = solved;
    est_new.segment(game_.offsets[i], game_.dims[i]) = x_new;
    out.u.segment(layout_.x_off(i), n) = est_new;
    out.inner_max = std::max(out.inner_max, report.steps);
    total_steps += report.steps;

    // z-update (z-form) and lambda-update, all reads k-indexed.
    Vec z_k = z_of(omega, i);
    Vec z_new = z_k;
    for (int j : graph_.neighbors()[i]) {
      const int l = graph_.edge_index(i, j);
      z_new += plan_.nu[l] * graph_.weight(i, j) *
               (lam - omega.segment(layout_.lambda_off(j), m));
    }
    if (!layout_.vform) out.u.segment(layout_.dual_off() + i * m, m) = z_new;

    const Vec lam_arg = lam + plan_.delta[i] * Vec(game_.A[i] * (2.0 * x_new - x_k) -
                                                   game_.b[i] - (2.0 * z_new - z_k));
    out.u.segment(layout_.lambda_off(i), m) = project_nonneg(lam_arg);
  }

  if (layout_.vform) {
    // v-update: v_l += nu_l (V_m lambda^k)_l; z = V_m^T v reproduces the
    // per-agent z-updates above exactly.
    for (int l = 0; l < layout_.E; ++l) {
      const auto& e = graph_.edges()[l];
      const double s = std::sqrt(e.w);
      const Vec vml = s * (omega.segment(layout_.lambda_off(e.out), m) -
                           omega.segment(layout_.lambda_off(e.in), m));
      out.u.segment(layout_.dual_off() + l * m, m) =
          omega.segment(layout_.dual_off() + l * m, m) + plan_.nu[l] * vml;
    }
  }

  out.inner_mean = static_cast<double>(total_steps) / N;
  double amp2 = 0.0;
  for (const AgentInner& a : inner_) amp2 += a.amp * a.amp;
  out.err_bound = eps * std::sqrt(amp2);
  return out;
}

ResolventOracle GneAlgorithm::oracle(std::function<double(int)> eps_at) const {
  return [this, eps_at = std::move(eps_at)](const Vec& omega, int k) {
    return resolvent(omega, eps_at(k));
  };
}

Vec GneAlgorithm::own_actions(const Vec& omega) const {
  Vec x(game_.n);
  for (int i = 0; i < game_.N; ++i) {
    x.segment(game_.offsets[i], game_.dims[i]) =
        omega.segment(layout_.x_off(i) + game_.offsets[i], game_.dims[i]);
  }
  return x;
}

Vec GneAlgorithm::lambda_of(const Vec& omega, int i) const {
  return omega.segment(layout_.lambda_off(i), game_.m);
}

Vec GneAlgorithm::z_of(const Vec& omega, int i) const {
  if (!layout_.vform) return omega.segment(layout_.dual_off() + i * game_.m, game_.m);
  Vec z = Vec::Zero(game_.m);
  for (int l = 0; l < layout_.E; ++l) {
    const auto& e = graph_.edges()[l];
    const double s = std::sqrt(e.w);
    if (e.out == i) z += s * omega.segment(layout_.dual_off() + l * game_.m, game_.m);
    if (e.in == i) z -= s * omega.segment(layout_.dual_off() + l * game_.m, game_.m);
  }
  return z;
}

Vec GneAlgorithm::sum_z(const Vec& omega) const {
  Vec s = Vec::Zero(game_.m);
  for (int i = 0; i < game_.N; ++i) s += z_of(omega, i);
  return s;
}

double GneAlgorithm::disagreement(const Vec& omega) const {
  double d = 0.0;
  for (int i = 0; i < game_.N; ++i) {
    for (int j = i + 1; j < game_.N; ++j) {
      d = std::max(d, (omega.segment(layout_.x_off(i), game_.n) -
                       omega.segment(layout_.x_off(j), game_.n))
                          .norm());
    }
  }
  return d;
}

double GneAlgorithm::lambda_disagreement(const Vec& omega) const {
  double d = 0.0;
  for (int i = 0; i < game_.N; ++i) {
    for (int j = i + 1; j < game_.N; ++j) {
      d = std::max(d, (lambda_of(omega, i) - lambda_of(omega, j)).norm());
    }
  }
  return d;
}

Vec GneAlgorithm::kkt_lambda(const Vec& omega) const {
  Vec lam = Vec::Zero(game_.m);
  for (int i = 0; i < game_.N; ++i) lam += lambda_of(omega, i);
  return project_nonneg(Vec(lam / (game_.N * plan_.alpha)));
}

Vec GneAlgorithm::lift_consensus(const Vec& x_star, const Vec& lambda_star) const {
  require(x_star.size() == game_.n && lambda_star.size() == game_.m, Errc::DimensionMismatch,
          "lift_consensus: bad oracle pair sizes");
  Vec omega = Vec::Zero(layout_.dim());
  for (int i = 0; i < game_.N; ++i) {
    omega.segment(layout_.x_off(i), game_.n) = x_star;
    omega.segment(layout_.lambda_off(i), game_.m) = plan_.alpha * lambda_star;
  }
  const Vec slack = (game_.stacked_b() - game_.stacked_A() * x_star) / game_.N;
  Mat z(game_.m, game_.N);
  for (int i = 0; i < game_.N; ++i) {
    z.col(i) = game_.A[i] * game_.segment(x_star, i) - game_.b[i] + slack;
  }
  if (!layout_.vform) {
    for (int i = 0; i < game_.N; ++i) {
      omega.segment(layout_.dual_off() + i * game_.m, game_.m) = z.col(i);
    }
  } else {
    // Solve V^T v = z rowwise (least squares; z sums to zero across agents).
    const Mat vt = graph_.incidence().transpose();
    const auto cod = vt.completeOrthogonalDecomposition();
    for (int r = 0; r < game_.m; ++r) {
      const Vec vr = cod.solve(Vec(z.row(r).transpose()));
      for (int l = 0; l < layout_.E; ++l) omega[layout_.dual_off() + l * game_.m + r] = vr[l];
    }
  }
  return omega;
}

double GneAlgorithm::inclusion_residual(const Vec& omega_k, const Vec& omega_next) const {
  require(layout_.vform, Errc::MissingEdgeVariable,
          "inclusion_residual needs the v-form verification state");
  const int N = game_.N, n = game_.n, m = game_.m;
  double res = 0.0;

  // Extended pseudo-gradient at the new estimates.
  Vec xbold_next(static_cast<Eigen::Index>(N) * n);
  for (int i = 0; i < N; ++i) {
    xbold_next.segment(static_cast<Eigen::Index>(i) * n, n) =
        omega_next.segment(layout_.x_off(i), n);
  }
  const Vec f = extended_pseudo_gradient(game_, xbold_next);

  for (int i = 0; i < N; ++i) {
    const auto est_k = omega_k.segment(layout_.x_off(i), n);
    const auto est_n = omega_next.segment(layout_.x_off(i), n);
    Vec s = (est_n - est_k) / plan_.tau[i] + graph_.degree(i) * est_n;
    for (int j : graph_.neighbors()[i]) {
      s -= graph_.weight(i, j) * omega_k.segment(layout_.x_off(j), n);
    }
    s.segment(game_.offsets[i], game_.dims[i]) +=
        game_.A[i].transpose() * omega_k.segment(layout_.lambda_off(i), m) +
        plan_.alpha * f.segment(game_.offsets[i], game_.dims[i]);

    // Own slot: projection residual against N_Omega_i; estimate slots: plain.
    const Vec x_new = est_n.segment(game_.offsets[i], game_.dims[i]);
    const Vec proj_res =
        x_new - game_.sets[i].project(x_new - s.segment(game_.offsets[i], game_.dims[i]));
    s.segment(game_.offsets[i], game_.dims[i]) = proj_res;
    res = std::max(res, s.cwiseAbs().maxCoeff());
  }

  for (int l = 0; l < layout_.E; ++l) {
    const auto& e = graph_.edges()[l];
    const double sq = std::sqrt(e.w);
    const Vec sv = (omega_next.segment(layout_.dual_off() + l * m, m) -
                    omega_k.segment(layout_.dual_off() + l * m, m)) /
                       plan_.nu[l] -
                   sq * (omega_k.segment(layout_.lambda_off(e.out), m) -
                         omega_k.segment(layout_.lambda_off(e.in), m));
    if (m > 0) res = std::max(res, sv.cwiseAbs().maxCoeff());
  }

  for (int i = 0; i < N; ++i) {
    const Vec lam_k = omega_k.segment(layout_.lambda_off(i), m);
    const Vec lam_n = omega_next.segment(layout_.lambda_off(i), m);
    const Vec x_k =
        omega_k.segment(layout_.x_off(i) + game_.offsets[i], game_.dims[i]);
    const Vec x_n =
        omega_next.segment(layout_.x_off(i) + game_.offsets[i], game_.dims[i]);
    const Vec z_k = z_of(omega_k, i);
    const Vec z_n = z_of(omega_next, i);
    const Vec s = (lam_n - lam_k) / plan_.delta[i] + game_.b[i] -
                  game_.A[i] * (2.0 * x_n - x_k) + (2.0 * z_n - z_k);
    const Vec proj_res = lam_n - project_nonneg(Vec(lam_n - s));
    if (m > 0) res = std::max(res, proj_res.cwiseAbs().maxCoeff());
  }
  return res;
}

// ---------------------------------------------------------------------------
// NeAlgorithm

NeAlgorithm::NeAlgorithm(const GameProblem& game, const CommGraph& graph, StepPlan plan)
    : game_(game), graph_(graph), plan_(std::move(plan)) {
  require(!game.has_coupling(), Errc::CouplingPresent,
          "NE algorithm requires a game without coupling constraints");
  require(plan_.tau.size() == game.N && plan_.alpha > 0.0, Errc::StepPlanIncomplete,
          "step plan does not match instance");
  for (int i = 0; i < game.N; ++i) {
    require(1.0 / plan_.tau[i] > graph.degree(i), Errc::StepPlanIncomplete,
            "NE algorithm needs 1/tau_i > d_i");
  }
  const GameConstants c = game_constants(game);
  inner_.resize(game.N);
  hown_.resize(game.N);
  for (int i = 0; i < game.N; ++i) {
    AgentInner& a = inner_[i];
    if (game.linear_gradient()) {
      hown_[i] = game.G[i].middleCols(game.offsets[i], game.dims[i]);
      std::tie(a.mu_i, a.theta_i) = map_constants(hown_[i]);
    } else {
      a.mu_i = c.mu;
      a.theta_i = c.theta;
    }
    a.c = 1.0 / (plan_.alpha * plan_.tau[i]) + graph.degree(i) / plan_.alpha;
    // The proximal/consensus curvature c strengthens both sides of the inner
    // map y -> (hown + cI) y: modulus mu_i + c, Lipschitz theta_i + c. Use
    // the bound ||I - tB||^2 <= 1 - 2 t m + t^2 L^2, valid without symmetry,
    // at its minimizer t = m / L^2.
    {
      const double m_in = a.mu_i + a.c;
      const double l_in = a.theta_i + a.c;
      a.step = m_in / (l_in * l_in);
      a.rho = std::sqrt(std::max(0.0, 1.0 - (m_in / l_in) * (m_in / l_in)));
    }
    if (game.linear_gradient()) {
      hc_.push_back(hown_[i] + a.c * Mat::Identity(game.dims[i], game.dims[i]));
    }
  }
}

Vec NeAlgorithm::initial_state(const Vec& x0) const {
  require(x0.size() == game_.n, Errc::DimensionMismatch, "initial_state: x0 must have length n");
  Vec xbold(dim());
  for (int i = 0; i < game_.N; ++i) xbold.segment(i * game_.n, game_.n) = x0;
  return xbold;
}

StepResult NeAlgorithm::resolvent(const Vec& xbold, double eps) const {
  require(xbold.size() == dim(), Errc::DimensionMismatch, "resolvent: bad state size");
  const int N = game_.N, n = game_.n;
  StepResult out;
  out.u = Vec::Zero(dim());
  out.comms = 1;
  int total_steps = 0;

  for (int i = 0; i < N; ++i) {
    const auto est = xbold.segment(i * n, n);
    Vec navg = Vec::Zero(n);
    for (int j : graph_.neighbors()[i]) navg += graph_.weight(i, j) * xbold.segment(j * n, n);
    Vec est_new = (est + plan_.tau[i] * navg) / (1.0 + plan_.tau[i] * graph_.degree(i));

    const Vec x_k = est.segment(game_.offsets[i], game_.dims[i]);
    const Vec own_avg = navg.segment(game_.offsets[i], game_.dims[i]);
    const Vec lin = -own_avg / plan_.alpha - x_k / (plan_.alpha * plan_.tau[i]);
    const AgentInner& ai = inner_[i];

    std::pair<Vec, InnerSolveReport> solved;
    if (game_.linear_gradient()) {
      Vec e0 = est_new;
      e0.segment(game_.offsets[i], game_.dims[i]).setZero();
      const Vec c0 = game_.G[i] * e0 + game_.g[i] + lin;
      solved = prox_best_response_linear(hc_[i], c0, game_.sets[i], x_k, ai.step, ai.rho, eps);
    } else {
      Vec full = est_new;
      const int off = game_.offsets[i], di = game_.dims[i];
      std::function<Vec(const Vec&)> subgrad = [&, full, off, di, lin](const Vec& y) mutable {
        full.segment(off, di) = y;
        return Vec(game_.grad[i](full) + lin + ai.c * y);
      };
      solved = prox_best_response(subgrad, game_.sets[i], x_k, ai.step, ai.rho, eps);
    }
    auto& [x_new, report] = solved;
    est_new.segment(game_.offsets[i], game_.dims[i]) = x_new;
    out.u.segment(i * n, n) = est_new;
    out.inner_max = std::max(out.inner_max, report.steps);
    total_steps += report.steps;
  }
  out.inner_mean = static_cast<double>(total_steps) / N;
  out.err_bound = eps * std::sqrt(static_cast<double>(N));
  return out;
}

ResolventOracle NeAlgorithm::oracle(std::function<double(int)> eps_at) const {
  return [this, eps_at = std::move(eps_at)](const Vec& xbold, int k) {
    return resolvent(xbold, eps_at(k));
  };
}

Vec NeAlgorithm::own_actions(const Vec& xbold) const {
  Vec x(game_.n);
  for (int i = 0; i < game_.N; ++i) {
    x.segment(game_.offsets[i], game_.dims[i]) =
        xbold.segment(i * game_.n + game_.offsets[i], game_.dims[i]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// AggregativeGame

void AggregativeGame::finalize() {
  N = static_cast<int>(Qown.size());
  require(N >= 1, Errc::DimensionMismatch, "aggregative game needs at least one agent");
  require(static_cast<int>(lin.size()) == N && static_cast<int>(sets.size()) == N &&
              static_cast<int>(A.size()) == N && static_cast<int>(b.size()) == N,
          Errc::DimensionMismatch, "aggregative game fields incomplete");
  nbar = static_cast<int>(Qagg.rows());
  require(Qagg.cols() == nbar && pconst.size() == nbar, Errc::DimensionMismatch,
          "Qagg must be nbar x nbar and pconst length nbar");
  require((Qagg - Qagg.transpose()).cwiseAbs().maxCoeff() <= 1e-12, Errc::NotSymmetric,
          "Qagg must be symmetric (potential path)");
  for (int i = 0; i < N; ++i) {
    require(Qown[i].rows() == nbar && Qown[i].cols() == nbar && lin[i].size() == nbar,
            Errc::DimensionMismatch, "per-agent aggregative blocks must be nbar-sized");
    require((Qown[i] - Qown[i].transpose()).cwiseAbs().maxCoeff() <= 1e-12, Errc::NotSymmetric,
            "Qown must be symmetric");
    require(A[i].rows() == m && A[i].cols() == nbar && b[i].size() == m, Errc::DimensionMismatch,
            "coupling blocks must be m x nbar");
  }
}

Vec AggregativeGame::agg_gradient(int i, const Vec& x_i, const Vec& xi_i) const {
  require(x_i.size() == nbar && xi_i.size() == nbar, Errc::DimensionMismatch,
          "agg_gradient: nbar-sized inputs expected");
  return 2.0 * Qown[i] * x_i + lin[i] + Qagg * xi_i + pconst + (Qagg.transpose() * x_i) / N;
}

double AggregativeGame::theta_tilde() const {
  double t = 0.0;
  for (int i = 0; i < N; ++i) {
    Mat j(nbar, 2 * nbar);
    j << 2.0 * Qown[i] + Qagg.transpose() / N, Qagg;
    t = std::max(t, spectral_norm(j));
  }
  return t;
}

GameProblem AggregativeGame::to_game_problem() const {
  GameProblem game;
  game.m = m;
  game.dims.assign(N, nbar);
  game.sets = sets;
  game.A = A;
  game.b = b;
  const int n = N * nbar;
  for (int i = 0; i < N; ++i) {
    Mat gi = Mat::Zero(nbar, n);
    for (int j = 0; j < N; ++j) gi.middleCols(j * nbar, nbar) = Qagg / N;
    gi.middleCols(i * nbar, nbar) += 2.0 * Qown[i] + Qagg.transpose() / N;
    game.G.push_back(std::move(gi));
    game.g.push_back(lin[i] + pconst);

    game.cost.push_back([this, i, n](const Vec& x) {
      require(x.size() == n, Errc::DimensionMismatch, "cost: bad input size");
      Vec avg = Vec::Zero(nbar);
      for (int j = 0; j < N; ++j) avg += x.segment(j * nbar, nbar);
      avg /= N;
      const Vec xi = x.segment(i * nbar, nbar);
      return xi.dot(Qown[i] * xi) + lin[i].dot(xi) + (Qagg * avg + pconst).dot(xi);
    });
    game.grad.push_back(nullptr);  // linear-gradient fast path covers it
  }
  game.finalize();
  return game;
}

// ---------------------------------------------------------------------------
// AggAlgorithm

AggAlgorithm::AggAlgorithm(const AggregativeGame& game, const CommGraph& graph, StepPlan plan,
                           XUpdate mode)
    : game_(game), graph_(graph), plan_(std::move(plan)), mode_(mode) {
  require(graph.num_agents() == game.N, Errc::DimensionMismatch, "graph/game agent count mismatch");
  require(plan_.beta.has_value() && *plan_.beta > 0.0, Errc::StepPlanIncomplete,
          "aggregative plan needs beta");
  require(plan_.tau.size() == game.N && plan_.delta.size() == game.N &&
              plan_.nu.size() == graph.num_edges() && plan_.alpha > 0.0,
          Errc::StepPlanIncomplete, "step plan does not match instance");

  const double tt = game.theta_tilde();
  step_.resize(game.N);
  rho_.resize(game.N);
  amp_.resize(game.N);
  for (int i = 0; i < game.N; ++i) {
    require(1.0 / plan_.tau[i] - plan_.alpha * std::sqrt(2.0) * tt > 0.0, Errc::AlphaTooLarge,
            "inner map loses strong monotonicity: 1/tau_i <= alpha sqrt(2) theta_tilde");
    // Exact constants of the (linear) inner map
    //   y -> alpha tilde F_i(y, y + s) + y / tau_i.
    const Mat mt = plan_.alpha * (2.0 * game.Qown[i] + game.Qagg +
                                  game.Qagg.transpose() / game.N) +
                   Mat::Identity(game.nbar, game.nbar) / plan_.tau[i];
    auto [mu_t, l_t] = map_constants(mt);
    require(mu_t > 0.0, Errc::AlphaTooLarge, "inner map not strongly monotone");
    step_[i] = 2.0 / (mu_t + l_t);
    rho_[i] = (l_t - mu_t) / (l_t + mu_t);
    amp_[i] = error_amplification(plan_.delta[i], game.A[i]);
    if (mode_ == XUpdate::Inclusion) {
      hx_.push_back(mt);
    } else {
      // Hessian of the closed-form potential path (coincides with mt for
      // symmetric Qagg, but derived independently).
      const double w = (game.N + 1.0) / (2.0 * game.N);
      hx_.push_back(plan_.alpha *
                        (2.0 * game.Qown[i] + w * (game.Qagg + game.Qagg.transpose())) +
                    Mat::Identity(game.nbar, game.nbar) / plan_.tau[i]);
    }
  }
}

Vec AggAlgorithm::initial_state(const Vec& x0) const {
  require(x0.size() == game_.N * game_.nbar, Errc::DimensionMismatch,
          "initial_state: x0 must have length N nbar");
  Vec omega = Vec::Zero(dim());
  omega.head(game_.N * game_.nbar) = x0;
  return omega;
}

StepResult AggAlgorithm::resolvent(const Vec& omega, double eps) const {
  require(omega.size() == dim(), Errc::DimensionMismatch, "resolvent: bad state size");
  const int N = game_.N, nb = game_.nbar, m = game_.m;
  const int s0 = N * nb, z0 = 2 * N * nb, l0 = 2 * N * nb + N * m;
  const double alpha = plan_.alpha;

  StepResult out;
  out.u = Vec::Zero(dim());
  out.comms = 1;
  int total_steps = 0;

  for (int i = 0; i < N; ++i) {
    const Vec x_k = omega.segment(i * nb, nb);
    const Vec s_k = omega.segment(s0 + i * nb, nb);
    const Vec lam = omega.segment(l0 + i * m, m);
    const Vec sigma_i = x_k + s_k;

    // q_i = sum_j w_ij (sigma_i - sigma_j): the one exchanged quantity.
    Vec q = Vec::Zero(nb);
    for (int j : graph_.neighbors()[i]) {
      const Vec sigma_j = omega.segment(j * nb, nb) + omega.segment(s0 + j * nb, nb);
      q += graph_.weight(i, j) * (sigma_i - sigma_j);
    }

    const Vec s_new = s_k - *plan_.beta * q;
    out.u.segment(s0 + i * nb, nb) = s_new;

    // x-update: 0 in alpha tilde F_i(y, y + s_new) + (y - x_k)/tau_i
    //           + A_i^T lam + q + N_Omega_i(y).
    const Vec lin = game_.A[i].transpose() * lam + q - x_k / plan_.tau[i];
    // Constant part of the affine inner gradient; the y-dependent part is
    // the precomputed hx_[i] (identical for both derivations when Qagg is
    // symmetric, so the two x-update modes agree to inner tolerance).
    const Vec c0 =
        alpha * (game_.lin[i] + game_.pconst + game_.Qagg * s_new) + lin;
    auto [x_new, report] =
        prox_best_response_linear(hx_[i], c0, game_.sets[i], x_k, step_[i], rho_[i], eps);
    out.u.segment(i * nb, nb) = x_new;
    out.inner_max = std::max(out.inner_max, report.steps);
    total_steps += report.steps;

    Vec z_new = omega.segment(z0 + i * m, m);
    for (int j : graph_.neighbors()[i]) {
      const int l = graph_.edge_index(i, j);
      z_new += plan_.nu[l] * graph_.weight(i, j) * (lam - omega.segment(l0 + j * m, m));
    }
    out.u.segment(z0 + i * m, m) = z_new;

    const Vec lam_arg =
        lam + plan_.delta[i] * Vec(game_.A[i] * (2.0 * x_new - x_k) - game_.b[i] -
                                   (2.0 * z_new - omega.segment(z0 + i * m, m)));
    out.u.segment(l0 + i * m, m) = project_nonneg(lam_arg);
  }

  out.inner_mean = static_cast<double>(total_steps) / N;
  double amp2 = 0.0;
  for (double a : amp_) amp2 += a * a;
  out.err_bound = eps * std::sqrt(amp2);
  return out;
}

ResolventOracle AggAlgorithm::oracle(std::function<double(int)> eps_at) const {
  return [this, eps_at = std::move(eps_at)](const Vec& omega, int k) {
    return resolvent(omega, eps_at(k));
  };
}

Vec AggAlgorithm::x_of(const Vec& omega) const { return omega.head(game_.N * game_.nbar); }

Vec AggAlgorithm::s_of(const Vec& omega) const {
  return omega.segment(game_.N * game_.nbar, game_.N * game_.nbar);
}

Vec AggAlgorithm::lambda_of(const Vec& omega, int i) const {
  return omega.segment(2 * game_.N * game_.nbar + game_.N * game_.m + i * game_.m, game_.m);
}

Vec AggAlgorithm::sum_z(const Vec& omega) const {
  Vec s = Vec::Zero(game_.m);
  for (int i = 0; i < game_.N; ++i) {
    s += omega.segment(2 * game_.N * game_.nbar + i * game_.m, game_.m);
  }
  return s;
}

Vec AggAlgorithm::avg_s(const Vec& omega) const {
  Vec avg = Vec::Zero(game_.nbar);
  for (int i = 0; i < game_.N; ++i) {
    avg += omega.segment(game_.N * game_.nbar + i * game_.nbar, game_.nbar);
  }
  return avg / game_.N;
}

Vec AggAlgorithm::kkt_lambda(const Vec& omega) const {
  Vec lam = Vec::Zero(game_.m);
  for (int i = 0; i < game_.N; ++i) lam += lambda_of(omega, i);
  return project_nonneg(Vec(lam / (game_.N * plan_.alpha)));
}

// ---------------------------------------------------------------------------
// Baseline

Vec fb_ne_baseline_step(const GameProblem& game, const CommGraph& graph, double alpha,
                        const Vec& xbold, double tau_fb) {
  require(tau_fb > 0.0, Errc::NonpositiveInput, "fb_ne_baseline_step: tau_fb must be positive");
  Vec y = xbold - tau_fb * augmented_operator_fa(game, graph, alpha, xbold);
  for (int i = 0; i < game.N; ++i) {
    auto own = y.segment(static_cast<Eigen::Index>(i) * game.n + game.offsets[i], game.dims[i]);
    own = game.sets[i].project(own);
  }
  return y;
}

double fb_ne_step_bound(double mu_fa_val, double theta_fa_val, double c) {
  require(mu_fa_val > 0.0 && theta_fa_val > 0.0 && c > 0.0, Errc::NonpositiveInput,
          "fb_ne_step_bound: positive inputs required");
  return c * mu_fa_val / (theta_fa_val * theta_fa_val + mu_fa_val);
}

}  // namespace gnes
