#include "gnes/game.hpp"

#include "gnes/projection.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace gnes {

LocalSet LocalSet::box(Vec lo, Vec hi) {
  require((lo.array() <= hi.array()).all(), Errc::BadBounds, "LocalSet::box: lo > hi");
  return {Box{std::move(lo), std::move(hi)}};
}

LocalSet LocalSet::box_hyperplane(Vec lo, Vec hi, double level) {
  require((lo.array() <= hi.array()).all(), Errc::BadBounds, "LocalSet::box_hyperplane: lo > hi");
  require(lo.sum() <= level && level <= hi.sum(), Errc::Infeasible,
          "LocalSet::box_hyperplane: infeasible level");
  return {BoxHyperplane{std::move(lo), std::move(hi), level}};
}

Vec LocalSet::project(const Vec& y) const {
  if (std::holds_alternative<FullSpace>(v)) return y;
  if (const auto* b = std::get_if<Box>(&v)) return project_box(y, b->lo, b->hi);
  const auto& bh = std::get<BoxHyperplane>(v);
  return project_box_hyperplane(y, bh.lo, bh.hi, bh.level);
}

bool LocalSet::contains(const Vec& y, double tol) const {
  if (std::holds_alternative<FullSpace>(v)) return true;
  if (const auto* b = std::get_if<Box>(&v)) {
    return (y.array() >= b->lo.array() - tol).all() && (y.array() <= b->hi.array() + tol).all();
  }
  const auto& bh = std::get<BoxHyperplane>(v);
  return (y.array() >= bh.lo.array() - tol).all() && (y.array() <= bh.hi.array() + tol).all() &&
         std::abs(y.sum() - bh.level) <= tol;
}

bool GameProblem::has_coupling() const {
  if (m == 0) return false;
  for (int i = 0; i < N; ++i) {
    if (A[i].cwiseAbs().sum() != 0.0 || b[i].cwiseAbs().sum() != 0.0) return true;
  }
  return false;
}

void GameProblem::finalize() {
  N = static_cast<int>(dims.size());
  require(N >= 1, Errc::DimensionMismatch, "game needs at least one agent");
  offsets.resize(N);
  n = 0;
  for (int i = 0; i < N; ++i) {
    offsets[i] = n;
    n += dims[i];
  }
  require(static_cast<int>(sets.size()) == N, Errc::DimensionMismatch, "one local set per agent");
  require(static_cast<int>(A.size()) == N && static_cast<int>(b.size()) == N,
          Errc::DimensionMismatch, "one coupling block per agent");
  for (int i = 0; i < N; ++i) {
    require(A[i].rows() == m && A[i].cols() == dims[i], Errc::DimensionMismatch,
            "A_i must be m x n_i");
    require(b[i].size() == m, Errc::DimensionMismatch, "b_i must have length m");
  }
  if (!G.empty()) {
    require(static_cast<int>(G.size()) == N && static_cast<int>(g.size()) == N,
            Errc::DimensionMismatch, "linear gradient blocks incomplete");
    for (int i = 0; i < N; ++i) {
      require(G[i].rows() == dims[i] && G[i].cols() == n, Errc::DimensionMismatch,
              "G_i must be n_i x n");
    }
  }
}

Vec pseudo_gradient(const GameProblem& game, const Vec& x) {
  require(x.size() == game.n, Errc::DimensionMismatch, "pseudo_gradient: x must have length n");
  Vec f(game.n);
  for (int i = 0; i < game.N; ++i) {
    Vec gi = game.linear_gradient() ? Vec(game.G[i] * x + game.g[i]) : game.grad[i](x);
    require(gi.size() == game.dims[i], Errc::DimensionMismatch, "gradient oracle size mismatch");
    f.segment(game.offsets[i], game.dims[i]) = gi;
  }
  return f;
}

Vec extended_pseudo_gradient(const GameProblem& game, const Vec& xbold) {
  require(xbold.size() == static_cast<Eigen::Index>(game.N) * game.n, Errc::DimensionMismatch,
          "extended_pseudo_gradient: xbold must have length N*n");
  Vec f(game.n);
  for (int i = 0; i < game.N; ++i) {
    const auto est = xbold.segment(static_cast<Eigen::Index>(i) * game.n, game.n);
    Vec gi = game.linear_gradient() ? Vec(game.G[i] * est + game.g[i]) : game.grad[i](est);
    f.segment(game.offsets[i], game.dims[i]) = gi;
  }
  return f;
}

Vec augmented_operator_fa(const GameProblem& game, const CommGraph& graph, double alpha,
                          const Vec& xbold) {
  require(alpha > 0.0, Errc::NonpositiveInput, "augmented_operator_fa: alpha must be positive");
  const int N = game.N;
  const int n = game.n;
  require(graph.num_agents() == N, Errc::DimensionMismatch, "graph/game agent count mismatch");
  require(xbold.size() == static_cast<Eigen::Index>(N) * n, Errc::DimensionMismatch,
          "augmented_operator_fa: xbold must have length N*n");

  const Vec f = extended_pseudo_gradient(game, xbold);
  Vec out = Vec::Zero(static_cast<Eigen::Index>(N) * n);
  for (int i = 0; i < N; ++i) {
    // Laplacian disagreement term (D_n - W_n) xbold, row block i.
    auto blk = out.segment(static_cast<Eigen::Index>(i) * n, n);
    blk = graph.degree(i) * xbold.segment(static_cast<Eigen::Index>(i) * n, n);
    for (int j : graph.neighbors()[i]) {
      blk -= graph.weight(i, j) * xbold.segment(static_cast<Eigen::Index>(j) * n, n);
    }
    // alpha * R^T F: scatter agent i's gradient into its own-action slot.
    blk.segment(game.offsets[i], game.dims[i]) +=
        alpha * f.segment(game.offsets[i], game.dims[i]);
  }
  return out;
}

Mat selection_matrix(const GameProblem& game) {
  Mat r = Mat::Zero(game.n, static_cast<Eigen::Index>(game.N) * game.n);
  for (int i = 0; i < game.N; ++i) {
    for (int c = 0; c < game.dims[i]; ++c) {
      r(game.offsets[i] + c, static_cast<Eigen::Index>(i) * game.n + game.offsets[i] + c) = 1.0;
    }
  }
  return r;
}

Vec project_omega(const GameProblem& game, const Vec& x) {
  Vec out(game.n);
  for (int i = 0; i < game.N; ++i) {
    out.segment(game.offsets[i], game.dims[i]) = game.sets[i].project(game.segment(x, i));
  }
  return out;
}

double kkt_residual(const GameProblem& game, const Vec& x, const Vec& lambda) {
  require(lambda.size() == game.m, Errc::DimensionMismatch, "kkt_residual: lambda must have length m");
  require((lambda.array() >= 0.0).all(), Errc::NegativeMultiplier,
          "kkt_residual: lambda must be nonnegative");
  const Mat a = game.stacked_A();
  const Vec b = game.stacked_b();
  const Vec f = pseudo_gradient(game, x);
  const Vec primal = x - project_omega(game, x - (f + a.transpose() * lambda));
  const Vec dual = lambda - project_nonneg(lambda + (a * x - b));
  return std::max(primal.norm(), dual.norm());
}

Mat GameProblem::stacked_A() const {
  Mat a = Mat::Zero(m, n);
  for (int i = 0; i < N; ++i) a.middleCols(offsets[i], dims[i]) = A[i];
  return a;
}

Vec GameProblem::stacked_b() const {
  Vec out = Vec::Zero(m);
  for (int i = 0; i < N; ++i) out += b[i];
  return out;
}

Mat GameProblem::stacked_jacobian() const {
  require(linear_gradient(), Errc::MissingConstants, "stacked_jacobian: game has no linear gradients");
  Mat q(n, n);
  for (int i = 0; i < N; ++i) q.middleRows(offsets[i], dims[i]) = G[i];
  return q;
}

double spectral_norm(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  if (std::min(a.rows(), a.cols()) <= 64) {
    return a.jacobiSvd().singularValues().maxCoeff();
  }
  // Gram-matrix route: much faster for large blocks, and the sqrt halves
  // the relative accuracy, which is ample for step-size constants.
  const Mat gram = a.rows() <= a.cols() ? Mat(a * a.transpose()) : Mat(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

GameConstants game_constants(const GameProblem& game) {
  if (!game.linear_gradient()) {
    require(game.user_constants.has_value(), Errc::MissingConstants,
            "nonlinear game requires user-supplied (mu, theta0, theta)");
    return *game.user_constants;
  }
  const Mat q = game.stacked_jacobian();
  const Mat sym = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  GameConstants c;
  c.mu = es.eigenvalues().minCoeff();
  require(c.mu > 0.0, Errc::NotStronglyMonotone, "pseudo-gradient is not strongly monotone");
  c.theta0 = spectral_norm(q);
  // The extended map sends xbold to col(G_i * est_i): block-diagonal over
  // agents, so its spectral norm is the largest per-agent one.
  c.theta = 0.0;
  for (int i = 0; i < game.N; ++i) {
    c.theta = std::max(c.theta, spectral_norm(game.G[i]));
  }
  return c;
}

}  // namespace gnes
