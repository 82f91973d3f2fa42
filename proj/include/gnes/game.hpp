#pragma once

#include "gnes/graph.hpp"
#include "gnes/types.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace gnes {

/// Local feasible set of one agent, with exact projection support.
struct LocalSet {
  struct FullSpace {};
  struct Box {
    Vec lo, hi;
  };
  struct BoxHyperplane {
    Vec lo, hi;
    double level;  // 1^T x = level
  };

  std::variant<FullSpace, Box, BoxHyperplane> v;

  static LocalSet full_space() { return {FullSpace{}}; }
  static LocalSet box(Vec lo, Vec hi);
  static LocalSet box_hyperplane(Vec lo, Vec hi, double level);

  bool is_full_space() const { return std::holds_alternative<FullSpace>(v); }
  Vec project(const Vec& y) const;
  bool contains(const Vec& y, double tol = 1e-9) const;
};

struct GameConstants {
  double mu = 0.0;      // strong monotonicity of F
  double theta0 = 0.0;  // Lipschitz constant of F
  double theta = 0.0;   // Lipschitz constant of the extended map
};

/// Convex game with affine coupling constraints A x <= b,
/// A = [A_1 ... A_N], b = sum_i b_i.
///
/// Cost oracles take the full stacked action vector (layout
/// col(x_1,...,x_N)); gradient oracles return the agent's partial
/// gradient (length n_i). Games with linear gradients additionally carry
/// the per-agent Jacobian rows G_i (n_i x n) with grad_i(x) = G_i x + g_i,
/// from which all constants are computed exactly.
struct GameProblem {
  int N = 0;
  int n = 0;
  int m = 0;
  std::vector<int> dims;     // n_i
  std::vector<int> offsets;  // start of x_i within x

  std::vector<std::function<double(const Vec&)>> cost;
  std::vector<std::function<Vec(const Vec&)>> grad;
  std::vector<Mat> G;  // empty unless linear gradients
  std::vector<Vec> g;

  std::vector<LocalSet> sets;
  std::vector<Mat> A;  // m x n_i
  std::vector<Vec> b;  // length m

  std::optional<GameConstants> user_constants;

  bool linear_gradient() const { return !G.empty(); }
  bool has_coupling() const;
  void finalize();  // fills n, offsets; validates shapes

  Vec segment(const Vec& x, int i) const { return x.segment(offsets[i], dims[i]); }
  Mat stacked_A() const;   // m x n
  Vec stacked_b() const;   // length m
  Mat stacked_jacobian() const;  // n x n, linear-gradient games only
};

/// Stack of partial gradients evaluated on the true joint action.
Vec pseudo_gradient(const GameProblem& game, const Vec& x);

/// Stack of partial gradients where agent i evaluates on its own estimate
/// vector (xbold layout: col of N full-length estimate vectors, own slot
/// aliased).
Vec extended_pseudo_gradient(const GameProblem& game, const Vec& xbold);

/// alpha * R^T F(xbold) + (D_n - W_n) xbold. The selection maps are index
/// gather/scatter; set materialize_selection in tests to compare against
/// the dense assembly.
Vec augmented_operator_fa(const GameProblem& game, const CommGraph& graph, double alpha,
                          const Vec& xbold);

/// Dense R (n x Nn) for debug/equality tests only.
Mat selection_matrix(const GameProblem& game);

/// Natural-map residual of the KKT system: max of the primal and dual
/// projection residuals. Zero iff (x, lambda) is the v-GNE pair.
double kkt_residual(const GameProblem& game, const Vec& x, const Vec& lambda);

/// (mu, theta0, theta); exact spectra for linear-gradient games,
/// user-supplied otherwise.
GameConstants game_constants(const GameProblem& game);

/// Largest singular value; switches from a direct SVD to the symmetric
/// eigenproblem of the Gram matrix once either dimension gets large.
double spectral_norm(const Mat& a);

/// Projection onto the full local product set Omega.
Vec project_omega(const GameProblem& game, const Vec& x);

}  // namespace gnes
