#include "gnes/oracle.hpp"

#include "gnes/projection.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

namespace gnes {

namespace {

// Independent stacking of the per-agent gradient oracles (the oracle never
// calls the distributed code paths).
Vec stack_gradients(const GameProblem& game, const Vec& x) {
  Vec f(game.n);
  for (int i = 0; i < game.N; ++i) {
    f.segment(game.offsets[i], game.dims[i]) =
        game.linear_gradient() ? Vec(game.G[i] * x + game.g[i]) : game.grad[i](x);
  }
  return f;
}

// One-sided or two-sided affine constraint lo <= a^T x <= hi.
struct Slab {
  Vec a;
  double lo, hi, sq;
};

Vec project_slab(const Vec& x, const Slab& s) {
  const double t = s.a.dot(x);
  if (t > s.hi) return x - ((t - s.hi) / s.sq) * s.a;
  if (t < s.lo) return x - ((t - s.lo) / s.sq) * s.a;
  return x;
}

// Nonzero coupling rows, with exact negation pairs merged into two-sided
// slabs. Merging is sound (the intersection is unchanged) and makes the
// cyclic projections dramatically faster when the rows pair up, as they do
// whenever a generator encodes interval constraints as +/- halfspaces.
std::vector<Slab> coupling_slabs(const Mat& a, const Vec& b) {
  std::vector<Slab> slabs;
  std::vector<char> used(a.rows(), 0);
  for (int r = 0; r < a.rows(); ++r) {
    if (used[r] || a.row(r).cwiseAbs().sum() == 0.0) continue;
    used[r] = 1;
    Slab s{a.row(r).transpose(), -std::numeric_limits<double>::infinity(), b[r],
           a.row(r).squaredNorm()};
    for (int r2 = r + 1; r2 < a.rows(); ++r2) {
      if (!used[r2] && (a.row(r2) + a.row(r)).cwiseAbs().sum() == 0.0) {
        used[r2] = 1;
        s.lo = std::max(s.lo, -b[r2]);
      }
    }
    slabs.push_back(std::move(s));
  }
  return slabs;
}

}  // namespace

Vec project_feasible(const GameProblem& game, const Vec& y) {
  const Mat a = game.stacked_A();
  const Vec b = game.stacked_b();
  const std::vector<Slab> slabs = coupling_slabs(a, b);
  if (slabs.empty()) return project_omega(game, y);

  const int S = 1 + static_cast<int>(slabs.size());
  std::vector<Vec> p(S, Vec::Zero(game.n));
  Vec x = y;
  double checkpoint = std::numeric_limits<double>::infinity();
  for (int cycle = 0; cycle < 100000; ++cycle) {
    double change = 0.0;
    for (int s = 0; s < S; ++s) {
      const Vec w = x + p[s];
      Vec xp = s == 0 ? project_omega(game, w) : project_slab(w, slabs[s - 1]);
      p[s] = w - xp;
      change = std::max(change, (x - xp).cwiseAbs().maxCoeff());
      x = std::move(xp);
    }
    if (change <= 1e-13) break;
    // On an empty intersection the per-cycle displacement stalls at a
    // positive constant instead of decaying geometrically; fail fast.
    if (cycle % 1000 == 999) {
      if (change > 1e-9 && change >= 0.999 * checkpoint) {
        fail(Errc::Infeasible, "Dykstra projection stalled (empty feasible set?)");
      }
      checkpoint = change;
    }
    if (change <= 1e-11) {
      bool feasible = true;
      for (const Slab& s : slabs) {
        const double t = s.a.dot(x);
        if (t - s.hi > 1e-11 || s.lo - t > 1e-11) {
          feasible = false;
          break;
        }
      }
      if (feasible) break;
    }
    if (cycle == 99999) {
      fail(Errc::Infeasible, "Dykstra projection did not converge (empty feasible set?)");
    }
  }
  return x;
}

bool feasibility_probe(const GameProblem& game) {
  try {
    const Vec x = project_feasible(game, project_omega(game, Vec::Zero(game.n)));
    const Mat a = game.stacked_A();
    const Vec b = game.stacked_b();
    for (int r = 0; r < game.m; ++r) {
      if (a.row(r).cwiseAbs().sum() > 0.0 && a.row(r).dot(x) - b[r] > 1e-6) return false;
    }
    for (int i = 0; i < game.N; ++i) {
      if (!game.sets[i].contains(game.segment(x, i), 1e-6)) return false;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

namespace {

// Recover lambda* >= 0 (and free hyperplane multipliers) from the
// stationarity inclusion 0 in F(x*) + A^T lambda + N_Omega(x*): convex
// hinge-penalty least squares over the active coupling rows, solved by
// projected gradient with a tiny ridge.
Vec recover_lambda(const GameProblem& game, const Vec& x, double tol, bool* ridge_flagged) {
  Vec lambda = Vec::Zero(game.m);
  if (game.m == 0) return lambda;
  const Mat a = game.stacked_A();
  const Vec b = game.stacked_b();
  const Vec fx = stack_gradients(game, x);

  const double act_tol = std::max(1e-7, 100.0 * tol);
  std::vector<int> active;
  for (int r = 0; r < game.m; ++r) {
    if (a.row(r).cwiseAbs().sum() > 0.0 && b[r] - a.row(r).dot(x) <= act_tol) active.push_back(r);
  }

  // Component classes from the local sets: 0 interior (residual must be 0),
  // -1 at lower bound (residual >= 0), +1 at upper (residual <= 0),
  // 2 pinned (free).
  std::vector<int> cls(game.n, 0);
  std::vector<int> hyper_agents;
  const double btol = 1e-7;
  for (int i = 0; i < game.N; ++i) {
    const Vec xi = game.segment(x, i);
    const LocalSet& set = game.sets[i];
    if (set.is_full_space()) continue;
    const Vec* lo = nullptr;
    const Vec* hi = nullptr;
    if (const auto* bx = std::get_if<LocalSet::Box>(&set.v)) {
      lo = &bx->lo;
      hi = &bx->hi;
    } else {
      const auto& bh = std::get<LocalSet::BoxHyperplane>(set.v);
      lo = &bh.lo;
      hi = &bh.hi;
      hyper_agents.push_back(i);
    }
    for (int j = 0; j < game.dims[i]; ++j) {
      const bool at_lo = xi[j] - (*lo)[j] <= btol;
      const bool at_hi = (*hi)[j] - xi[j] <= btol;
      cls[game.offsets[i] + j] = at_lo && at_hi ? 2 : at_lo ? -1 : at_hi ? 1 : 0;
    }
  }

  const int ma = static_cast<int>(active.size());
  const int nt = static_cast<int>(hyper_agents.size());
  if (ma + nt == 0) return lambda;

  Mat basis(game.n, ma + nt);
  for (int c = 0; c < ma; ++c) basis.col(c) = a.row(active[c]).transpose();
  basis.rightCols(nt).setZero();
  for (int c = 0; c < nt; ++c) {
    const int i = hyper_agents[c];
    basis.col(ma + c).segment(game.offsets[i], game.dims[i]).setOnes();
  }

  const double ridge = 1e-12;
  const auto svd = basis.jacobiSvd();
  const double sv = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  if (ridge_flagged && smin < 1e-8 * sv) *ridge_flagged = true;
  const double step = 1.0 / (sv * sv + ridge);

  Vec z = Vec::Zero(ma + nt);
  for (int it = 0; it < 100000; ++it) {
    const Vec r = fx + basis * z;
    Vec psi(game.n);
    for (int j = 0; j < game.n; ++j) {
      switch (cls[j]) {
        case 0: psi[j] = r[j]; break;
        case -1: psi[j] = std::min(r[j], 0.0); break;
        case 1: psi[j] = std::max(r[j], 0.0); break;
        default: psi[j] = 0.0; break;
      }
    }
    Vec g = basis.transpose() * psi + ridge * z;
    Vec z_next = z - step * g;
    z_next.head(ma) = project_nonneg(Vec(z_next.head(ma)));
    const double move = (z_next - z).norm();
    z = std::move(z_next);
    if (move <= 1e-14 * (1.0 + z.norm())) break;
  }
  for (int c = 0; c < ma; ++c) lambda[active[c]] = z[c];
  return lambda;
}

}  // namespace

OracleSolution solve_vgne_centralized(const GameProblem& game, double tol, int max_iters) {
  const GameConstants c = game_constants(game);
  const double step = 1.0 / (2.0 * c.theta0);
  const double stop = tol * std::min(step, 1.0);

  OracleSolution sol;
  sol.tol = tol;
  Vec x = project_feasible(game, project_omega(game, Vec::Zero(game.n)));
  for (int k = 0; k < max_iters; ++k) {
    const Vec y = project_feasible(game, Vec(x - step * stack_gradients(game, x)));
    const double res = (x - y).norm();
    x = project_feasible(game, Vec(x - step * stack_gradients(game, y)));
    sol.iterations = k + 1;
    if (res <= stop) {
      sol.x = x;
      sol.lambda = recover_lambda(game, x, tol, &sol.ridge_flagged);
      sol.kkt_res = kkt_residual(game, x, sol.lambda);
      return sol;
    }
  }
  fail(Errc::ToleranceNotReached, "extragradient oracle hit the iteration cap");
}

OracleSolution solve_vgne_cached(const GameProblem& game, double tol, const std::string& cache_dir,
                                 const std::string& key) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(cache_dir) / (key + ".json");
  if (fs::exists(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    if (j.at("tol").get<double>() <= tol) {
      OracleSolution sol;
      sol.x = Vec::Map(j.at("x").get<std::vector<double>>().data(), game.n);
      const auto lv = j.at("lambda").get<std::vector<double>>();
      sol.lambda = Vec::Map(lv.data(), static_cast<Eigen::Index>(lv.size()));
      sol.kkt_res = j.at("kkt_res").get<double>();
      sol.iterations = j.at("iterations").get<int>();
      sol.tol = j.at("tol").get<double>();
      sol.ridge_flagged = j.value("ridge_flagged", false);
      return sol;
    }
  }
  OracleSolution sol = solve_vgne_centralized(game, tol);
  fs::create_directories(cache_dir);
  nlohmann::json j;
  j["x"] = std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
  j["lambda"] = std::vector<double>(sol.lambda.data(), sol.lambda.data() + sol.lambda.size());
  j["kkt_res"] = sol.kkt_res;
  j["iterations"] = sol.iterations;
  j["tol"] = sol.tol;
  j["ridge_flagged"] = sol.ridge_flagged;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  return sol;
}

}  // namespace gnes
