#include "gnes/local_solver.hpp"

#include <cmath>

namespace gnes {

namespace {

void check_inputs(double step, double rho, double eps) {
  require(step > 0.0, Errc::NonpositiveInput, "prox_best_response: step must be positive");
  require(rho >= 0.0 && rho < 1.0, Errc::InnerSolveFailure,
          "prox_best_response: contraction factor must be in [0,1)");
  require(eps > 0.0, Errc::NonpositiveInput, "prox_best_response: eps must be positive");
}

// Step-count rule: rho^j ||x^0 - x^1|| / (1 - rho) <= eps.
int step_target(double rho, double quit, double first_step, int max_steps) {
  if (rho <= 0.0) return 1;  // rho = 0: one step is already exact
  const double t = std::log(quit / first_step) / std::log(rho);
  if (t >= static_cast<double>(max_steps)) return max_steps;
  return std::max(1, static_cast<int>(std::ceil(t)));
}

}  // namespace

std::pair<Vec, InnerSolveReport> prox_best_response(const std::function<Vec(const Vec&)>& grad,
                                                    const LocalSet& set, const Vec& warm,
                                                    double step, double rho, double eps,
                                                    int max_steps) {
  check_inputs(step, rho, eps);

  InnerSolveReport report;
  report.eps = eps;
  report.rho = rho;

  const double quit = eps * (1.0 - rho);  // displacement certifying eps-accuracy
  Vec x = set.project(warm - step * grad(warm));
  require(x.allFinite(), Errc::NonfiniteIterate, "prox_best_response: non-finite inner iterate");
  report.first_step = (warm - x).norm();
  report.steps = 1;
  if (report.first_step <= quit) return {x, report};

  const int target = std::min(step_target(rho, quit, report.first_step, max_steps), max_steps);
  while (report.steps < target) {
    Vec next = set.project(x - step * grad(x));
    require(next.allFinite(), Errc::NonfiniteIterate,
            "prox_best_response: non-finite inner iterate");
    const double disp = (x - next).norm();
    x = std::move(next);
    ++report.steps;
    if (disp <= quit) break;
  }
  return {x, report};
}

std::pair<Vec, InnerSolveReport> prox_best_response_linear(const Mat& H, const Vec& c0,
                                                           const LocalSet& set, const Vec& warm,
                                                           double step, double rho, double eps,
                                                           int max_steps) {
  check_inputs(step, rho, eps);

  InnerSolveReport report;
  report.eps = eps;
  report.rho = rho;

  const auto* box = std::get_if<LocalSet::Box>(&set.v);
  const bool full = set.is_full_space();
  Vec x = warm;
  Vec g(warm.size()), next(warm.size());
  const auto advance = [&](const Vec& cur) {
    g.noalias() = H * cur;
    g += c0;
    next = cur - step * g;
    if (box) {
      next = next.cwiseMax(box->lo).cwiseMin(box->hi);
    } else if (!full) {
      next = set.project(next);
    }
  };

  const double quit = eps * (1.0 - rho);
  advance(x);
  require(next.allFinite(), Errc::NonfiniteIterate, "prox_best_response: non-finite inner iterate");
  report.first_step = (warm - next).norm();
  report.steps = 1;
  x.swap(next);
  if (report.first_step <= quit) return {x, report};

  const int target = std::min(step_target(rho, quit, report.first_step, max_steps), max_steps);
  while (report.steps < target) {
    advance(x);
    const double disp = (x - next).norm();
    x.swap(next);
    ++report.steps;
    if (disp <= quit) break;
  }
  require(x.allFinite(), Errc::NonfiniteIterate, "prox_best_response: non-finite inner iterate");
  return {x, report};
}

}  // namespace gnes
