#pragma once

#include "gnes/game.hpp"
#include "gnes/projection.hpp"

#include <functional>
#include <utility>

namespace gnes {

struct InnerSolveReport {
  int steps = 0;          // projected-gradient steps taken
  double eps = 0.0;       // requested guaranteed accuracy
  double first_step = 0.0;  // ||x^0 - x^1||, drives the step-count rule
  double rho = 0.0;       // contraction factor used
};

/// Accuracy used by "exact" mode, together with its step cap.
inline constexpr double kExactEps = 1e-12;
inline constexpr int kExactStepCap = 100000;

/// Projected gradient on a strongly convex objective, warm-started at
/// `warm`, fixed step `step`, contraction factor `rho` per iteration in
/// distance to the minimizer. Stops once either
///   j >= log(eps (1-rho) / ||x^0 - x^1||) / log(rho)
/// or the last displacement satisfies ||x^j - x^{j+1}|| <= eps (1-rho),
/// both of which certify ||x - argmin|| <= eps. Always takes at least one
/// step.
std::pair<Vec, InnerSolveReport> prox_best_response(const std::function<Vec(const Vec&)>& grad,
                                                    const LocalSet& set, const Vec& warm,
                                                    double step, double rho, double eps,
                                                    int max_steps = kExactStepCap);

/// Same scheme for affine gradients grad(y) = c0 + H y, with preallocated
/// buffers and in-place box clamping (the hot path of the linear-gradient
/// games, where the generic closure dispatch dominates the runtime).
std::pair<Vec, InnerSolveReport> prox_best_response_linear(const Mat& H, const Vec& c0,
                                                           const LocalSet& set, const Vec& warm,
                                                           double step, double rho, double eps,
                                                           int max_steps = kExactStepCap);

}  // namespace gnes
