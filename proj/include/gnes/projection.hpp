#pragma once

#include "gnes/types.hpp"

namespace gnes {

/// Componentwise clamp onto [lo, hi].
Vec project_box(const Vec& y, const Vec& lo, const Vec& hi);

/// Euclidean projection onto {z in [lo,hi] | 1^T z = level}, by bisection
/// on the scalar multiplier of the hyperplane. Sum-constraint tolerance
/// 1e-12, 100-iteration cap.
Vec project_box_hyperplane(const Vec& y, const Vec& lo, const Vec& hi, double level);

/// Componentwise max(y, 0).
Vec project_nonneg(const Vec& y);

}  // namespace gnes
