#include "gnes/projection.hpp"

#include <cmath>

namespace gnes {

Vec project_box(const Vec& y, const Vec& lo, const Vec& hi) {
  require(y.size() == lo.size() && y.size() == hi.size(), Errc::DimensionMismatch,
          "project_box: size mismatch");
  require((lo.array() <= hi.array()).all(), Errc::BadBounds, "project_box: lo > hi");
  return y.cwiseMax(lo).cwiseMin(hi);
}

Vec project_box_hyperplane(const Vec& y, const Vec& lo, const Vec& hi, double level) {
  require(y.size() == lo.size() && y.size() == hi.size(), Errc::DimensionMismatch,
          "project_box_hyperplane: size mismatch");
  require((lo.array() <= hi.array()).all(), Errc::BadBounds, "project_box_hyperplane: lo > hi");
  require(lo.sum() <= level + 1e-12 && level <= hi.sum() + 1e-12, Errc::Infeasible,
          "project_box_hyperplane: level outside [sum lo, sum hi]");

  // z(t) = clamp(y - t, lo, hi); 1^T z(t) is nonincreasing in t.
  auto clipped_sum = [&](double t) { return (y.array() - t).max(lo.array()).min(hi.array()).sum(); };

  double t_lo = (y - hi).minCoeff();  // sum = hi.sum() >= level
  double t_hi = (y - lo).maxCoeff();  // sum = lo.sum() <= level
  for (int it = 0; it < 100; ++it) {
    const double t = 0.5 * (t_lo + t_hi);
    const double s = clipped_sum(t);
    if (std::abs(s - level) <= 1e-12) {
      return (y.array() - t).max(lo.array()).min(hi.array()).matrix();
    }
    if (s > level)
      t_lo = t;
    else
      t_hi = t;
  }
  const double t = 0.5 * (t_lo + t_hi);
  Vec z = (y.array() - t).max(lo.array()).min(hi.array()).matrix();
  require(std::abs(z.sum() - level) <= 1e-9, Errc::Infeasible,
          "project_box_hyperplane: bisection did not reach the sum constraint");
  return z;
}

Vec project_nonneg(const Vec& y) { return y.cwiseMax(0.0); }

}  // namespace gnes
