#include "gnes/ppa.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace gnes {

Schedule Schedule::overrelax(double gamma) {
  Schedule s;
  s.kind = Kind::Overrelax;
  s.gamma = gamma;
  s.validate();
  return s;
}

Schedule Schedule::inertia(double zeta) {
  Schedule s;
  s.kind = Kind::Inertia;
  s.zeta = zeta;
  s.validate();
  return s;
}

Schedule Schedule::alternated_inertia(double eta) {
  Schedule s;
  s.kind = Kind::AlternatedInertia;
  s.eta = eta;
  s.validate();
  return s;
}

void Schedule::validate() const {
  switch (kind) {
    case Kind::Plain:
      break;
    case Kind::Overrelax:
      require(gamma >= 1.0 && gamma < 2.0, Errc::ScheduleOutOfRange, "overrelaxation needs gamma in [1,2)");
      break;
    case Kind::Inertia:
      require(zeta >= 0.0 && zeta < 1.0 / 3.0, Errc::ScheduleOutOfRange,
              "inertia needs zeta in [0,1/3)");
      break;
    case Kind::AlternatedInertia:
      require(eta >= 0.0 && eta <= 1.0, Errc::ScheduleOutOfRange,
              "alternated inertia needs eta in [0,1]");
      break;
  }
}

double Schedule::inertia_weight(int k) const {
  if (kind == Kind::Inertia) return zeta;
  if (kind == Kind::AlternatedInertia) return k % 2 == 1 ? eta : 0.0;
  return 0.0;
}

double Schedule::relaxation() const { return kind == Kind::Overrelax ? gamma : 1.0; }

Vec km_step(const Vec& omega, const Vec& u, double gamma) {
  require(gamma >= 0.0 && gamma <= 2.0, Errc::GammaOutOfRange, "km_step: gamma must be in [0,2]");
  if (gamma == 1.0) return u;
  if (gamma == 0.0) return omega;
  return omega + gamma * (u - omega);
}

EngineResult run(const ResolventOracle& oracle, const Vec& omega0, const Schedule& schedule,
                 const StopRule& stop, const StepObserver& observer) {
  schedule.validate();
  EngineResult result;
  result.omega = omega0;
  Vec prev = omega0;  // omega^{k-1}, initialized equal to omega^0
  double last_disp = 0.0;
  int growth_streak = 0;

  for (int k = 0; k < stop.max_iters; ++k) {
    const double w = schedule.inertia_weight(k);
    // w = 0 must reproduce the plain iteration bit-for-bit, so skip the
    // extrapolation arithmetic entirely.
    const Vec tilde = w == 0.0 ? result.omega : Vec(result.omega + w * (result.omega - prev));
    StepResult sr = oracle(tilde, k);
    require(sr.u.allFinite(), Errc::OracleFailure, "resolvent produced a non-finite point");
    const double gamma = schedule.relaxation();
    Vec next = km_step(tilde, sr.u, gamma);
    const double fp_res = (sr.u - tilde).norm();

    TraceRow row;
    row.k = k;
    row.fp_res = fp_res;
    row.err_bound = sr.err_bound;
    row.gamma = gamma;
    row.inner_max = sr.inner_max;
    row.inner_mean = sr.inner_mean;
    row.comms = sr.comms;
    result.rows.push_back(row);

    if (observer) observer(k, result.omega, tilde, sr, gamma, next);

    const double disp = (next - result.omega).norm();
    prev = result.omega;
    result.omega = std::move(next);
    result.iterations = k + 1;

    if (schedule.kind == Schedule::Kind::Inertia ||
        schedule.kind == Schedule::Kind::AlternatedInertia) {
      growth_streak = disp > last_disp ? growth_streak + 1 : 0;
      require(growth_streak < 100, Errc::OracleFailure,
              "inertial iteration diverging: displacement grew 100 iterations in a row");
      last_disp = disp;
    }

    if (fp_res <= stop.tol || (stop.extra && stop.extra(k, result.omega))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FejerReport fejer_check(const std::vector<Vec>& iterates, const std::vector<double>& gammas,
                        const std::vector<double>& err_bounds, const Vec& reference, const Mat* P,
                        double slack) {
  require(iterates.size() >= 2, Errc::TooShort, "fejer_check needs at least two iterates");
  require(gammas.size() + 1 >= iterates.size() && err_bounds.size() + 1 >= iterates.size(),
          Errc::DimensionMismatch, "fejer_check: one (gamma, err) pair per step");

  double sqrt_lmax = 1.0;
  auto dist = [&](const Vec& a) {
    const Vec d = a - reference;
    return P ? std::sqrt(d.dot(*P * d)) : d.norm();
  };
  if (P) {
    Eigen::SelfAdjointEigenSolver<Mat> es(*P, Eigen::EigenvaluesOnly);
    sqrt_lmax = std::sqrt(es.eigenvalues().maxCoeff());
  }

  FejerReport report;
  double d_prev = dist(iterates[0]);
  for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
    const double d_next = dist(iterates[k + 1]);
    const double budget = d_prev + gammas[k] * sqrt_lmax * err_bounds[k] + slack;
    const double margin = budget - d_next;
    if (margin < report.worst_slack) report.worst_slack = margin;
    if (margin < 0.0 && report.ok) {
      report.ok = false;
      report.first_violation = static_cast<int>(k);
    }
    d_prev = d_next;
  }
  return report;
}

ResidualRate residual_rate(const std::vector<double>& displacements) {
  require(displacements.size() >= 10, Errc::TooShort, "residual_rate needs >= 10 iterations");
  ResidualRate out;
  out.r.reserve(displacements.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < displacements.size(); ++k) {
    sum += displacements[k] * displacements[k];
    const double rk = sum / static_cast<double>(k + 1);
    out.r.push_back(rk);
    out.C = std::max(out.C, rk * static_cast<double>(k + 1));
  }
  return out;
}

Vec solve_pseudomonotone_vi(const std::function<Vec(const Vec&)>& psi, const LocalSet& set,
                            const Vec& omega0, double tol, double inner_step, int max_outer) {
  require(tol > 0.0 && inner_step > 0.0, Errc::NonpositiveInput,
          "solve_pseudomonotone_vi: tol and inner_step must be positive");
  Vec omega = set.project(omega0);
  for (int k = 1; k <= max_outer; ++k) {
    const double inner_tol = std::min(tol, 1.0 / (static_cast<double>(k) * k)) / 10.0;
    // Strongly monotone inner VI(psi + Id - omega^k, S) by projected gradient.
    Vec y = omega;
    bool inner_ok = false;
    for (int j = 0; j < 100000; ++j) {
      const Vec g = psi(y) + y - omega;
      Vec next = set.project(y - inner_step * g);
      require(next.allFinite(), Errc::InnerSolveFailure,
              "solve_pseudomonotone_vi: non-finite inner iterate");
      const double res = (y - next).norm();
      y = std::move(next);
      if (res <= inner_tol) {
        inner_ok = true;
        break;
      }
    }
    require(inner_ok, Errc::InnerSolveFailure, "solve_pseudomonotone_vi: inner loop stalled");
    const double step_norm = (y - omega).norm();
    omega = std::move(y);
    if (step_norm <= tol) return omega;
  }
  fail(Errc::InnerSolveFailure, "solve_pseudomonotone_vi: outer loop hit iteration cap");
}

}  // namespace gnes
