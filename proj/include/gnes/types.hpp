#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gnes {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Errc {
  NotSymmetric,
  NegativeWeight,
  Disconnected,
  DimensionMismatch,
  NegativeMultiplier,
  NotStronglyMonotone,
  MissingConstants,
  NonpositiveInput,
  StepPlanIncomplete,
  BadBounds,
  Infeasible,
  NonfiniteIterate,
  GammaOutOfRange,
  ScheduleOutOfRange,
  OracleFailure,
  TooShort,
  InnerSolveFailure,
  CouplingPresent,
  MissingEdgeVariable,
  AlphaTooLarge,
  ToleranceNotReached,
  DegenerateDraw,
  BadConfig,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// Counter-style 64-bit generator (splitmix64). Deterministic across
/// platforms; all experiment draws go through this, in documented order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace gnes
