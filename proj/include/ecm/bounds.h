#ifndef ECM_BOUNDS_H_
#define ECM_BOUNDS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecm/errors.h"
#include "ecm/metrics.h"

namespace ecm::bounds {

// Which linear coefficient m relates detection error (1 - AP) to ranking
// error: L ≈ m·R.
enum class SlopeMode { kUnit, kLower, kUpper, kMeet };

std::string_view SlopeModeName(SlopeMode mode);
// Throws ValidationError for unknown names.
SlopeMode ParseSlopeMode(std::string_view name);

// Largest AP achievable at ranking error r: 1 + alpha·ln(1 - r/(1+alpha)).
double ApUpper(double alpha, double r);

// Smallest AP achievable at ranking error r:
// max(1 - sqrt(2·alpha·r/3), (8/9)/(1 + 2·alpha·r)).
double ApLower(double alpha, double r);

// Ranking error at which the two branches of ApLower cross, found by
// bisection on (0, 1]. Empty when they do not cross inside the interval
// (alpha < 1/6). Analytically the crossing is alpha·r = 1/6 with AP = 2/3.
std::optional<double> BranchMeetPoint(double alpha);

// unit: 1. lower: alpha·ln((1+alpha)/alpha), the chord of the detection-error
// lower bound at r = 1. upper: (1/9 + 2·alpha)/(1 + 2·alpha), the chord of the
// rational branch at r = 1. meet: the chord of the tight detection-error upper
// envelope (the smaller branch) at r = 1; the branch is selected by
// BranchMeetPoint.
double SlopeM(double alpha, SlopeMode mode);

struct BoundEnvelope {
  double alpha = 0.0;
  double ranking_error = 0.0;
  double ap_lower = 0.0;
  double ap_upper = 0.0;
  double det_lower = 0.0;  // 1 - ap_upper
  double det_upper = 0.0;  // 1 - ap_lower
  double slope_m = 0.0;
  SlopeMode slope_mode = SlopeMode::kUpper;
};

BoundEnvelope Envelope(double alpha, double r,
                       SlopeMode mode = SlopeMode::kUpper);

struct BinaryBoundResult {
  double rhs = 0.0;
  double ranking_error = 0.0;
  bool holds = false;
};

// rhs = P̂(s⁺ ≤ t) + P̂(s⁻ > t), checked against the half-credit ranking
// error.
BinaryBoundResult BinaryBoundCheck(const metrics::ScoreSet& set, double t);

// Finite-sample standard errors used to pad bound comparisons.
// AP is a mean of [0,1] values, so its variance is at most ap·(1-ap)/n⁺.
double ApStandardError(double ap, int64_t n_pos);
// Hanley–McNeil standard error of the AUC, applied to r = 1 - AUC.
double RankingStandardError(double r, int64_t n_pos, int64_t n_neg);

struct SandwichResult {
  double lower = 0.0;  // ApLower at r + z·se_r, minus z·se_ap
  double upper = 0.0;  // ApUpper at r - z·se_r, plus z·se_ap
  bool within = false;
};

// Checks that an estimated (ap, r) pair lies inside the bound envelope once
// both estimates are widened by z standard errors.
SandwichResult CheckSandwich(double alpha, double ap, double r, double se_ap,
                             double se_r, double z = 3.0);

// Discretized g(β) on N midpoint bins of [0, 1] with mean tau.
struct GFunction {
  std::vector<double> values;
  double tau = 0.0;

  size_t size() const { return values.size(); }
  double Mean() const;
  // Midpoint of bin i.
  double Node(size_t i) const {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(values.size());
  }
};

// Midpoint-rule value of ∫₀¹ x / (x + alpha·g(x)) dx.
double VariationalObjective(const GFunction& g, double alpha);

// Euclidean projection of `point` onto {0 ≤ g ≤ 1, mean(g) = tau}, via
// bisection on a scalar shift. Mean is matched to 1e-12.
GFunction ProjectOntoConstraints(std::vector<double> point, double tau);

struct OracleResult {
  double objective = 0.0;
  GFunction g;
  int iterations = 0;
};

struct MinOracleOptions {
  int grid_size = 2000;
  int max_iterations = 100000;
  double relative_tolerance = 1e-10;
};

// Minimizes the variational objective subject to the box and mean
// constraints by projected gradient descent with Armijo backtracking.
OracleResult VariationalMinOracle(double alpha, double tau,
                                  const MinOracleOptions& options = {});

// Builds the bang-bang function (g = 1 on the top tau of [0, 1], 0 below, one
// fractional boundary bin), then checks that moving 1/N of mass between any
// donor/receiver bin pair does not raise the objective.
OracleResult VariationalMaxOracle(double alpha, double tau, int grid_size = 2000);

// Closed-form minimizer of the unboxed problem; true when it stays within
// g ≤ 1 so the closed-form lower bound is attained by a feasible g.
bool LowerBoundMinimizerFeasible(double alpha, double tau);

class OracleConvergenceError : public NumericalError {
 public:
  OracleConvergenceError(const std::string& what, GFunction last_iterate,
                         double gradient_norm)
      : NumericalError(what),
        last_iterate(std::move(last_iterate)),
        gradient_norm(gradient_norm) {}
  GFunction last_iterate;
  double gradient_norm;
};

class PerturbationError : public NumericalError {
 public:
  PerturbationError(const std::string& what, size_t donor, size_t receiver,
                    double gain)
      : NumericalError(what), donor(donor), receiver(receiver), gain(gain) {}
  size_t donor;
  size_t receiver;
  double gain;
};

}  // namespace ecm::bounds

#endif  // ECM_BOUNDS_H_
