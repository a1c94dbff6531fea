#include "ecm/bounds.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ecm::bounds {
namespace {

void RequireAlpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("alpha must be a positive finite number");
  }
}

void RequireUnit(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0,1]");
  }
}

double SqrtBranch(double alpha, double r) {
  return 1.0 - std::sqrt(2.0 * alpha * r / 3.0);
}

double RationalBranch(double alpha, double r) {
  return (8.0 / 9.0) / (1.0 + 2.0 * alpha * r);
}

double Integrand(double x, double alpha, double g) { return x / (x + alpha * g); }

double MeanOfClipped(const std::vector<double>& point, double shift) {
  double sum = 0.0;
  for (double y : point) sum += std::clamp(y - shift, 0.0, 1.0);
  return sum / static_cast<double>(point.size());
}

}  // namespace

std::string_view SlopeModeName(SlopeMode mode) {
  switch (mode) {
    case SlopeMode::kUnit:
      return "unit";
    case SlopeMode::kLower:
      return "lower";
    case SlopeMode::kUpper:
      return "upper";
    case SlopeMode::kMeet:
      return "meet";
  }
  return "unknown";
}

SlopeMode ParseSlopeMode(std::string_view name) {
  for (SlopeMode mode : {SlopeMode::kUnit, SlopeMode::kLower, SlopeMode::kUpper,
                         SlopeMode::kMeet}) {
    if (SlopeModeName(mode) == name) return mode;
  }
  throw ValidationError("unknown slope mode '" + std::string(name) +
                        "' (expected unit, lower, upper or meet)");
}

double ApUpper(double alpha, double r) {
  RequireAlpha(alpha);
  RequireUnit(r, "ranking error");
  return 1.0 + alpha * std::log1p(-r / (1.0 + alpha));
}

double ApLower(double alpha, double r) {
  RequireAlpha(alpha);
  RequireUnit(r, "ranking error");
  return std::max(SqrtBranch(alpha, r), RationalBranch(alpha, r));
}

std::optional<double> BranchMeetPoint(double alpha) {
  RequireAlpha(alpha);
  // rational - sqrt, times 9(1 + 2αr), is -(1 - 3u)³ with u = sqrt(2αr/3):
  // the branches touch with a triple root, so bisect on the sign-equivalent
  // factor 3u - 1 rather than on the ill-conditioned difference itself.
  auto gap = [alpha](double r) { return 3.0 * std::sqrt(2.0 * alpha * r / 3.0) - 1.0; };
  if (gap(1.0) < -1e-12) return std::nullopt;
  double lo = 0.0;  // gap(0) = -1
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double SlopeM(double alpha, SlopeMode mode) {
  RequireAlpha(alpha);
  switch (mode) {
    case SlopeMode::kUnit:
      return 1.0;
    case SlopeMode::kLower:
      return alpha * std::log1p(1.0 / alpha);
    case SlopeMode::kUpper:
      return (1.0 / 9.0 + 2.0 * alpha) / (1.0 + 2.0 * alpha);
    case SlopeMode::kMeet:
      // Past the crossing the rational branch is the binding one at r = 1.
      if (BranchMeetPoint(alpha).has_value()) {
        return 1.0 - RationalBranch(alpha, 1.0);
      }
      return 1.0 - SqrtBranch(alpha, 1.0);
  }
  throw ValidationError("unknown slope mode");
}

BoundEnvelope Envelope(double alpha, double r, SlopeMode mode) {
  BoundEnvelope env;
  env.alpha = alpha;
  env.ranking_error = r;
  env.ap_lower = ApLower(alpha, r);
  env.ap_upper = ApUpper(alpha, r);
  env.det_lower = 1.0 - env.ap_upper;
  env.det_upper = 1.0 - env.ap_lower;
  env.slope_m = SlopeM(alpha, mode);
  env.slope_mode = mode;
  return env;
}

BinaryBoundResult BinaryBoundCheck(const metrics::ScoreSet& set, double t) {
  BinaryBoundResult result;
  result.ranking_error = metrics::RankingError(set);
  const auto pos = set.positives();
  const auto neg = set.negatives();
  const auto missed = std::count_if(pos.begin(), pos.end(),
                                    [t](double s) { return s <= t; });
  const auto false_alarms = std::count_if(neg.begin(), neg.end(),
                                          [t](double s) { return s > t; });
  result.rhs = static_cast<double>(missed) / static_cast<double>(pos.size()) +
               static_cast<double>(false_alarms) / static_cast<double>(neg.size());
  result.holds = result.ranking_error <= result.rhs + 1e-12;
  return result;
}

double ApStandardError(double ap, int64_t n_pos) {
  if (n_pos < 1) throw ValidationError("standard error needs n⁺ ≥ 1");
  const double p = std::clamp(ap, 0.0, 1.0);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n_pos));
}

double RankingStandardError(double r, int64_t n_pos, int64_t n_neg) {
  if (n_pos < 1 || n_neg < 1) {
    throw ValidationError("standard error needs n⁺ ≥ 1 and n⁻ ≥ 1");
  }
  const double auc = 1.0 - std::clamp(r, 0.0, 1.0);
  const double q1 = auc / (2.0 - auc);
  const double q2 = 2.0 * auc * auc / (1.0 + auc);
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  const double var = (auc * (1.0 - auc) + (np - 1.0) * (q1 - auc * auc) +
                      (nn - 1.0) * (q2 - auc * auc)) /
                     (np * nn);
  return std::sqrt(std::max(var, 0.0));
}

SandwichResult CheckSandwich(double alpha, double ap, double r, double se_ap,
                             double se_r, double z) {
  SandwichResult result;
  const double r_hi = std::min(1.0, r + z * se_r);
  const double r_lo = std::max(0.0, r - z * se_r);
  result.lower = ApLower(alpha, r_hi) - z * se_ap;
  result.upper = ApUpper(alpha, r_lo) + z * se_ap;
  result.within = result.lower <= ap && ap <= result.upper;
  return result;
}

double GFunction::Mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double VariationalObjective(const GFunction& g, double alpha) {
  double sum = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    sum += Integrand(g.Node(i), alpha, g.values[i]);
  }
  return sum / static_cast<double>(g.size());
}

GFunction ProjectOntoConstraints(std::vector<double> point, double tau) {
  RequireUnit(tau, "tau");
  if (point.empty()) throw ValidationError("cannot project an empty grid");
  const auto [min_it, max_it] = std::minmax_element(point.begin(), point.end());
  // MeanOfClipped is nonincreasing in the shift: 1 at lo, 0 at hi.
  double lo = *min_it - 1.0;
  double hi = *max_it;
  double shift = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    shift = 0.5 * (lo + hi);
    const double mean = MeanOfClipped(point, shift);
    if (std::abs(mean - tau) <= 1e-12) break;
    (mean > tau ? lo : hi) = shift;
  }
  GFunction g;
  g.tau = tau;
  g.values = std::move(point);
  for (double& v : g.values) v = std::clamp(v - shift, 0.0, 1.0);
  return g;
}

OracleResult VariationalMinOracle(double alpha, double tau,
                                  const MinOracleOptions& options) {
  RequireAlpha(alpha);
  RequireUnit(tau, "tau");
  if (options.grid_size < 100) throw ValidationError("grid size must be ≥ 100");
  const size_t n = static_cast<size_t>(options.grid_size);

  OracleResult result;
  result.g.tau = tau;
  result.g.values.assign(n, tau);
  if (tau == 0.0 || tau == 1.0) {
    // The constraint set is a single point.
    result.objective = VariationalObjective(result.g, alpha);
    return result;
  }

  // Gradient scaled by N: d/dg_i of N·J is -alpha·x/(x + alpha·g)².
  auto gradient = [&](const GFunction& g) {
    std::vector<double> grad(n);
    for (size_t i = 0; i < n; ++i) {
      const double x = g.Node(i);
      const double d = x + alpha * g.values[i];
      grad[i] = -alpha * x / (d * d);
    }
    return grad;
  };

  GFunction g = result.g;
  double objective = VariationalObjective(g, alpha);
  double step = 1.0;
  constexpr double kArmijo = 1e-4;
  double grad_norm = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const auto grad = gradient(g);
    grad_norm = std::sqrt(std::inner_product(grad.begin(), grad.end(),
                                             grad.begin(), 0.0) /
                          static_cast<double>(n));
    GFunction candidate;
    double candidate_objective = objective;
    double decrease = 0.0;
    step *= 2.0;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      std::vector<double> trial(n);
      for (size_t i = 0; i < n; ++i) trial[i] = g.values[i] - step * grad[i];
      candidate = ProjectOntoConstraints(std::move(trial), tau);
      candidate_objective = VariationalObjective(candidate, alpha);
      decrease = 0.0;
      for (size_t i = 0; i < n; ++i) {
        decrease += grad[i] * (candidate.values[i] - g.values[i]);
      }
      decrease /= static_cast<double>(n);
      if (candidate_objective <= objective + kArmijo * decrease) break;
      step *= 0.5;
    }
    if (!std::isfinite(candidate_objective)) {
      throw OracleConvergenceError("min oracle produced a non-finite objective",
                                   g, grad_norm);
    }
    const double change = std::abs(objective - candidate_objective);
    const bool accepted = candidate_objective <= objective;
    if (accepted) {
      g = std::move(candidate);
      objective = candidate_objective;
    }
    if (!accepted || change <= options.relative_tolerance * std::abs(objective)) {
      result.g = std::move(g);
      result.objective = objective;
      result.iterations = iter;
      return result;
    }
  }
  throw OracleConvergenceError(
      "min oracle did not converge in " + std::to_string(options.max_iterations) +
          " iterations",
      g, grad_norm);
}

OracleResult VariationalMaxOracle(double alpha, double tau, int grid_size) {
  RequireAlpha(alpha);
  RequireUnit(tau, "tau");
  if (grid_size < 100) throw ValidationError("grid size must be ≥ 100");
  const size_t n = static_cast<size_t>(grid_size);

  OracleResult result;
  GFunction& g = result.g;
  g.tau = tau;
  g.values.assign(n, 0.0);
  // Fill from the top bin down; the last bin touched takes the remainder.
  double mass = tau * static_cast<double>(n);
  for (size_t k = n; k-- > 0 && mass > 0.0;) {
    g.values[k] = std::min(1.0, mass);
    mass -= g.values[k];
  }

  const double delta = 1.0 / static_cast<double>(n);
  std::vector<double> donor_gain(n, -INFINITY);
  std::vector<double> receiver_gain(n, -INFINITY);
  for (size_t i = 0; i < n; ++i) {
    const double x = g.Node(i);
    const double base = Integrand(x, alpha, g.values[i]);
    if (g.values[i] >= delta) {
      donor_gain[i] = Integrand(x, alpha, g.values[i] - delta) - base;
    }
    if (g.values[i] <= 1.0 - delta) {
      receiver_gain[i] = Integrand(x, alpha, g.values[i] + delta) - base;
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(donor_gain[i])) continue;
    for (size_t j = 0; j < n; ++j) {
      if (i == j || !std::isfinite(receiver_gain[j])) continue;
      const double gain = (donor_gain[i] + receiver_gain[j]) / static_cast<double>(n);
      if (gain > 1e-15) {
        throw PerturbationError("moving mass from bin " + std::to_string(i) +
                                    " to bin " + std::to_string(j) +
                                    " raises the objective by " +
                                    std::to_string(gain),
                                i, j, gain);
      }
    }
  }
  result.objective = VariationalObjective(g, alpha);
  return result;
}

bool LowerBoundMinimizerFeasible(double alpha, double tau) {
  RequireAlpha(alpha);
  RequireUnit(tau, "tau");
  const double u = alpha * tau;
  double peak = 0.0;  // max over x of alpha·g(x)
  if (u < 1.0 / 6.0) {
    // alpha·g(x) = sqrt(kappa·x) - x on [0, kappa], kappa = sqrt(6u).
    peak = std::sqrt(6.0 * u) / 4.0;
  } else {
    // alpha·g(x) = c·sqrt(x) - x on [0, 1], c = (3/2)(u + 1/2).
    const double c = 1.5 * (u + 0.5);
    peak = c >= 2.0 ? c - 1.0 : c * c / 4.0;
  }
  return peak / alpha <= 1.0;
}

}  // namespace ecm::bounds
