#include "ecm/margins.h"

#include <cassert>
#include <cmath>

#include "ecm/errors.h"

namespace ecm::margins {
namespace {

constexpr double kSumTolerance = 1e-12;

void RequireCounts(const priors::ClassStats& stats) {
  if (stats.n_plus < 1 || stats.n_minus < 1) {
    throw ValidationError("margins need n⁺ ≥ 1 and n⁻ ≥ 1");
  }
}

}  // namespace

Margins OptimalMargins(const priors::ClassStats& stats) {
  RequireCounts(stats);
  // Working with the ratio makes the result depend on n⁺/n⁻ only, so scaling
  // both counts by the same integer leaves it bit-identical.
  const double ratio =
      static_cast<double>(stats.n_plus) / static_cast<double>(stats.n_minus);
  const double root = std::sqrt(std::sqrt(ratio));  // (n⁺/n⁻)^¼
  Margins m;
  m.gamma_plus = 1.0 / (1.0 + root);
  m.gamma_minus = root / (1.0 + root);
  // Positive counts always land strictly inside (0,1); no clamping needed.
  assert(m.gamma_plus > 0.0 && m.gamma_plus < 1.0);
  return m;
}

double MarginObjective(double gamma_plus, const priors::ClassStats& stats) {
  RequireCounts(stats);
  if (!(gamma_plus > 0.0 && gamma_plus < 1.0)) {
    throw ValidationError("gamma_plus must lie strictly inside (0,1)");
  }
  return 1.0 / (gamma_plus * std::sqrt(static_cast<double>(stats.n_plus))) +
         1.0 / ((1.0 - gamma_plus) * std::sqrt(static_cast<double>(stats.n_minus)));
}

Margins MarginsGridOracle(const priors::ClassStats& stats, double step) {
  RequireCounts(stats);
  if (!(step > 0.0 && step <= 1e-2)) {
    throw ValidationError("grid step must lie in (0, 0.01]");
  }
  double best_gamma = step;
  double best_value = MarginObjective(step, stats);
  for (long k = 2;; ++k) {
    const double gamma = static_cast<double>(k) * step;
    if (gamma > 1.0 - step + 1e-12 || gamma >= 1.0) break;
    const double value = MarginObjective(gamma, stats);
    if (value < best_value) {
      best_value = value;
      best_gamma = gamma;
    }
  }
  return {best_gamma, 1.0 - best_gamma};
}

MarginWeights Weights(const Margins& m) {
  Validate(m);
  return {1.0 / m.gamma_plus, 1.0 / m.gamma_minus};
}

void Validate(const Margins& m) {
  if (!(m.gamma_plus > 0.0 && m.gamma_plus < 1.0 && m.gamma_minus > 0.0 &&
        m.gamma_minus < 1.0)) {
    throw ValidationError("margins must lie strictly inside (0,1)");
  }
  if (std::abs(m.gamma_plus + m.gamma_minus - 1.0) > kSumTolerance) {
    throw ValidationError("margins must sum to one");
  }
}

void Validate(const MarginWeights& w) {
  if (!(std::isfinite(w.w_plus) && std::isfinite(w.w_minus) && w.w_plus > 1.0 &&
        w.w_minus > 1.0)) {
    throw ValidationError("margin weights must be finite and > 1");
  }
  if (std::abs(1.0 / w.w_plus + 1.0 / w.w_minus - 1.0) > kSumTolerance) {
    throw ValidationError("reciprocal margin weights must sum to one");
  }
}

}  // namespace ecm::margins
