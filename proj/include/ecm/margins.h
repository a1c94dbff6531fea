#ifndef ECM_MARGINS_H_
#define ECM_MARGINS_H_

#include "ecm/priors.h"

namespace ecm::margins {

// Complementary score thresholds for the positive and negative side of one
// class; gamma_plus + gamma_minus = 1.
struct Margins {
  double gamma_plus = 0.5;
  double gamma_minus = 0.5;
};

// Reciprocal margins, the parameters of the surrogate score.
struct MarginWeights {
  double w_plus = 2.0;
  double w_minus = 2.0;
};

// gamma⁺ = n⁻^¼ / (n⁺^¼ + n⁻^¼), gamma⁻ = n⁺^¼ / (n⁺^¼ + n⁻^¼).
Margins OptimalMargins(const priors::ClassStats& stats);

// (1/gamma⁺)·n⁺^-½ + (1/(1-gamma⁺))·n⁻^-½, the count-dependent part of the
// margin generalization bound.
double MarginObjective(double gamma_plus, const priors::ClassStats& stats);

// Brute-force argmin of MarginObjective over {step, 2·step, ..., 1 - step}.
Margins MarginsGridOracle(const priors::ClassStats& stats, double step);

MarginWeights Weights(const Margins& m);

// Throws ValidationError unless both margins lie in (0,1) and sum to one.
void Validate(const Margins& m);
// Throws ValidationError unless both weights are finite, > 1, and their
// reciprocals sum to one.
void Validate(const MarginWeights& w);

}  // namespace ecm::margins

#endif  // ECM_MARGINS_H_
