#ifndef ECM_ECM_LOSS_H_
#define ECM_ECM_LOSS_H_

#include "ecm/margins.h"

namespace ecm::loss {

enum class Label { kPositive, kNegative };

// Loss value and its derivative with respect to the logit f.
struct LossEval {
  double value = 0.0;
  double grad_logit = 0.0;
};

struct FocalParams {
  double gamma = 2.0;
  double alpha = 0.25;
};

// Plain two-sided sigmoid e^f / (e^f + e^-f) = σ(2f).
double Sigmoid(double f);

// ŝ = w⁺e^f / (w⁺e^f + w⁻e^-f) = σ(2f - ln(w⁻/w⁺)).
double SurrogateScore(double f, const margins::MarginWeights& w);

// The logit where ŝ = 1/2: ½(ln w⁻ - ln w⁺).
double DecisionLogit(const margins::MarginWeights& w);

// Binary cross entropy on ŝ, scaled by m:
//   positive: m·softplus(ln(w⁻/w⁺) - 2f), gradient -2m(1 - ŝ)
//   negative: m·softplus(2f - ln(w⁻/w⁺)), gradient  2m·ŝ
LossEval EcmLoss(double f, Label label, const margins::MarginWeights& w,
                 double m = 1.0);

// EcmLoss modulated by focal weights: focal.alpha·(1 - ŝ)^gamma on positives,
// (1 - focal.alpha)·ŝ^gamma on negatives.
LossEval FocalEcmLoss(double f, Label label, const margins::MarginWeights& w,
                      double m = 1.0, const FocalParams& focal = {});

// EcmLoss with equal weights and m = 1.
LossEval BceLoss(double f, Label label);

// 1 when the sample violates its margin: s ≤ gamma⁺ for positives,
// 1 - s ≤ gamma⁻ for negatives.
int MarginError(double score, double gamma, Label side);

}  // namespace ecm::loss

#endif  // ECM_ECM_LOSS_H_
