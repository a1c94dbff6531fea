#include "ecm/ecm_loss.h"

#include <cmath>

#include "ecm/errors.h"

namespace ecm::loss {
namespace {

double StableSigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void RequireFinite(double f) {
  if (!std::isfinite(f)) throw ValidationError("logit must be finite");
}

void RequireScale(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw ValidationError("loss scale m must be positive and finite");
  }
}

// The score depends only on w⁻/w⁺, so any positive pair is accepted here.
void RequirePositiveWeights(const margins::MarginWeights& w) {
  if (!(w.w_plus > 0.0) || !(w.w_minus > 0.0) || !std::isfinite(w.w_plus) ||
      !std::isfinite(w.w_minus)) {
    throw ValidationError("margin weights must be positive and finite");
  }
}

// Argument of the plain logistic that yields ŝ.
double SurrogateArgument(double f, const margins::MarginWeights& w) {
  return 2.0 * f - std::log(w.w_minus / w.w_plus);
}

}  // namespace

double Sigmoid(double f) {
  RequireFinite(f);
  return StableSigmoid(2.0 * f);
}

double SurrogateScore(double f, const margins::MarginWeights& w) {
  RequireFinite(f);
  RequirePositiveWeights(w);
  return StableSigmoid(SurrogateArgument(f, w));
}

double DecisionLogit(const margins::MarginWeights& w) {
  RequirePositiveWeights(w);
  return 0.5 * (std::log(w.w_minus) - std::log(w.w_plus));
}

LossEval EcmLoss(double f, Label label, const margins::MarginWeights& w,
                 double m) {
  RequireFinite(f);
  RequireScale(m);
  margins::Validate(w);
  const double z = SurrogateArgument(f, w);
  if (label == Label::kPositive) {
    return {m * Softplus(-z), -2.0 * m * StableSigmoid(-z)};
  }
  return {m * Softplus(z), 2.0 * m * StableSigmoid(z)};
}

LossEval FocalEcmLoss(double f, Label label, const margins::MarginWeights& w,
                      double m, const FocalParams& focal) {
  RequireFinite(f);
  RequireScale(m);
  margins::Validate(w);
  if (!(focal.gamma >= 0.0) || !std::isfinite(focal.gamma)) {
    throw ValidationError("focal gamma must be finite and ≥ 0");
  }
  if (!(focal.alpha > 0.0 && focal.alpha < 1.0)) {
    throw ValidationError("focal alpha must lie in (0,1)");
  }
  const double z = SurrogateArgument(f, w);
  const double p = StableSigmoid(z);   // ŝ
  const double q = StableSigmoid(-z);  // 1 - ŝ
  // d/dz of weight·softplus is expanded by hand so that gamma < 1 never
  // evaluates q^(gamma-1) at q = 0.
  if (label == Label::kPositive) {
    const double base = Softplus(-z);
    const double mod = std::pow(q, focal.gamma);
    const double scale = focal.alpha * m;
    return {scale * mod * base,
            -2.0 * scale * mod * (focal.gamma * p * base + q)};
  }
  const double base = Softplus(z);
  const double mod = std::pow(p, focal.gamma);
  const double scale = (1.0 - focal.alpha) * m;
  return {scale * mod * base, 2.0 * scale * mod * (focal.gamma * q * base + p)};
}

LossEval BceLoss(double f, Label label) {
  return EcmLoss(f, label, margins::MarginWeights{2.0, 2.0}, 1.0);
}

int MarginError(double score, double gamma, Label side) {
  if (side == Label::kPositive) return score <= gamma ? 1 : 0;
  return (1.0 - score) <= gamma ? 1 : 0;
}

}  // namespace ecm::loss
