#ifndef ECM_SANDBOX_H_
#define ECM_SANDBOX_H_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ecm/bounds.h"
#include "ecm/ecm_loss.h"
#include "ecm/margins.h"
#include "ecm/priors.h"

namespace ecm::sandbox {

// Long-tailed Gaussian-blob data: class c gets a share ∝ (c+1)^-zipf_exponent
// of the foreground samples; background fills background_fraction of N.
struct SyntheticConfig {
  int num_classes = 20;
  int64_t total_samples = 20000;
  double zipf_exponent = 1.5;
  int feature_dim = 16;
  double class_separation = 2.0;
  double noise_sigma = 1.0;
  double background_fraction = 0.5;
  // Standard deviation of the background blob around the origin.
  double background_sigma = 1.5;
  uint64_t seed = 0;
};

struct Dataset {
  Eigen::MatrixXd features;  // N × d
  std::vector<int> labels;   // 0..K-1, or K for background
  int num_classes = 0;

  int background_label() const { return num_classes; }
  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  std::vector<int64_t> ClassCounts() const;
  int64_t BackgroundCount() const;
};

// Apportions `total` over `weights` by the largest-remainder rule; ties in the
// fractional part go to the lower index.
std::vector<int64_t> LargestRemainderCounts(std::span<const double> weights,
                                            int64_t total);

// Per-class foreground counts implied by the config.
std::vector<int64_t> ZipfClassCounts(const SyntheticConfig& config);

// Class means sit at distance class_separation from the origin along ±axis
// directions (random unit directions once K > 2d). `stream` selects an
// independent sample draw over the same geometry (0 = train, 1 = held out).
Dataset Generate(const SyntheticConfig& config, uint64_t stream = 0);

// Background-to-foreground ratio over the first `num_batches` shuffled
// mini-batches.
double MeasureBackgroundRatio(const Dataset& data, int batch_size,
                              int num_batches, uint64_t seed);

// Per-class stats using the measured background ratio: n⁺ = n_c,
// n⁻ = Σ n + n_bg - n_c with n_bg = round(ratio·Σ n).
std::vector<priors::ClassStats> SandboxClassStats(const Dataset& data,
                                                  double background_ratio);

enum class LossKind { kBce, kEcm, kFocalEcm };
enum class ModelKind { kLinear, kMlp };
enum class EvalSplit { kTrain, kHoldout };

std::string_view LossKindName(LossKind kind);
LossKind ParseLossKind(std::string_view name);

struct TrainConfig {
  LossKind loss = LossKind::kEcm;
  bounds::SlopeMode m_mode = bounds::SlopeMode::kUnit;
  int epochs = 30;
  double learning_rate = 0.1;
  int batch_size = 128;
  ModelKind model = ModelKind::kLinear;
  int hidden = 32;
  // Cosine classifier scaled by `temperature`.
  bool temperature_head = false;
  double temperature = 20.0;
  // Learn a per-class logit offset. Without it the ECM margin shift cannot be
  // absorbed into the head, so ECM and BCE train genuinely different scorers.
  bool use_head_bias = true;
  loss::FocalParams focal;
  // Snapshot every k epochs (0 = final model only).
  int checkpoint_every = 0;
  EvalSplit eval_split = EvalSplit::kTrain;
  int background_batches = 100;
  uint64_t seed = 7;
};

// Per-class binary heads over an optional shared ReLU layer.
struct Model {
  ModelKind kind = ModelKind::kLinear;
  Eigen::MatrixXd hidden_weights;  // h × d (MLP only)
  Eigen::VectorXd hidden_bias;     // h
  Eigen::MatrixXd head_weights;    // K × (d or h)
  Eigen::VectorXd head_bias;       // K
  bool temperature_head = false;
  double temperature = 20.0;
  bool use_head_bias = true;

  // N × K logits.
  Eigen::MatrixXd Logits(const Eigen::MatrixXd& features) const;
  bool operator==(const Model& other) const;
};

struct LossPoint {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  Model initial;
  Model model;
  std::vector<Model> checkpoints;  // includes the final model
  std::vector<int> checkpoint_epochs;
  std::vector<LossPoint> loss_curve;
};

// Per-class loss parameters: margin weights and detection weight m.
struct ClassLossParams {
  margins::MarginWeights weights;
  double m = 1.0;
};

// Mini-batch gradient descent on the summed per-class binary losses. Throws
// NumericalError if the loss becomes non-finite.
TrainResult Train(const Dataset& data, const TrainConfig& config,
                  std::span<const ClassLossParams> params);

struct ClassReport {
  int class_id = 0;
  bool present = true;
  int64_t n_plus = 0;
  int64_t n_minus = 0;
  double alpha = 0.0;
  double ap = 0.0;
  double ranking_error = 0.0;
  double det_error = 0.0;
  double ap_lower = 0.0;
  double ap_upper = 0.0;
  bool within_bounds = false;
};

struct TrainReport {
  std::vector<ClassReport> per_class;
  double mean_ap = 0.0;  // unweighted over present classes
  std::vector<LossPoint> loss_curve;
};

// Scores every sample with σ(2f) and evaluates each class against all other
// samples, background included.
TrainReport Evaluate(const Model& model, const Dataset& data,
                     std::span<const double> alphas);

struct AuditFailure {
  int class_id = 0;
  double ap = 0.0;
  double ranking_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct AuditResult {
  bool passed = true;
  std::vector<AuditFailure> failures;
};

// Checks every present class against the AP bounds at its ranking error,
// with both estimates widened by 3 finite-sample standard errors.
AuditResult BoundAudit(const TrainReport& report);

// Mean AP over the rarest third of classes (by training count, at least one).
double RareTercileMeanAp(const TrainReport& report,
                         std::span<const int64_t> class_counts);

struct ExperimentResult {
  TrainReport report;
  std::vector<TrainReport> checkpoint_reports;
  std::vector<int> checkpoint_epochs;
  std::vector<priors::ClassStats> stats;
  std::vector<int64_t> class_counts;
  double measured_background_ratio = 0.0;
};

// generate → measure background → margins → train → evaluate.
ExperimentResult RunExperiment(const SyntheticConfig& data_config,
                               const TrainConfig& train_config);

}  // namespace ecm::sandbox

#endif  // ECM_SANDBOX_H_
