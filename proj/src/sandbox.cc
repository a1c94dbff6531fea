#include "ecm/sandbox.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ecm/errors.h"
#include "ecm/metrics.h"
#include "ecm/random.h"

namespace ecm::sandbox {
namespace {

constexpr double kNormEps = 1e-12;

void ValidateConfig(const SyntheticConfig& c) {
  if (c.num_classes < 2) throw ValidationError("num_classes must be ≥ 2");
  if (c.total_samples < 1) throw ValidationError("total_samples must be ≥ 1");
  if (!(c.zipf_exponent >= 0.0) || !std::isfinite(c.zipf_exponent)) {
    throw ValidationError("zipf_exponent must be finite and ≥ 0");
  }
  if (c.feature_dim < 2) throw ValidationError("feature_dim must be ≥ 2");
  if (!(c.class_separation > 0.0)) {
    throw ValidationError("class_separation must be positive");
  }
  if (!(c.noise_sigma > 0.0)) throw ValidationError("noise_sigma must be positive");
  if (!(c.background_sigma > 0.0)) {
    throw ValidationError("background_sigma must be positive");
  }
  if (!(c.background_fraction >= 0.0 && c.background_fraction < 1.0)) {
    throw ValidationError("background_fraction must lie in [0,1)");
  }
}

int64_t ForegroundTotal(const SyntheticConfig& c) {
  return std::llround(static_cast<double>(c.total_samples) *
                      (1.0 - c.background_fraction));
}

Eigen::MatrixXd ClassMeans(const SyntheticConfig& c) {
  const int k = c.num_classes;
  const int d = c.feature_dim;
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, d);
  if (k <= 2 * d) {
    for (int cls = 0; cls < k; ++cls) {
      means(cls, cls / 2) = (cls % 2 == 0 ? 1.0 : -1.0) * c.class_separation;
    }
    return means;
  }
  std::mt19937_64 rng(StreamSeed(c.seed, 0xC1A55));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int cls = 0; cls < k; ++cls) {
    for (int j = 0; j < d; ++j) means(cls, j) = normal(rng);
    means.row(cls) *= c.class_separation / means.row(cls).norm();
  }
  return means;
}

// Work buffers of one forward pass.
struct Forward {
  Eigen::MatrixXd pre;     // B × h (MLP)
  Eigen::MatrixXd input;   // B × p, the head's input
  Eigen::VectorXd input_norm;
  Eigen::VectorXd weight_norm;
  Eigen::MatrixXd cosine;  // B × K (temperature head)
  Eigen::MatrixXd logits;  // B × K
};

Forward RunForward(const Model& model, const Eigen::MatrixXd& x) {
  Forward fw;
  if (model.kind == ModelKind::kMlp) {
    fw.pre = (x * model.hidden_weights.transpose()).rowwise() +
             model.hidden_bias.transpose();
    fw.input = fw.pre.cwiseMax(0.0);
  } else {
    fw.input = x;
  }
  if (model.temperature_head) {
    fw.input_norm = fw.input.rowwise().norm().array() + kNormEps;
    fw.weight_norm = model.head_weights.rowwise().norm().array() + kNormEps;
    const Eigen::MatrixXd in_n = fw.input.array().colwise() / fw.input_norm.array();
    const Eigen::MatrixXd w_n =
        model.head_weights.array().colwise() / fw.weight_norm.array();
    fw.cosine = in_n * w_n.transpose();
    fw.logits = (model.temperature * fw.cosine).rowwise() +
                model.head_bias.transpose();
  } else {
    fw.logits = (fw.input * model.head_weights.transpose()).rowwise() +
                model.head_bias.transpose();
  }
  return fw;
}

struct Gradients {
  Eigen::MatrixXd hidden_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd head_weights;
  Eigen::VectorXd head_bias;
};

// `dlogits` is ∂loss/∂logits (B × K), already divided by the batch size.
Gradients Backward(const Model& model, const Eigen::MatrixXd& x,
                   const Forward& fw, const Eigen::MatrixXd& dlogits) {
  Gradients grad;
  grad.head_bias = dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dinput;
  if (model.temperature_head) {
    const Eigen::MatrixXd in_n = fw.input.array().colwise() / fw.input_norm.array();
    const Eigen::MatrixXd w_n =
        model.head_weights.array().colwise() / fw.weight_norm.array();
    const Eigen::MatrixXd dw_n = model.temperature * dlogits.transpose() * in_n;
    // Project out the radial component, then undo the normalization.
    const Eigen::VectorXd w_radial = (dw_n.array() * w_n.array()).rowwise().sum();
    grad.head_weights =
        ((dw_n - (w_n.array().colwise() * w_radial.array()).matrix()).array()
             .colwise() /
         fw.weight_norm.array())
            .matrix();
    if (model.kind == ModelKind::kMlp) {
      const Eigen::MatrixXd din_n = model.temperature * dlogits * w_n;
      const Eigen::VectorXd in_radial = (din_n.array() * in_n.array()).rowwise().sum();
      dinput = ((din_n - (in_n.array().colwise() * in_radial.array()).matrix())
                    .array()
                    .colwise() /
                fw.input_norm.array())
                   .matrix();
    }
  } else {
    grad.head_weights = dlogits.transpose() * fw.input;
    if (model.kind == ModelKind::kMlp) dinput = dlogits * model.head_weights;
  }
  if (model.kind == ModelKind::kMlp) {
    const Eigen::MatrixXd dpre =
        (fw.pre.array() > 0.0).select(dinput, Eigen::MatrixXd::Zero(dinput.rows(), dinput.cols()));
    grad.hidden_weights = dpre.transpose() * x;
    grad.hidden_bias = dpre.colwise().sum().transpose();
  }
  return grad;
}

Model InitModel(const Dataset& data, const TrainConfig& config, std::mt19937_64& rng) {
  Model model;
  model.kind = config.model;
  model.temperature_head = config.temperature_head;
  model.temperature = config.temperature;
  model.use_head_bias = config.use_head_bias;
  const int d = static_cast<int>(data.features.cols());
  const int k = data.num_classes;
  int head_in = d;
  if (config.model == ModelKind::kMlp) {
    if (config.hidden < 1) throw ValidationError("hidden width must be ≥ 1");
    head_in = config.hidden;
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / d));
    model.hidden_weights.resize(config.hidden, d);
    for (int i = 0; i < config.hidden; ++i) {
      for (int j = 0; j < d; ++j) model.hidden_weights(i, j) = he(rng);
    }
    model.hidden_bias = Eigen::VectorXd::Zero(config.hidden);
  }
  model.head_weights = Eigen::MatrixXd::Zero(k, head_in);
  model.head_bias = Eigen::VectorXd::Zero(k);
  if (config.temperature_head) {
    // A cosine head is undefined at zero weights.
    std::normal_distribution<double> small(0.0, 0.01);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < head_in; ++j) model.head_weights(i, j) = small(rng);
    }
  }
  return model;
}

}  // namespace

std::vector<int64_t> Dataset::ClassCounts() const {
  std::vector<int64_t> counts(static_cast<size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < num_classes) ++counts[static_cast<size_t>(y)];
  }
  return counts;
}

int64_t Dataset::BackgroundCount() const {
  return std::count(labels.begin(), labels.end(), background_label());
}

std::vector<int64_t> LargestRemainderCounts(std::span<const double> weights,
                                            int64_t total) {
  if (weights.empty()) throw ValidationError("no weights to apportion");
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(weight_sum > 0.0)) throw ValidationError("weights must sum to > 0");
  std::vector<int64_t> counts(weights.size());
  std::vector<double> remainders(weights.size());
  int64_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / weight_sum;
    counts[i] = static_cast<int64_t>(std::floor(quota));
    remainders[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainders[a] > remainders[b];
  });
  for (size_t i = 0; assigned < total; ++i, ++assigned) {
    ++counts[order[i % order.size()]];
  }
  return counts;
}

std::vector<int64_t> ZipfClassCounts(const SyntheticConfig& config) {
  ValidateConfig(config);
  const int64_t foreground = ForegroundTotal(config);
  if (config.num_classes > foreground) {
    throw ValidationError("num_classes exceeds the foreground sample count");
  }
  std::vector<double> priors(static_cast<size_t>(config.num_classes));
  for (size_t c = 0; c < priors.size(); ++c) {
    priors[c] = std::pow(static_cast<double>(c + 1), -config.zipf_exponent);
  }
  auto counts = LargestRemainderCounts(priors, foreground);
  for (size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw ValidationError("class " + std::to_string(c) + " would get 0 samples");
    }
  }
  return counts;
}

Dataset Generate(const SyntheticConfig& config, uint64_t stream) {
  const auto counts = ZipfClassCounts(config);
  const int64_t background = config.total_samples - ForegroundTotal(config);
  const Eigen::MatrixXd means = ClassMeans(config);

  Dataset data;
  data.num_classes = config.num_classes;
  data.features.resize(config.total_samples, config.feature_dim);
  data.labels.reserve(static_cast<size_t>(config.total_samples));
  std::mt19937_64 rng(StreamSeed(config.seed, stream + 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index row = 0;
  auto emit = [&](int label, const Eigen::RowVectorXd& center, double sigma) {
    for (int j = 0; j < config.feature_dim; ++j) {
      data.features(row, j) = center(j) + sigma * normal(rng);
    }
    data.labels.push_back(label);
    ++row;
  };
  for (int c = 0; c < config.num_classes; ++c) {
    for (int64_t i = 0; i < counts[static_cast<size_t>(c)]; ++i) {
      emit(c, means.row(c), config.noise_sigma);
    }
  }
  const Eigen::RowVectorXd origin = Eigen::RowVectorXd::Zero(config.feature_dim);
  for (int64_t i = 0; i < background; ++i) {
    emit(config.num_classes, origin, config.background_sigma);
  }
  return data;
}

double MeasureBackgroundRatio(const Dataset& data, int batch_size,
                              int num_batches, uint64_t seed) {
  if (batch_size < 1 || num_batches < 1) {
    throw ValidationError("batch_size and num_batches must be ≥ 1");
  }
  std::vector<int64_t> order(static_cast<size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(StreamSeed(seed, 0xB6));
  std::shuffle(order.begin(), order.end(), rng);
  const size_t take = std::min(order.size(), static_cast<size_t>(batch_size) *
                                                 static_cast<size_t>(num_batches));
  int64_t bg = 0;
  for (size_t i = 0; i < take; ++i) {
    if (data.labels[static_cast<size_t>(order[i])] == data.background_label()) ++bg;
  }
  const int64_t fg = static_cast<int64_t>(take) - bg;
  if (fg == 0) throw ValidationError("no foreground samples in measured batches");
  return static_cast<double>(bg) / static_cast<double>(fg);
}

std::vector<priors::ClassStats> SandboxClassStats(const Dataset& data,
                                                  double background_ratio) {
  priors::ClassCounts counts;
  const auto class_counts = data.ClassCounts();
  for (int c = 0; c < data.num_classes; ++c) {
    counts.entries.push_back({c, "class_" + std::to_string(c),
                              class_counts[static_cast<size_t>(c)]});
  }
  counts.background_ratio = background_ratio;
  const int64_t bg = priors::BackgroundCount(counts, background_ratio);
  std::vector<priors::ClassStats> stats;
  for (int c = 0; c < data.num_classes; ++c) {
    stats.push_back(priors::ComputeClassStats(counts, c, bg));
  }
  return stats;
}

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kBce:
      return "bce";
    case LossKind::kEcm:
      return "ecm";
    case LossKind::kFocalEcm:
      return "focal_ecm";
  }
  return "unknown";
}

LossKind ParseLossKind(std::string_view name) {
  for (LossKind k : {LossKind::kBce, LossKind::kEcm, LossKind::kFocalEcm}) {
    if (LossKindName(k) == name) return k;
  }
  throw ValidationError("unknown loss '" + std::string(name) +
                        "' (expected bce, ecm or focal_ecm)");
}

Eigen::MatrixXd Model::Logits(const Eigen::MatrixXd& features) const {
  return RunForward(*this, features).logits;
}

bool Model::operator==(const Model& other) const {
  return kind == other.kind && use_head_bias == other.use_head_bias &&
         temperature_head == other.temperature_head &&
         temperature == other.temperature &&
         hidden_weights == other.hidden_weights &&
         hidden_bias == other.hidden_bias &&
         head_weights == other.head_weights && head_bias == other.head_bias;
}

TrainResult Train(const Dataset& data, const TrainConfig& config,
                  std::span<const ClassLossParams> params) {
  if (static_cast<int>(params.size()) != data.num_classes) {
    throw ValidationError("loss parameters must cover every class");
  }
  if (config.epochs < 0 || config.batch_size < 1) {
    throw ValidationError("epochs must be ≥ 0 and batch_size ≥ 1");
  }
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw ValidationError("learning_rate must be finite and ≥ 0");
  }
  if (data.size() == 0) throw ValidationError("empty dataset");
  for (const auto& p : params) margins::Validate(p.weights);

  std::mt19937_64 rng(StreamSeed(config.seed, 0x7A1));
  TrainResult result;
  result.initial = InitModel(data, config, rng);
  Model model = result.initial;

  const int k = data.num_classes;
  const double lr = config.learning_rate;
  std::vector<int64_t> order(static_cast<size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      const Eigen::Index b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd x(b, data.features.cols());
      for (Eigen::Index i = 0; i < b; ++i) {
        x.row(i) = data.features.row(order[start + static_cast<size_t>(i)]);
      }
      const Forward fw = RunForward(model, x);
      Eigen::MatrixXd dlogits(b, k);
      double batch_loss = 0.0;
      for (Eigen::Index i = 0; i < b; ++i) {
        const int y = data.labels[static_cast<size_t>(order[start + static_cast<size_t>(i)])];
        for (int c = 0; c < k; ++c) {
          const auto label = y == c ? loss::Label::kPositive : loss::Label::kNegative;
          const ClassLossParams& p = params[static_cast<size_t>(c)];
          const double f = fw.logits(i, c);
          if (!std::isfinite(f)) {
            throw NumericalError("training diverged at epoch " +
                                 std::to_string(epoch) + ": non-finite logit");
          }
          loss::LossEval eval;
          switch (config.loss) {
            case LossKind::kBce:
              eval = loss::BceLoss(f, label);
              break;
            case LossKind::kEcm:
              eval = loss::EcmLoss(f, label, p.weights, p.m);
              break;
            case LossKind::kFocalEcm:
              eval = loss::FocalEcmLoss(f, label, p.weights, p.m, config.focal);
              break;
          }
          batch_loss += eval.value;
          dlogits(i, c) = eval.grad_logit / static_cast<double>(b);
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                             ": non-finite loss");
      }
      epoch_loss += batch_loss;
      const Gradients grad = Backward(model, x, fw, dlogits);
      model.head_weights -= lr * grad.head_weights;
      if (model.use_head_bias) model.head_bias -= lr * grad.head_bias;
      if (model.kind == ModelKind::kMlp) {
        model.hidden_weights -= lr * grad.hidden_weights;
        model.hidden_bias -= lr * grad.hidden_bias;
      }
      if (!model.head_weights.allFinite() || !model.head_bias.allFinite() ||
          !model.hidden_weights.allFinite() || !model.hidden_bias.allFinite()) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                             ": non-finite parameters");
      }
    }
    result.loss_curve.push_back({epoch, epoch_loss / static_cast<double>(data.size())});
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 &&
        epoch != config.epochs) {
      result.checkpoints.push_back(model);
      result.checkpoint_epochs.push_back(epoch);
    }
  }
  result.checkpoints.push_back(model);
  result.checkpoint_epochs.push_back(config.epochs);
  result.model = std::move(model);
  return result;
}

TrainReport Evaluate(const Model& model, const Dataset& data,
                     std::span<const double> alphas) {
  if (static_cast<int>(alphas.size()) != data.num_classes) {
    throw ValidationError("need one alpha per class");
  }
  if (model.head_weights.rows() != data.num_classes) {
    throw ValidationError("model and dataset disagree on the class count");
  }
  const Eigen::MatrixXd logits = model.Logits(data.features);
  TrainReport report;
  double ap_sum = 0.0;
  int present = 0;
  for (int c = 0; c < data.num_classes; ++c) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double s = loss::Sigmoid(logits(i, c));
      (data.labels[static_cast<size_t>(i)] == c ? pos : neg).push_back(s);
    }
    ClassReport cr;
    cr.class_id = c;
    cr.alpha = alphas[static_cast<size_t>(c)];
    cr.n_plus = static_cast<int64_t>(pos.size());
    cr.n_minus = static_cast<int64_t>(neg.size());
    if (pos.empty() || neg.empty()) {
      cr.present = false;
      report.per_class.push_back(cr);
      continue;
    }
    const metrics::ScoreSet set(std::move(pos), std::move(neg));
    cr.ap = metrics::AveragePrecision(set, cr.alpha);
    cr.ranking_error = metrics::RankingError(set);
    cr.det_error = 1.0 - cr.ap;
    cr.ap_lower = bounds::ApLower(cr.alpha, cr.ranking_error);
    cr.ap_upper = bounds::ApUpper(cr.alpha, cr.ranking_error);
    cr.within_bounds =
        bounds::CheckSandwich(cr.alpha, cr.ap, cr.ranking_error,
                              bounds::ApStandardError(cr.ap, cr.n_plus),
                              bounds::RankingStandardError(cr.ranking_error,
                                                           cr.n_plus, cr.n_minus))
            .within;
    ap_sum += cr.ap;
    ++present;
    report.per_class.push_back(cr);
  }
  report.mean_ap = present > 0 ? ap_sum / present : 0.0;
  return report;
}

AuditResult BoundAudit(const TrainReport& report) {
  AuditResult audit;
  for (const auto& cr : report.per_class) {
    if (!cr.present) continue;
    const auto check = bounds::CheckSandwich(
        cr.alpha, cr.ap, cr.ranking_error, bounds::ApStandardError(cr.ap, cr.n_plus),
        bounds::RankingStandardError(cr.ranking_error, cr.n_plus, cr.n_minus));
    if (!check.within) {
      audit.passed = false;
      audit.failures.push_back(
          {cr.class_id, cr.ap, cr.ranking_error, check.lower, check.upper});
    }
  }
  return audit;
}

double RareTercileMeanAp(const TrainReport& report,
                         std::span<const int64_t> class_counts) {
  std::vector<size_t> order(class_counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return class_counts[a] < class_counts[b];
  });
  const size_t take = std::max<size_t>(1, order.size() / 3);
  double sum = 0.0;
  size_t used = 0;
  for (size_t i = 0; i < take; ++i) {
    const auto& cr = report.per_class.at(order[i]);
    if (!cr.present) continue;
    sum += cr.ap;
    ++used;
  }
  return used > 0 ? sum / static_cast<double>(used) : 0.0;
}

ExperimentResult RunExperiment(const SyntheticConfig& data_config,
                               const TrainConfig& train_config) {
  const Dataset train = Generate(data_config, 0);
  ExperimentResult out;
  out.class_counts = train.ClassCounts();
  out.measured_background_ratio =
      MeasureBackgroundRatio(train, train_config.batch_size,
                             train_config.background_batches, train_config.seed);
  out.stats = SandboxClassStats(train, out.measured_background_ratio);

  std::vector<ClassLossParams> params;
  std::vector<double> alphas;
  for (const auto& s : out.stats) {
    ClassLossParams p;
    p.weights = margins::Weights(margins::OptimalMargins(s));
    p.m = bounds::SlopeM(s.alpha, train_config.m_mode);
    params.push_back(p);
    alphas.push_back(s.alpha);
  }
  const TrainResult trained = Train(train, train_config, params);

  const Dataset held_out = train_config.eval_split == EvalSplit::kHoldout
                               ? Generate(data_config, 1)
                               : Dataset{};
  const Dataset& eval = train_config.eval_split == EvalSplit::kHoldout ? held_out : train;
  for (size_t i = 0; i < trained.checkpoints.size(); ++i) {
    out.checkpoint_reports.push_back(Evaluate(trained.checkpoints[i], eval, alphas));
    out.checkpoint_reports.back().loss_curve.assign(
        trained.loss_curve.begin(),
        trained.loss_curve.begin() + trained.checkpoint_epochs[i]);
  }
  out.checkpoint_epochs = trained.checkpoint_epochs;
  out.report = out.checkpoint_reports.back();
  return out;
}

}  // namespace ecm::sandbox
