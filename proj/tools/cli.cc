#include "cli.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "ecm/bounds.h"
#include "ecm/errors.h"
#include "ecm/margins.h"
#include "ecm/metrics.h"
#include "ecm/priors.h"
#include "ecm/verify.h"

#ifndef ECM_VERSION
#define ECM_VERSION "unknown"
#endif

namespace ecm::cli {
namespace {

using Json = nlohmann::ordered_json;

enum class Format { kJson, kCsv };

struct GlobalFlags {
  std::optional<uint64_t> seed;
  std::string out;
  std::string format;  // empty = per-output default
};

Format ResolveFormat(const GlobalFlags& g, Format fallback) {
  if (g.format.empty()) return fallback;
  return g.format == "csv" ? Format::kCsv : Format::kJson;
}

std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
  if (!f) throw InputError("write failed: " + path);
}

// Writes a report to --out when given, otherwise to `out`.
void EmitReport(const GlobalFlags& g, const std::string& text, std::ostream& out) {
  if (g.out.empty()) {
    out << text;
  } else {
    WriteFile(g.out, text);
  }
}

std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

// One-line CSV header echoing the resolved configuration.
std::string CsvConfigLine(const Json& config) {
  std::string line = "#";
  for (const auto& [key, value] : config.items()) {
    line += " " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
  }
  return line + "\n";
}

// --- margins ---------------------------------------------------------------

struct MarginsFlags {
  std::string counts;
  std::optional<double> background_ratio;
};

int RunMargins(const GlobalFlags& g, const MarginsFlags& f, std::ostream& out) {
  priors::ClassCounts counts =
      priors::LoadCounts(f.counts, priors::FormatFromPath(f.counts));
  const std::optional<double> ratio =
      f.background_ratio ? f.background_ratio : counts.background_ratio;
  if (!ratio) {
    throw InputError("no background ratio: pass --background-ratio or set "
                     "'background_ratio' in the counts file");
  }
  const int64_t background = priors::BackgroundCount(counts, *ratio);

  Json config;
  config["command"] = "margins";
  config["counts"] = f.counts;
  config["background_ratio"] = *ratio;
  config["background_count"] = background;
  if (g.seed) config["seed"] = *g.seed;

  Json classes = Json::array();
  Json errors = Json::array();
  std::string csv = "id,n_plus,n_minus,alpha,gamma_plus,gamma_minus,w_plus,w_minus\n";
  for (const auto& entry : counts.entries) {
    priors::ClassStats stats;
    try {
      stats = priors::ComputeClassStats(counts, entry.class_id, background);
    } catch (const ValidationError& e) {
      errors.push_back({{"id", entry.class_id}, {"message", e.what()}});
      continue;
    }
    const margins::Margins m = margins::OptimalMargins(stats);
    const margins::MarginWeights w = margins::Weights(m);
    Json c;
    c["id"] = entry.class_id;
    c["n_plus"] = stats.n_plus;
    c["n_minus"] = stats.n_minus;
    c["alpha"] = Round12(stats.alpha);
    c["gamma_plus"] = Round12(m.gamma_plus);
    c["gamma_minus"] = Round12(m.gamma_minus);
    c["w_plus"] = Round12(w.w_plus);
    c["w_minus"] = Round12(w.w_minus);
    classes.push_back(c);
    csv += std::to_string(entry.class_id) + "," + std::to_string(stats.n_plus) + "," +
           std::to_string(stats.n_minus) + "," + Num(stats.alpha) + "," +
           Num(m.gamma_plus) + "," + Num(m.gamma_minus) + "," + Num(w.w_plus) + "," +
           Num(w.w_minus) + "\n";
  }

  Json report;
  report["config"] = config;
  report["classes"] = classes;
  if (!errors.empty()) report["errors"] = errors;
  const std::string text = ResolveFormat(g, Format::kJson) == Format::kCsv
                               ? CsvConfigLine(config) + csv
                               : DumpJson(report);
  EmitReport(g, text, out);
  if (!errors.empty()) {
    if (!g.out.empty()) out << DumpJson(Json{{"errors", errors}});
    return kExitFailed;
  }
  return kExitOk;
}

// --- bounds ----------------------------------------------------------------

struct BoundsFlags {
  double alpha = 0.0;
  double r = 0.0;
  std::string mode = "upper";
  std::string emit_curve;
};

Json EnvelopeJson(const bounds::BoundEnvelope& e) {
  return Json{{"alpha", Round12(e.alpha)},
              {"r", Round12(e.ranking_error)},
              {"ap_lower", Round12(e.ap_lower)},
              {"ap_upper", Round12(e.ap_upper)},
              {"det_lower", Round12(e.det_lower)},
              {"det_upper", Round12(e.det_upper)},
              {"slope_mode", std::string(bounds::SlopeModeName(e.slope_mode))},
              {"slope_m", Round12(e.slope_m)}};
}

int RunBounds(const GlobalFlags& g, const BoundsFlags& f, std::ostream& out) {
  const bounds::SlopeMode mode = bounds::ParseSlopeMode(f.mode);
  const bounds::BoundEnvelope env = bounds::Envelope(f.alpha, f.r, mode);

  Json config;
  config["command"] = "bounds";
  config["alpha"] = f.alpha;
  config["r"] = f.r;
  config["mode"] = f.mode;
  if (!f.emit_curve.empty()) config["emit_curve"] = f.emit_curve;
  if (g.seed) config["seed"] = *g.seed;

  if (!f.emit_curve.empty()) {
    const Format curve_format = ResolveFormat(g, Format::kCsv);
    std::string csv = "r,ap_lower,ap_upper,det_lower,det_upper\n";
    Json rows = Json::array();
    for (int i = 0; i <= 100; ++i) {
      const double r = i / 100.0;
      const double lo = bounds::ApLower(f.alpha, r);
      const double hi = bounds::ApUpper(f.alpha, r);
      csv += Num(r) + "," + Num(lo) + "," + Num(hi) + "," + Num(1.0 - hi) + "," +
             Num(1.0 - lo) + "\n";
      rows.push_back({{"r", Round12(r)},
                      {"ap_lower", Round12(lo)},
                      {"ap_upper", Round12(hi)},
                      {"det_lower", Round12(1.0 - hi)},
                      {"det_upper", Round12(1.0 - lo)}});
    }
    WriteFile(f.emit_curve, curve_format == Format::kCsv
                                ? csv
                                : DumpJson(Json{{"config", config}, {"curve", rows}}));
  }

  const bounds::BoundEnvelope& e = env;
  if (ResolveFormat(g, Format::kJson) == Format::kCsv) {
    EmitReport(g,
               CsvConfigLine(config) +
                   "alpha,r,ap_lower,ap_upper,det_lower,det_upper,slope_mode,slope_m\n" +
                   Num(e.alpha) + "," + Num(e.ranking_error) + "," + Num(e.ap_lower) +
                   "," + Num(e.ap_upper) + "," + Num(e.det_lower) + "," +
                   Num(e.det_upper) + "," + std::string(bounds::SlopeModeName(mode)) +
                   "," + Num(e.slope_m) + "\n",
               out);
  } else {
    EmitReport(g, DumpJson(Json{{"config", config}, {"envelope", EnvelopeJson(e)}}), out);
  }
  return kExitOk;
}

// --- metrics ---------------------------------------------------------------

struct MetricsFlags {
  std::string scores;
  double alpha = 0.0;
  std::string tie_mode = "half";
  std::string pr_curve;
};

int RunMetrics(const GlobalFlags& g, const MetricsFlags& f, std::ostream& out) {
  const metrics::ScoreSet set = metrics::LoadScoreCsv(f.scores);
  if (set.positives().empty() || set.negatives().empty()) {
    throw InputError(f.scores + ": need at least one positive and one negative");
  }
  const metrics::TieMode tie =
      f.tie_mode == "strict" ? metrics::TieMode::kStrict : metrics::TieMode::kHalfCredit;
  const auto n_pos = static_cast<int64_t>(set.positives().size());
  const auto n_neg = static_cast<int64_t>(set.negatives().size());
  const double ap = metrics::AveragePrecision(set, f.alpha);
  const double r = metrics::RankingError(set, tie);
  const double r_half = metrics::RankingError(set);
  const double se_ap = bounds::ApStandardError(ap, n_pos);
  const double se_r = bounds::RankingStandardError(r_half, n_pos, n_neg);
  const bounds::SandwichResult sandwich =
      bounds::CheckSandwich(f.alpha, ap, r_half, se_ap, se_r);

  Json config;
  config["command"] = "metrics";
  config["scores"] = f.scores;
  config["alpha"] = f.alpha;
  config["tie_mode"] = f.tie_mode;
  if (!f.pr_curve.empty()) config["pr_curve"] = f.pr_curve;
  if (g.seed) config["seed"] = *g.seed;

  if (!f.pr_curve.empty()) {
    const auto curve = metrics::PrCurve(set, f.alpha);
    std::string csv = "threshold,recall,precision\n";
    Json rows = Json::array();
    for (const auto& p : curve.points) {
      csv += Num(p.threshold) + "," + Num(p.recall) + "," + Num(p.precision) + "\n";
      rows.push_back({{"threshold", Round12(p.threshold)},
                      {"recall", Round12(p.recall)},
                      {"precision", Round12(p.precision)}});
    }
    WriteFile(f.pr_curve, ResolveFormat(g, Format::kCsv) == Format::kCsv
                              ? csv
                              : DumpJson(Json{{"config", config}, {"curve", rows}}));
  }

  Json result{{"n_plus", n_pos},
              {"n_minus", n_neg},
              {"ap", Round12(ap)},
              {"ranking_error", Round12(r)},
              {"ap_lower", Round12(bounds::ApLower(f.alpha, r_half))},
              {"ap_upper", Round12(bounds::ApUpper(f.alpha, r_half))},
              {"se_ap", Round12(se_ap)},
              {"se_r", Round12(se_r)},
              {"within_bounds", sandwich.within}};
  if (ResolveFormat(g, Format::kJson) == Format::kCsv) {
    std::string header;
    std::string row;
    for (const auto& [key, value] : result.items()) {
      header += (header.empty() ? "" : ",") + key;
      row += (row.empty() ? "" : ",") +
             (value.is_number_float() ? Num(value.get<double>()) : value.dump());
    }
    EmitReport(g, CsvConfigLine(config) + header + "\n" + row + "\n", out);
  } else {
    EmitReport(g, DumpJson(Json{{"config", config}, {"metrics", result}}), out);
  }
  if (!sandwich.within) {
    if (!g.out.empty()) out << DumpJson(result);
    return kExitFailed;
  }
  return kExitOk;
}

// --- verify ----------------------------------------------------------------

struct VerifyFlags {
  std::string suite = "all";
  int64_t trials = 1000;
};

int RunVerify(const GlobalFlags& g, const VerifyFlags& f, std::ostream& out) {
  verify::VerifyOptions options;
  options.trials = f.trials;
  options.seed = g.seed.value_or(42);
  const auto results = verify::RunSuite(f.suite, options);

  Json config{{"command", "verify"},
              {"suite", f.suite},
              {"trials", f.trials},
              {"seed", options.seed}};
  bool all_passed = true;
  Json suites = Json::array();
  std::string csv = "suite,checks,failures,max_deviation,passed\n";
  for (const auto& s : results) {
    all_passed = all_passed && s.passed();
    suites.push_back({{"name", s.name},
                      {"checks", s.checks},
                      {"failures", s.failures},
                      {"max_deviation", s.max_deviation},
                      {"passed", s.passed()},
                      {"examples", s.examples}});
    csv += s.name + "," + std::to_string(s.checks) + "," + std::to_string(s.failures) +
           "," + Num(s.max_deviation) + "," + (s.passed() ? "true" : "false") + "\n";
  }
  Json report{{"config", config}, {"passed", all_passed}, {"suites", suites}};
  EmitReport(g,
             ResolveFormat(g, Format::kJson) == Format::kCsv ? CsvConfigLine(config) + csv
                                                             : DumpJson(report),
             out);
  if (!all_passed) {
    if (!g.out.empty()) out << DumpJson(report);
    return kExitFailed;
  }
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainFlags {
  std::string config;
  std::string loss_curve;
};

int RunTrain(const GlobalFlags& g, const TrainFlags& f, std::ostream& out) {
  std::ifstream in(f.config, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + f.config);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(f.config + ": malformed JSON: " + e.what());
  }
  ExperimentConfig cfg = ParseExperimentConfig(doc);
  if (g.seed) {
    cfg.data.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }

  const sandbox::ExperimentResult result = sandbox::RunExperiment(cfg.data, cfg.train);
  Json report = ToJson(result.report);
  report["rare_tercile_ap"] = Round12(sandbox::RareTercileMeanAp(result.report,
                                                                 result.class_counts));
  report["measured_background_ratio"] = Round12(result.measured_background_ratio);
  report["class_counts"] = result.class_counts;

  bool audit_passed = true;
  Json checkpoints = Json::array();
  for (size_t i = 0; i < result.checkpoint_reports.size(); ++i) {
    const auto audit = sandbox::BoundAudit(result.checkpoint_reports[i]);
    audit_passed = audit_passed && audit.passed;
    Json failures = Json::array();
    for (const auto& fl : audit.failures) {
      failures.push_back({{"class_id", fl.class_id},
                          {"ap", Round12(fl.ap)},
                          {"ranking_error", Round12(fl.ranking_error)},
                          {"lower", Round12(fl.lower)},
                          {"upper", Round12(fl.upper)}});
    }
    checkpoints.push_back({{"epoch", result.checkpoint_epochs[i]},
                           {"mean_ap", Round12(result.checkpoint_reports[i].mean_ap)},
                           {"audit_passed", audit.passed},
                           {"audit_failures", failures}});
  }
  report["checkpoints"] = checkpoints;
  report["audit_passed"] = audit_passed;

  Json config = ToJson(cfg);
  config["command"] = "train";
  config["config_file"] = f.config;

  if (!f.loss_curve.empty()) {
    std::string csv = "epoch,mean_loss\n";
    for (const auto& p : result.report.loss_curve) {
      csv += std::to_string(p.epoch) + "," + Num(p.mean_loss) + "\n";
    }
    WriteFile(f.loss_curve, csv);
  }

  Json doc_out{{"config", config}, {"report", report}};
  if (ResolveFormat(g, Format::kJson) == Format::kCsv) {
    std::string csv =
        "class_id,present,n_plus,n_minus,alpha,ap,ranking_error,det_error,ap_lower,"
        "ap_upper,within_bounds\n";
    for (const auto& c : result.report.per_class) {
      csv += std::to_string(c.class_id) + "," + (c.present ? "true" : "false") + "," +
             std::to_string(c.n_plus) + "," + std::to_string(c.n_minus) + "," +
             Num(c.alpha) + "," + Num(c.ap) + "," + Num(c.ranking_error) + "," +
             Num(c.det_error) + "," + Num(c.ap_lower) + "," + Num(c.ap_upper) + "," +
             (c.within_bounds ? "true" : "false") + "\n";
    }
    Json flat{{"command", "train"}, {"config_file", f.config},
              {"seed", cfg.train.seed}, {"data_seed", cfg.data.seed}};
    EmitReport(g, CsvConfigLine(flat) + csv, out);
  } else {
    EmitReport(g, DumpJson(doc_out), out);
  }
  if (!audit_passed) {
    if (!g.out.empty()) out << DumpJson(Json{{"checkpoints", checkpoints}});
    return kExitFailed;
  }
  return kExitOk;
}

// --- config parsing ---------------------------------------------------------

template <typename T>
void Read(const Json& obj, const std::string& section, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  const Json& v = obj[key];
  const std::string where = section + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw InputError(where + ": expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw InputError(where + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned()) {
        throw InputError(where + ": expected a nonnegative integer");
      }
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw InputError(where + ": expected a number");
  } else {
    if (!v.is_string()) throw InputError(where + ": expected a string");
  }
  dst = v.get<T>();
}

void RejectUnknown(const Json& obj, const std::string& section,
                   std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InputError("unknown config field '" + section + "." + key + "'");
  }
}

template <typename F>
auto Convert(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw InputError(where + ": " + e.what());
  }
}

}  // namespace

double Round12(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(Num(x).c_str(), nullptr);
}

ExperimentConfig ParseExperimentConfig(const Json& doc) {
  if (!doc.is_object()) throw InputError("config: expected a JSON object");
  RejectUnknown(doc, "", {"data", "train"});
  ExperimentConfig cfg;
  if (doc.contains("data")) {
    const Json& d = doc["data"];
    if (!d.is_object()) throw InputError("data: expected an object");
    RejectUnknown(d, "data",
                  {"num_classes", "total_samples", "zipf_exponent", "feature_dim",
                   "class_separation", "noise_sigma", "background_fraction",
                   "background_sigma", "seed"});
    auto& s = cfg.data;
    Read(d, "data", "num_classes", s.num_classes);
    Read(d, "data", "total_samples", s.total_samples);
    Read(d, "data", "zipf_exponent", s.zipf_exponent);
    Read(d, "data", "feature_dim", s.feature_dim);
    Read(d, "data", "class_separation", s.class_separation);
    Read(d, "data", "noise_sigma", s.noise_sigma);
    Read(d, "data", "background_fraction", s.background_fraction);
    Read(d, "data", "background_sigma", s.background_sigma);
    Read(d, "data", "seed", s.seed);
  }
  if (doc.contains("train")) {
    const Json& t = doc["train"];
    if (!t.is_object()) throw InputError("train: expected an object");
    RejectUnknown(t, "train",
                  {"loss", "m_mode", "epochs", "learning_rate", "batch_size", "model",
                   "hidden", "temperature_head", "temperature", "use_head_bias",
                   "focal_gamma", "focal_alpha", "checkpoint_every", "eval_split",
                   "background_batches", "seed"});
    auto& c = cfg.train;
    std::string text;
    if (t.contains("loss")) {
      Read(t, "train", "loss", text);
      c.loss = Convert("train.loss", [&] { return sandbox::ParseLossKind(text); });
    }
    if (t.contains("m_mode")) {
      Read(t, "train", "m_mode", text);
      c.m_mode = Convert("train.m_mode", [&] { return bounds::ParseSlopeMode(text); });
    }
    if (t.contains("model")) {
      Read(t, "train", "model", text);
      if (text == "linear") {
        c.model = sandbox::ModelKind::kLinear;
      } else if (text == "mlp") {
        c.model = sandbox::ModelKind::kMlp;
      } else {
        throw InputError("train.model: expected 'linear' or 'mlp'");
      }
    }
    if (t.contains("eval_split")) {
      Read(t, "train", "eval_split", text);
      if (text == "train") {
        c.eval_split = sandbox::EvalSplit::kTrain;
      } else if (text == "holdout") {
        c.eval_split = sandbox::EvalSplit::kHoldout;
      } else {
        throw InputError("train.eval_split: expected 'train' or 'holdout'");
      }
    }
    Read(t, "train", "epochs", c.epochs);
    Read(t, "train", "learning_rate", c.learning_rate);
    Read(t, "train", "batch_size", c.batch_size);
    Read(t, "train", "hidden", c.hidden);
    Read(t, "train", "temperature_head", c.temperature_head);
    Read(t, "train", "temperature", c.temperature);
    Read(t, "train", "use_head_bias", c.use_head_bias);
    Read(t, "train", "focal_gamma", c.focal.gamma);
    Read(t, "train", "focal_alpha", c.focal.alpha);
    Read(t, "train", "checkpoint_every", c.checkpoint_every);
    Read(t, "train", "background_batches", c.background_batches);
    Read(t, "train", "seed", c.seed);
  }
  const auto& c = cfg.train;
  if (c.epochs < 0) throw InputError("train.epochs: must be ≥ 0");
  if (c.batch_size < 1) throw InputError("train.batch_size: must be ≥ 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw InputError("train.learning_rate: must be finite and ≥ 0");
  }
  if (c.hidden < 1) throw InputError("train.hidden: must be ≥ 1");
  if (!(c.temperature > 0.0)) throw InputError("train.temperature: must be > 0");
  if (c.checkpoint_every < 0) throw InputError("train.checkpoint_every: must be ≥ 0");
  if (c.background_batches < 1) {
    throw InputError("train.background_batches: must be ≥ 1");
  }
  if (!(c.focal.gamma >= 0.0)) throw InputError("train.focal_gamma: must be ≥ 0");
  if (!(c.focal.alpha > 0.0 && c.focal.alpha < 1.0)) {
    throw InputError("train.focal_alpha: must lie in (0,1)");
  }
  // Validates the data section (and class counts) up front.
  Convert("data", [&] { return sandbox::ZipfClassCounts(cfg.data); });
  return cfg;
}

Json ToJson(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  const auto& t = cfg.train;
  Json data{{"num_classes", d.num_classes},
            {"total_samples", d.total_samples},
            {"zipf_exponent", d.zipf_exponent},
            {"feature_dim", d.feature_dim},
            {"class_separation", d.class_separation},
            {"noise_sigma", d.noise_sigma},
            {"background_fraction", d.background_fraction},
            {"background_sigma", d.background_sigma},
            {"seed", d.seed}};
  Json train{{"loss", std::string(sandbox::LossKindName(t.loss))},
             {"m_mode", std::string(bounds::SlopeModeName(t.m_mode))},
             {"epochs", t.epochs},
             {"learning_rate", t.learning_rate},
             {"batch_size", t.batch_size},
             {"model", t.model == sandbox::ModelKind::kMlp ? "mlp" : "linear"},
             {"hidden", t.hidden},
             {"temperature_head", t.temperature_head},
             {"temperature", t.temperature},
             {"use_head_bias", t.use_head_bias},
             {"focal_gamma", t.focal.gamma},
             {"focal_alpha", t.focal.alpha},
             {"checkpoint_every", t.checkpoint_every},
             {"eval_split", t.eval_split == sandbox::EvalSplit::kHoldout ? "holdout"
                                                                         : "train"},
             {"background_batches", t.background_batches},
             {"seed", t.seed}};
  return Json{{"data", data}, {"train", train}};
}

Json ToJson(const sandbox::TrainReport& report) {
  Json per_class = Json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back({{"class_id", c.class_id},
                         {"present", c.present},
                         {"n_plus", c.n_plus},
                         {"n_minus", c.n_minus},
                         {"alpha", Round12(c.alpha)},
                         {"ap", Round12(c.ap)},
                         {"ranking_error", Round12(c.ranking_error)},
                         {"det_error", Round12(c.det_error)},
                         {"ap_lower", Round12(c.ap_lower)},
                         {"ap_upper", Round12(c.ap_upper)},
                         {"within_bounds", c.within_bounds}});
  }
  Json curve = Json::array();
  for (const auto& p : report.loss_curve) {
    curve.push_back({{"epoch", p.epoch}, {"mean_loss", Round12(p.mean_loss)}});
  }
  return Json{{"per_class", per_class},
              {"mean_ap", Round12(report.mean_ap)},
              {"loss_curve", curve}};
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Effective class-margin toolkit: AP/ranking bounds, class margins, "
               "margin losses and a long-tail training sandbox.",
               "ecm"};
  app.set_version_flag("--version", std::string("ecm ") + ECM_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed,
                 "Base seed for every random stream (verify default 42; train "
                 "overrides both data.seed and train.seed)");
  app.add_option("--out", g.out, "Write the report to this file instead of stdout");
  app.add_option("--format", g.format,
                 "Report encoding; curve files default to csv, reports to json")
      ->check(CLI::IsMember({"json", "csv"}));

  const auto finite = CLI::Validator(
      [](std::string& s) -> std::string {
        // strtod, unlike stream extraction, reads "nan" and "inf".
        const double v = std::strtod(s.c_str(), nullptr);
        return std::isfinite(v) ? std::string() : "value must be finite";
      },
      "FINITE");

  MarginsFlags mf;
  auto* margins_cmd = app.add_subcommand(
      "margins", "Per-class effective margins and loss weights from instance counts");
  margins_cmd->add_option("--counts", mf.counts,
                          "Counts file: JSON {categories:[{id,name,instance_count}], "
                          "background_ratio?} or CSV id,name,instance_count")
      ->required()
      ->check(CLI::ExistingFile);
  margins_cmd->add_option("--background-ratio", mf.background_ratio,
                          "Background-to-foreground ratio (overrides the file's "
                          "background_ratio)")
      ->check(CLI::NonNegativeNumber & finite);

  BoundsFlags bf;
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "AP envelope at a given prior ratio and ranking error");
  bounds_cmd->add_option("--alpha", bf.alpha, "Negative-to-positive ratio, > 0")
      ->required()
      ->check(CLI::PositiveNumber & finite);
  bounds_cmd->add_option("--r", bf.r, "Pairwise ranking error in [0,1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  bounds_cmd->add_option("--mode", bf.mode, "Slope mode for slope_m")
      ->check(CLI::IsMember({"unit", "lower", "upper", "meet"}))
      ->capture_default_str();
  bounds_cmd->add_option("--emit-curve", bf.emit_curve,
                         "Write r,ap_lower,ap_upper,det_lower,det_upper for "
                         "r = 0, 0.01, ..., 1");

  MetricsFlags xf;
  auto* metrics_cmd = app.add_subcommand(
      "metrics", "AP, ranking error and bound check for a score,label CSV");
  metrics_cmd->add_option("--scores", xf.scores, "CSV with header score,label")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--alpha", xf.alpha, "Negative-to-positive ratio, > 0")
      ->required()
      ->check(CLI::PositiveNumber & finite);
  metrics_cmd->add_option("--tie-mode", xf.tie_mode,
                          "Tied pairs count half (half) or nothing (strict)")
      ->check(CLI::IsMember({"half", "strict"}))
      ->capture_default_str();
  metrics_cmd->add_option("--pr-curve", xf.pr_curve,
                          "Write threshold,recall,precision per distinct score");

  VerifyFlags vf;
  auto* verify_cmd = app.add_subcommand("verify", "Run randomized property suites");
  std::vector<std::string> suite_choices = verify::SuiteNames();
  suite_choices.push_back("all");
  verify_cmd->add_option("--suite", vf.suite, "Suite name or all")
      ->check(CLI::IsMember(suite_choices))
      ->capture_default_str();
  verify_cmd->add_option("--trials", vf.trials, "Random cases per suite")
      ->check(CLI::Range(int64_t{1}, int64_t{100000000}))
      ->capture_default_str();

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand(
      "train", "Generate a long-tail dataset, train, evaluate and audit");
  train_cmd->add_option("--config", tf.config,
                        "JSON {data:{...}, train:{...}} with snake_case field names")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--loss-curve", tf.loss_curve,
                        "Write epoch,mean_loss as CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (margins_cmd->parsed()) return RunMargins(g, mf, out);
    if (bounds_cmd->parsed()) return RunBounds(g, bf, out);
    if (metrics_cmd->parsed()) return RunMetrics(g, xf, out);
    if (verify_cmd->parsed()) return RunVerify(g, vf, out);
    if (train_cmd->parsed()) return RunTrain(g, tf, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const LookupError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const Error& e) {
    out << DumpJson(Json{{"error", e.what()}});
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitBadInput;
}

}  // namespace ecm::cli
