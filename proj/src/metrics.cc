#include "ecm/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "ecm/errors.h"

namespace ecm::metrics {
namespace {

constexpr double kMaxBruteForcePairs = 1e8;

void RequireNonEmpty(std::span<const double> side, const char* what) {
  if (side.empty()) {
    throw ValidationError(std::string("score set has no ") + what);
  }
}

void RequireAlpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("alpha must be a positive finite number");
  }
}

size_t CountAbove(std::span<const double> scores, double t) {
  return static_cast<size_t>(
      std::count_if(scores.begin(), scores.end(), [t](double s) { return s > t; }));
}

// Shared final step so the sorted and brute-force counts produce the same
// floating-point result from the same integers.
double PairFraction(int64_t misranked, int64_t ties, size_t n_pos, size_t n_neg,
                    TieMode mode) {
  const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
  if (mode == TieMode::kStrict) return static_cast<double>(misranked) / pairs;
  return static_cast<double>(2 * misranked + ties) / (2.0 * pairs);
}

std::vector<double> SortedDescending(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace

ScoreSet::ScoreSet(std::vector<double> positives, std::vector<double> negatives)
    : positives_(std::move(positives)), negatives_(std::move(negatives)) {
  for (const auto* side : {&positives_, &negatives_}) {
    for (double s : *side) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ValidationError("score outside [0,1]: " + std::to_string(s));
      }
    }
  }
}

double RecallAt(const ScoreSet& set, double t) {
  RequireNonEmpty(set.positives(), "positives");
  return static_cast<double>(CountAbove(set.positives(), t)) /
         static_cast<double>(set.positives().size());
}

double PrecisionAt(const ScoreSet& set, double t, double alpha) {
  RequireNonEmpty(set.positives(), "positives");
  RequireNonEmpty(set.negatives(), "negatives");
  RequireAlpha(alpha);
  const double recall = RecallAt(set, t);
  const double false_rate = static_cast<double>(CountAbove(set.negatives(), t)) /
                            static_cast<double>(set.negatives().size());
  const double denom = recall + alpha * false_rate;
  if (denom <= 0.0) {
    throw UndefinedPrecisionError("precision undefined: no scores above t = " +
                                  std::to_string(t));
  }
  return recall / denom;
}

double AveragePrecision(const ScoreSet& set, double alpha) {
  RequireNonEmpty(set.positives(), "positives");
  RequireNonEmpty(set.negatives(), "negatives");
  RequireAlpha(alpha);
  const auto pos = SortedDescending(set.positives());
  const auto neg = SortedDescending(set.negatives());
  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());

  double sum = 0.0;
  size_t neg_at_or_above = 0;
  size_t i = 0;
  while (i < pos.size()) {
    // Tied positives share one threshold and therefore one precision.
    size_t group_end = i;
    while (group_end < pos.size() && pos[group_end] == pos[i]) ++group_end;
    while (neg_at_or_above < neg.size() && neg[neg_at_or_above] >= pos[i]) {
      ++neg_at_or_above;
    }
    const double recall = static_cast<double>(group_end) / n_pos;
    const double false_rate = static_cast<double>(neg_at_or_above) / n_neg;
    const double precision = recall / (recall + alpha * false_rate);
    sum += precision * static_cast<double>(group_end - i);
    i = group_end;
  }
  return sum / n_pos;
}

double RankingError(const ScoreSet& set, TieMode mode) {
  RequireNonEmpty(set.positives(), "positives");
  RequireNonEmpty(set.negatives(), "negatives");
  std::vector<double> neg(set.negatives().begin(), set.negatives().end());
  std::sort(neg.begin(), neg.end());
  int64_t misranked = 0;
  int64_t ties = 0;
  for (double p : set.positives()) {
    const auto [lo, hi] = std::equal_range(neg.begin(), neg.end(), p);
    misranked += neg.end() - hi;
    ties += hi - lo;
  }
  return PairFraction(misranked, ties, set.positives().size(),
                      set.negatives().size(), mode);
}

double RankingErrorBruteForce(const ScoreSet& set, TieMode mode) {
  RequireNonEmpty(set.positives(), "positives");
  RequireNonEmpty(set.negatives(), "negatives");
  const double pairs = static_cast<double>(set.positives().size()) *
                       static_cast<double>(set.negatives().size());
  if (pairs > kMaxBruteForcePairs) {
    throw ResourceError("brute-force ranking error limited to 1e8 pairs");
  }
  int64_t misranked = 0;
  int64_t ties = 0;
  for (double p : set.positives()) {
    for (double n : set.negatives()) {
      if (p < n) {
        ++misranked;
      } else if (p == n) {
        ++ties;
      }
    }
  }
  return PairFraction(misranked, ties, set.positives().size(),
                      set.negatives().size(), mode);
}

PrecisionRecallCurve PrCurve(const ScoreSet& set, double alpha) {
  RequireNonEmpty(set.positives(), "positives");
  RequireNonEmpty(set.negatives(), "negatives");
  RequireAlpha(alpha);
  const auto pos = SortedDescending(set.positives());
  const auto neg = SortedDescending(set.negatives());
  std::vector<double> thresholds(pos);
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  PrecisionRecallCurve curve;
  curve.points.reserve(thresholds.size());
  size_t tp = 0;
  size_t fp = 0;
  for (double t : thresholds) {
    while (tp < pos.size() && pos[tp] >= t) ++tp;
    while (fp < neg.size() && neg[fp] >= t) ++fp;
    const double recall = static_cast<double>(tp) / static_cast<double>(pos.size());
    const double false_rate =
        static_cast<double>(fp) / static_cast<double>(neg.size());
    const double precision =
        tp == 0 ? 0.0 : recall / (recall + alpha * false_rate);
    curve.points.push_back({t, recall, precision});
  }
  return curve;
}

ScoreSet LoadScoreCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open score file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseScoreCsv(buffer.str());
}

ScoreSet ParseScoreCsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> pos;
  std::vector<double> neg;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "score,label") {
        throw InputError("line " + std::to_string(line_no) +
                         ": expected header 'score,label'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw InputError("line " + std::to_string(line_no) + ": expected 2 fields");
    }
    const std::string score_text = line.substr(0, comma);
    const std::string label_text = line.substr(comma + 1);
    size_t consumed = 0;
    double score = 0.0;
    try {
      score = std::stod(score_text, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (score_text.empty() || consumed != score_text.size()) {
      throw InputError("line " + std::to_string(line_no) +
                       ": field 'score' is not a number: '" + score_text + "'");
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw InputError("line " + std::to_string(line_no) +
                       ": field 'score' outside [0,1]");
    }
    if (label_text == "1") {
      pos.push_back(score);
    } else if (label_text == "0") {
      neg.push_back(score);
    } else {
      throw InputError("line " + std::to_string(line_no) +
                       ": field 'label' must be 0 or 1, got '" + label_text + "'");
    }
  }
  if (!header_seen) throw InputError("score CSV: missing header");
  return ScoreSet(std::move(pos), std::move(neg));
}

}  // namespace ecm::metrics
