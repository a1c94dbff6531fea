#ifndef ECM_METRICS_H_
#define ECM_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace ecm::metrics {

// Scores of one class's detector on samples of the class (positives) and on
// everything else (negatives). All scores lie in [0, 1].
class ScoreSet {
 public:
  ScoreSet() = default;
  // Throws ValidationError on non-finite or out-of-range scores.
  ScoreSet(std::vector<double> positives, std::vector<double> negatives);

  std::span<const double> positives() const { return positives_; }
  std::span<const double> negatives() const { return negatives_; }

  // Positives and negatives exchanged.
  ScoreSet Swapped() const { return ScoreSet(negatives_, positives_); }

 private:
  std::vector<double> positives_;
  std::vector<double> negatives_;
};

// How a positive and a negative with equal scores count towards the ranking
// error. kHalfCredit is the limit of breaking ties uniformly at random.
enum class TieMode { kHalfCredit, kStrict };

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

// Sorted by descending threshold.
struct PrecisionRecallCurve {
  std::vector<PrPoint> points;
};

// Fraction of positives with score strictly greater than t.
double RecallAt(const ScoreSet& set, double t);

// r / (r + alpha * P(s⁻ > t)); throws UndefinedPrecisionError when both tails
// are empty at t.
double PrecisionAt(const ScoreSet& set, double t, double alpha);

// Mean over positives of the precision at each positive's own score, with the
// sample itself included (≥ convention). Counts are normalized per side, so
// alpha carries the class prior ratio.
double AveragePrecision(const ScoreSet& set, double alpha);

// Fraction of (positive, negative) pairs ranked the wrong way round.
// O(n log n).
double RankingError(const ScoreSet& set, TieMode mode = TieMode::kHalfCredit);

// O(n⁺·n⁻) reference; bit-identical to RankingError. Throws ResourceError
// above 1e8 pairs.
double RankingErrorBruteForce(const ScoreSet& set,
                              TieMode mode = TieMode::kHalfCredit);

// One point per distinct score, using the same ≥ convention as
// AveragePrecision.
PrecisionRecallCurve PrCurve(const ScoreSet& set, double alpha);

// Reads a `score,label` CSV (label 1 = positive, 0 = negative).
ScoreSet LoadScoreCsv(const std::filesystem::path& path);
ScoreSet ParseScoreCsv(std::string_view text);

}  // namespace ecm::metrics

#endif  // ECM_METRICS_H_
