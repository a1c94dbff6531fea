#ifndef ECM_PRIORS_H_
#define ECM_PRIORS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecm::priors {

struct ClassEntry {
  int64_t class_id = 0;
  std::string name;
  int64_t instance_count = 0;
};

// Per-category instance counts, optionally with the measured
// background-to-foreground ratio.
struct ClassCounts {
  std::vector<ClassEntry> entries;
  std::optional<double> background_ratio;

  // Sum of foreground instance counts.
  int64_t Total() const;
  const ClassEntry& Find(int64_t class_id) const;
};

// n⁺ = samples of the class, n⁻ = every other sample including background,
// alpha = n⁻ / n⁺.
struct ClassStats {
  int64_t n_plus = 0;
  int64_t n_minus = 0;
  double alpha = 0.0;
};

enum class CountsFormat { kJson, kCsv };

// Picks the format from the file extension (".csv" -> CSV, else JSON).
CountsFormat FormatFromPath(const std::filesystem::path& path);

ClassCounts LoadCounts(const std::filesystem::path& path, CountsFormat format);
ClassCounts ParseCountsJson(std::string_view text);
ClassCounts ParseCountsCsv(std::string_view text);

// round(ratio * Σ n_c), half away from zero.
int64_t BackgroundCount(const ClassCounts& counts, double ratio);

ClassStats ComputeClassStats(const ClassCounts& counts, int64_t class_id,
                             int64_t background);

}  // namespace ecm::priors

#endif  // ECM_PRIORS_H_
