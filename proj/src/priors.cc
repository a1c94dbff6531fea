#include "ecm/priors.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ecm/errors.h"
#include "json.hpp"

namespace ecm::priors {
namespace {

void CheckUniqueIds(const ClassCounts& counts) {
  std::set<int64_t> seen;
  for (const auto& e : counts.entries) {
    if (!seen.insert(e.class_id).second) {
      throw ValidationError("duplicate class_id " + std::to_string(e.class_id));
    }
  }
}

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record; double quotes may wrap a field containing commas.
std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(Trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(Trim(current));
  return fields;
}

int64_t ParseInteger(const std::string& field, size_t line_no,
                     std::string_view column) {
  size_t consumed = 0;
  int64_t value = 0;
  try {
    value = std::stoll(field, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (field.empty() || consumed != field.size()) {
    throw InputError("line " + std::to_string(line_no) + ": field '" +
                     std::string(column) + "' is not an integer: '" + field +
                     "'");
  }
  return value;
}

}  // namespace

int64_t ClassCounts::Total() const {
  int64_t total = 0;
  for (const auto& e : entries) total += e.instance_count;
  return total;
}

const ClassEntry& ClassCounts::Find(int64_t class_id) const {
  for (const auto& e : entries) {
    if (e.class_id == class_id) return e;
  }
  throw LookupError("unknown class_id " + std::to_string(class_id));
}

CountsFormat FormatFromPath(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CountsFormat::kCsv : CountsFormat::kJson;
}

ClassCounts LoadCounts(const std::filesystem::path& path, CountsFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open counts file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  return format == CountsFormat::kCsv ? ParseCountsCsv(text)
                                      : ParseCountsJson(text);
}

ClassCounts ParseCountsJson(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed counts JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("categories") ||
      !doc["categories"].is_array()) {
    throw InputError("counts JSON: missing array field 'categories'");
  }
  ClassCounts counts;
  size_t index = 0;
  for (const auto& cat : doc["categories"]) {
    const std::string where = "categories[" + std::to_string(index++) + "]";
    if (!cat.is_object()) throw InputError(where + ": not an object");
    for (const char* key : {"id", "instance_count"}) {
      if (!cat.contains(key) || !cat[key].is_number_integer()) {
        throw InputError(where + "." + key + ": missing or not an integer");
      }
    }
    if (!cat.contains("name") || !cat["name"].is_string()) {
      throw InputError(where + ".name: missing or not a string");
    }
    ClassEntry entry{cat["id"].get<int64_t>(), cat["name"].get<std::string>(),
                     cat["instance_count"].get<int64_t>()};
    if (entry.class_id < 0) throw InputError(where + ".id: negative");
    if (entry.instance_count < 0) {
      throw InputError(where + ".instance_count: negative");
    }
    counts.entries.push_back(std::move(entry));
  }
  if (doc.contains("background_ratio") && !doc["background_ratio"].is_null()) {
    const auto& r = doc["background_ratio"];
    if (!r.is_number() || r.get<double>() < 0.0) {
      throw InputError("background_ratio: must be a nonnegative number");
    }
    counts.background_ratio = r.get<double>();
  }
  CheckUniqueIds(counts);
  return counts;
}

ClassCounts ParseCountsCsv(std::string_view text) {
  ClassCounts counts;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"id", "name", "instance_count"}) {
        throw InputError("line " + std::to_string(line_no) +
                         ": expected header 'id,name,instance_count'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw InputError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    ClassEntry entry{ParseInteger(fields[0], line_no, "id"), fields[1],
                     ParseInteger(fields[2], line_no, "instance_count")};
    if (entry.class_id < 0 || entry.instance_count < 0) {
      throw InputError("line " + std::to_string(line_no) +
                       ": id and instance_count must be nonnegative");
    }
    counts.entries.push_back(std::move(entry));
  }
  if (!header_seen) throw InputError("counts CSV: missing header");
  CheckUniqueIds(counts);
  return counts;
}

int64_t BackgroundCount(const ClassCounts& counts, double ratio) {
  const int64_t total = counts.Total();
  if (total < 1) throw ValidationError("background count needs Σ n_c ≥ 1");
  if (!std::isfinite(ratio) || ratio < 0.0) {
    throw ValidationError("background ratio must be finite and ≥ 0");
  }
  // long double keeps the product exact for typical counts, so .5 cases are
  // resolved by the rounding rule rather than by representation error.
  const long double product =
      static_cast<long double>(ratio) * static_cast<long double>(total);
  if (product > static_cast<long double>(std::numeric_limits<int64_t>::max())) {
    throw ValidationError("background count overflows int64");
  }
  return std::llroundl(product);
}

ClassStats ComputeClassStats(const ClassCounts& counts, int64_t class_id,
                             int64_t background) {
  const ClassEntry& entry = counts.Find(class_id);
  if (entry.instance_count < 1) {
    throw ValidationError("class " + std::to_string(class_id) +
                          " has no instances; margins undefined");
  }
  if (background < 0) throw ValidationError("background count must be ≥ 0");
  ClassStats stats;
  stats.n_plus = entry.instance_count;
  stats.n_minus = counts.Total() + background - entry.instance_count;
  if (stats.n_minus < 1) {
    throw ValidationError("class " + std::to_string(class_id) +
                          " has no negatives (single class, no background)");
  }
  stats.alpha =
      static_cast<double>(stats.n_minus) / static_cast<double>(stats.n_plus);
  return stats;
}

}  // namespace ecm::priors
