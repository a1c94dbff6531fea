#ifndef ECM_TOOLS_CLI_H_
#define ECM_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "ecm/sandbox.h"
#include "json.hpp"

namespace ecm::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;     // validation or verification failure
inline constexpr int kExitBadInput = 2;   // malformed flags or input files

// Runs one command line (without the program name). Reports go to `out`,
// diagnostics to `err`.
int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

// Experiment configuration as read by `train --config`:
// {"data": {SyntheticConfig fields}, "train": {TrainConfig fields}}.
// Missing fields keep their defaults; unknown fields throw InputError.
struct ExperimentConfig {
  sandbox::SyntheticConfig data;
  sandbox::TrainConfig train;
};
ExperimentConfig ParseExperimentConfig(const nlohmann::ordered_json& doc);
nlohmann::ordered_json ToJson(const ExperimentConfig& config);

nlohmann::ordered_json ToJson(const sandbox::TrainReport& report);

// Rounds to 12 significant digits, the precision of emitted reports.
double Round12(double x);

}  // namespace ecm::cli

#endif  // ECM_TOOLS_CLI_H_
