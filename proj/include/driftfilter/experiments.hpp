#pragma once

#include "driftfilter/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace driftfilter {

enum class ExitCode : int { Ok = 0, IoFailure = 1, BadConfig = 2, NumericFailure = 3, CheckMismatch = 4 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiments understood by run(): simulate, covariance, value-table,
/// efficiency, decay, limit-cycle, counterexample, are.
const std::vector<std::string>& experiment_names();

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> step;
    std::optional<std::string> out_dir;
    bool check = false;
};

struct RunResult {
    ExitCode code = ExitCode::Ok;
    nlohmann::json result;                    // also written as <experiment>.json
    std::vector<std::string> files;           // everything written, in order
    std::vector<std::string> problems;        // invariant violations and failed checks
};

/// Runs one experiment, writes its CSV/JSON artifacts and prints a summary to `out`.
/// Exceptions: ConfigError for unusable settings, IoError for output failures,
/// NumericError / PreconditionError for solver failures.
RunResult run(const std::string& experiment, ExperimentConfig cfg, const RunOptions& options, std::ostream& out);

/// Compares `result` against cfg.expected["checks"]: a list of
/// {"path": JSON pointer, "value": number or nested array, "tol": number}.
std::vector<std::string> golden_mismatches(const nlohmann::json& result, const nlohmann::json& expected);

/// 10 significant digits, the format of every number in CSV output.
std::string format_number(double x);

}  // namespace driftfilter
