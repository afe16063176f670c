#pragma once

#include "driftfilter/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftfilter {

/// Malformed or invalid configuration; the message names the field (and line for syntax errors).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Expert dates as written in a config: none, N equidistant dates over [0, T),
/// dates every Delta, or an explicit list.
struct ScheduleSpec {
    enum class Kind { None, Count, Spacing, Explicit };
    Kind kind = Kind::None;
    int n = 0;
    double spacing = 0.0;
    SymMatrix gamma;                  // Count / Spacing
    std::vector<double> dates;        // Explicit
    std::vector<SymMatrix> gammas;    // Explicit

    ExpertSchedule build(double horizon) const;
    /// The same layout with N equidistant dates and this spec's Gamma.
    ExpertSchedule with_count(int count, double horizon) const;
    bool has_gamma() const { return !gamma.empty(); }
};

struct Tolerances {
    double value = 1e-3;
    double value_large_n = 2e-3;     // rows with N >= 1000
    double efficiency = 0.002;       // absolute, as a fraction
    double are_residual = 1e-9;
    double periodicity = 1e-6;
};

struct ExperimentConfig {
    std::string name;
    std::string source;
    std::string experiment;
    MarketModel model;
    ScheduleSpec schedule;
    double grid_step = 1e-3;
    int min_steps = 200;
    std::uint64_t seed = 0;
    double x0 = 1.0;
    std::string out_dir = ".";
    std::string regime = "C";       // limit-cycle, counterexample
    std::vector<int> ns;            // value-table, decay
    double u = 0.0;                 // decay evaluation time (0: T)
    int paths = 1;                  // simulate
    int periods = 10;               // counterexample periodicity check, limit-cycle tail
    int steps_per_period = 400;
    Tolerances tolerances;
    nlohmann::json expected;        // golden checks for --check

    GridSpec grid() const { return GridSpec{grid_step, min_steps, true}; }
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

}  // namespace driftfilter
