#include "driftfilter/config.hpp"

#include <fstream>
#include <sstream>

namespace driftfilter {

using nlohmann::json;

ExpertSchedule ScheduleSpec::build(double horizon) const {
    switch (kind) {
        case Kind::None: return {};
        case Kind::Count: return ExpertSchedule::equidistant_count(n, horizon, gamma);
        case Kind::Spacing: return ExpertSchedule::equidistant_spacing(spacing, horizon, gamma);
        case Kind::Explicit: return ExpertSchedule(dates, gammas);
    }
    return {};
}

ExpertSchedule ScheduleSpec::with_count(int count, double horizon) const {
    if (!has_gamma()) throw ConfigError("schedule.Gamma: required for an N sweep");
    return ExpertSchedule::equidistant_count(count, horizon, gamma);
}

nlohmann::json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); }

const json& require(const json& j, const char* key, const std::string& field) {
    if (!j.is_object()) fail(field, "expected an object");
    if (!j.contains(key)) fail(field.empty() ? std::string(key) : field + "." + key, "missing");
    return j.at(key);
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

Matrix matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array of rows");
    const auto rows = j.size();
    if (!j[0].is_array() || j[0].empty()) fail(field, "expected rows as arrays");
    const auto cols = j[0].size();
    if (rows > static_cast<std::size_t>(kMaxDim) || cols > static_cast<std::size_t>(kMaxDim)) {
        fail(field, "at most " + std::to_string(kMaxDim) + " rows and columns are supported");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) fail(field, "row " + std::to_string(i) + " has the wrong length");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                number(j[i][c], field + "[" + std::to_string(i) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

SymMatrix symmetric(const json& j, const std::string& field) {
    const Matrix m = matrix(j, field);
    if (m.rows() != m.cols()) fail(field, "must be square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) fail(field, "must be symmetric");
    return SymMatrix(m);
}

SymMatrix positive_definite(const json& j, const std::string& field) {
    SymMatrix m = symmetric(j, field);
    if (!is_positive_definite(m)) fail(field, "must be positive definite");
    return m;
}

Vector vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array");
    if (j.size() > static_cast<std::size_t>(kMaxDim)) fail(field, "too long");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

RateFunction rate(const json& j) {
    if (j.is_number()) return RateFunction::constant(j.get<double>());
    const json& knots = require(j, "knots", "model.r");
    if (!knots.is_array() || knots.empty()) fail("model.r.knots", "expected [[t, r], ...]");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const std::string f = "model.r.knots[" + std::to_string(i) + "]";
        if (!knots[i].is_array() || knots[i].size() != 2) fail(f, "expected [t, r]");
        out.emplace_back(number(knots[i][0], f), number(knots[i][1], f));
    }
    try {
        return RateFunction::piecewise_linear(std::move(out));
    } catch (const std::invalid_argument& e) {
        fail("model.r", e.what());
    }
}

MarketModel parse_model(const json& j) {
    MarketModel m;
    m.alpha = symmetric(require(j, "alpha", "model"), "model.alpha");
    m.beta = matrix(require(j, "beta", "model"), "model.beta");
    m.sigma = matrix(require(j, "sigma", "model"), "model.sigma");
    m.delta = vector(require(j, "delta", "model"), "model.delta");
    m.sigma0 = symmetric(require(j, "Sigma0", "model"), "model.Sigma0");
    m.m0 = j.contains("m0") ? vector(j.at("m0"), "model.m0") : m.delta;
    m.rate = j.contains("r") ? rate(j.at("r")) : RateFunction::constant(0.0);
    m.horizon = number(require(j, "T", "model"), "model.T");
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model.") + e.what());
    }
    return m;
}

ScheduleSpec parse_schedule(const json& j, int dim) {
    ScheduleSpec s;
    if (j.is_null()) return s;
    if (j.contains("Gamma")) {
        s.gamma = positive_definite(j.at("Gamma"), "schedule.Gamma");
        if (s.gamma.dim() != dim) fail("schedule.Gamma", "dimension does not match the model");
    }
    if (j.contains("equidistant")) {
        const json& e = j.at("equidistant");
        if (e.contains("N")) {
            if (!e.at("N").is_number_integer() || e.at("N").get<int>() < 0) fail("schedule.equidistant.N", "expected a non-negative integer");
            s.kind = ScheduleSpec::Kind::Count;
            s.n = e.at("N").get<int>();
        } else if (e.contains("Delta")) {
            s.kind = ScheduleSpec::Kind::Spacing;
            s.spacing = number(e.at("Delta"), "schedule.equidistant.Delta");
            if (!(s.spacing > 0.0)) fail("schedule.equidistant.Delta", "must be positive");
        } else {
            fail("schedule.equidistant", "needs N or Delta");
        }
        if (!s.has_gamma()) fail("schedule.Gamma", "missing");
    } else if (j.contains("dates")) {
        s.kind = ScheduleSpec::Kind::Explicit;
        const json& dates = j.at("dates");
        const json& gammas = require(j, "gammas", "schedule");
        if (!dates.is_array() || !gammas.is_array() || dates.size() != gammas.size()) {
            fail("schedule", "dates and gammas must be arrays of equal length");
        }
        for (std::size_t k = 0; k < dates.size(); ++k) {
            s.dates.push_back(number(dates[k], "schedule.dates[" + std::to_string(k) + "]"));
            s.gammas.push_back(positive_definite(gammas[k], "schedule.gammas[" + std::to_string(k) + "]"));
            if (s.gammas.back().dim() != dim) fail("schedule.gammas[" + std::to_string(k) + "]", "dimension does not match the model");
        }
    }
    return s;
}

json schedule_to_json(const ScheduleSpec& s) {
    json j = json::object();
    if (s.has_gamma()) j["Gamma"] = matrix_to_json(s.gamma.mat());
    switch (s.kind) {
        case ScheduleSpec::Kind::None: break;
        case ScheduleSpec::Kind::Count: j["equidistant"] = {{"N", s.n}}; break;
        case ScheduleSpec::Kind::Spacing: j["equidistant"] = {{"Delta", s.spacing}}; break;
        case ScheduleSpec::Kind::Explicit: {
            j["dates"] = s.dates;
            json g = json::array();
            for (const auto& m : s.gammas) g.push_back(matrix_to_json(m.mat()));
            j["gammas"] = std::move(g);
            break;
        }
    }
    return j;
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& field) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(field.empty() ? std::string(key) : field + "." + key, "has the wrong type");
    }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    ExperimentConfig cfg;
    cfg.name = get_or<std::string>(j, "name", "", "");
    cfg.source = get_or<std::string>(j, "source", "", "");
    cfg.experiment = get_or<std::string>(j, "experiment", "", "");
    cfg.model = parse_model(require(j, "model", ""));
    cfg.schedule = parse_schedule(j.contains("schedule") ? j.at("schedule") : json(), cfg.model.dim());
    try {
        cfg.schedule.build(cfg.model.horizon).validate_against(cfg.model.horizon, cfg.model.dim());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    cfg.grid_step = get_or<double>(j, "grid_step", cfg.grid_step, "");
    if (!(cfg.grid_step > 0.0)) fail("grid_step", "must be positive");
    cfg.min_steps = get_or<int>(j, "min_steps", cfg.min_steps, "");
    if (cfg.min_steps < 1) fail("min_steps", "must be at least 1");
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "");
    cfg.x0 = get_or<double>(j, "x0", cfg.x0, "");
    if (!(cfg.x0 > 0.0)) fail("x0", "must be positive");
    cfg.out_dir = get_or<std::string>(j, "out_dir", cfg.out_dir, "");
    cfg.regime = get_or<std::string>(j, "regime", cfg.regime, "");
    if (cfg.regime != "R" && cfg.regime != "E" && cfg.regime != "C" && cfg.regime != "F") fail("regime", "expected R, E, C or F");
    cfg.ns = get_or<std::vector<int>>(j, "N_values", cfg.ns, "");
    cfg.u = get_or<double>(j, "u", cfg.u, "");
    cfg.paths = get_or<int>(j, "paths", cfg.paths, "");
    if (cfg.paths < 1) fail("paths", "must be at least 1");
    cfg.periods = get_or<int>(j, "periods", cfg.periods, "");
    cfg.steps_per_period = get_or<int>(j, "steps_per_period", cfg.steps_per_period, "");
    if (cfg.steps_per_period < 1) fail("steps_per_period", "must be at least 1");
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        cfg.tolerances.value = get_or<double>(t, "value", cfg.tolerances.value, "tolerances");
        cfg.tolerances.value_large_n = get_or<double>(t, "value_large_n", cfg.tolerances.value_large_n, "tolerances");
        cfg.tolerances.efficiency = get_or<double>(t, "efficiency", cfg.tolerances.efficiency, "tolerances");
        cfg.tolerances.are_residual = get_or<double>(t, "are_residual", cfg.tolerances.are_residual, "tolerances");
        cfg.tolerances.periodicity = get_or<double>(t, "periodicity", cfg.tolerances.periodicity, "tolerances");
    }
    if (j.contains("expected")) cfg.expected = j.at("expected");
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config: syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          e.what());
    }
    return parse_config(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json to_json(const ExperimentConfig& cfg) {
    const MarketModel& m = cfg.model;
    json model = {
        {"alpha", matrix_to_json(m.alpha.mat())}, {"beta", matrix_to_json(m.beta)},     {"sigma", matrix_to_json(m.sigma)},
        {"delta", vector_to_json(m.delta)},       {"m0", vector_to_json(m.m0)},        {"Sigma0", matrix_to_json(m.sigma0.mat())},
        {"T", m.horizon},
    };
    if (m.rate.is_constant()) {
        model["r"] = m.rate.knots().front().second;
    } else {
        json knots = json::array();
        for (const auto& [t, r] : m.rate.knots()) knots.push_back({t, r});
        model["r"] = {{"knots", knots}};
    }
    json j = {
        {"name", cfg.name},
        {"source", cfg.source},
        {"experiment", cfg.experiment},
        {"model", model},
        {"schedule", schedule_to_json(cfg.schedule)},
        {"grid_step", cfg.grid_step},
        {"min_steps", cfg.min_steps},
        {"seed", cfg.seed},
        {"x0", cfg.x0},
        {"out_dir", cfg.out_dir},
        {"regime", cfg.regime},
        {"N_values", cfg.ns},
        {"u", cfg.u},
        {"paths", cfg.paths},
        {"periods", cfg.periods},
        {"steps_per_period", cfg.steps_per_period},
        {"tolerances",
         {{"value", cfg.tolerances.value},
          {"value_large_n", cfg.tolerances.value_large_n},
          {"efficiency", cfg.tolerances.efficiency},
          {"are_residual", cfg.tolerances.are_residual},
          {"periodicity", cfg.tolerances.periodicity}}},
    };
    if (!cfg.expected.is_null()) j["expected"] = cfg.expected;
    return j;
}

}  // namespace driftfilter
