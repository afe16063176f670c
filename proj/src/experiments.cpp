#include "driftfilter/experiments.hpp"

#include "driftfilter/asymptotics.hpp"
#include "driftfilter/filters.hpp"
#include "driftfilter/portfolio.hpp"
#include "driftfilter/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace driftfilter {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"simulate", "covariance", "value-table", "efficiency",
                                                "decay",    "limit-cycle", "counterexample", "are"};
    return names;
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace {

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::string& experiment, const std::vector<std::string>& columns)
        : path_(path), out_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
        out_ << "# driftfilter v1 " << experiment << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    CsvWriter& cell(const std::string& s) {
        out_ << (first_ ? "" : ",") << s;
        first_ = false;
        return *this;
    }
    CsvWriter& cell(double x) { return cell(format_number(x)); }
    CsvWriter& cells(const Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) cell(m(i, j));
        return *this;
    }
    CsvWriter& cells(const Vector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) cell(v(i));
        return *this;
    }
    void end() {
        out_ << '\n';
        first_ = true;
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing " + path_.string());
    }

private:
    fs::path path_;
    std::ofstream out_;
    bool first_ = true;
};

std::vector<std::string> indexed(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

std::vector<std::string> matrix_columns(const std::string& prefix, int d) {
    std::vector<std::string> out;
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) out.push_back(prefix + std::to_string(i) + std::to_string(j));
    return out;
}

template <class... Ts>
std::vector<std::string> concat(std::vector<std::string> first, const Ts&... rest) {
    (first.insert(first.end(), rest.begin(), rest.end()), ...);
    return first;
}

json sym_to_json(const SymMatrix& m) { return matrix_to_json(m.mat()); }

json eigenvalues_json(const SymMatrix& m) { return vector_to_json(sym_eigen(m).values); }

struct Context {
    const ExperimentConfig& cfg;
    fs::path dir;
    std::ostream& out;
    RunResult& result;

    fs::path file(const std::string& name) {
        const fs::path p = dir / name;
        result.files.push_back(p.string());
        return p;
    }
};

double loewner_excess(const SymMatrix& small, const SymMatrix& big) { return std::max(0.0, -min_eig(big - small)); }

void run_simulate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const MarketModel& model = cfg.model;
    const ExpertSchedule schedule = cfg.schedule.build(model.horizon);
    const int d = model.dim();
    CsvWriter paths(ctx.file("simulate.csv"), "simulate",
                    concat(std::vector<std::string>{"path", "t"}, indexed("mu", d), indexed("muhat_R", d), indexed("muhat_E", d),
                           indexed("muhat_C", d), std::vector<std::string>{"logX_R", "logX_E", "logX_C", "logX_F"}));
    CsvWriter experts(ctx.file("experts.csv"), "simulate", concat(std::vector<std::string>{"path", "k", "t"}, indexed("z", d)));
    json summary = json::array();
    for (int p = 0; p < cfg.paths; ++p) {
        const std::uint64_t seed = path_seed(cfg.seed, static_cast<std::uint64_t>(p));
        const SimulationPath path = simulate_path(model, schedule, cfg.grid_step, seed);
        const FilterPath fr = filter_path(model, schedule, path, covariance_path(model, ExpertSchedule{}, Regime::R, path.grid));
        const FilterPath fe = filter_path(model, schedule, path, Regime::E);
        const FilterPath fc = filter_path(model, schedule, path, Regime::C);
        const FilterPath ff = filter_path(model, schedule, path, Regime::F);
        const WealthPath wr = simulate_wealth(model, path, fr, cfg.x0);
        const WealthPath we = simulate_wealth(model, path, fe, cfg.x0);
        const WealthPath wc = simulate_wealth(model, path, fc, cfg.x0);
        const WealthPath wf = simulate_wealth(model, path, ff, cfg.x0);
        for (std::size_t i = 0; i < path.grid.points.size(); ++i) {
            paths.cell(std::to_string(p)).cell(path.grid.points[i]).cells(path.mu[i]).cells(fr.mu_hat[i]).cells(fe.mu_hat[i]).cells(fc.mu_hat[i]);
            paths.cell(std::log(wr.wealth[i])).cell(std::log(we.wealth[i])).cell(std::log(wc.wealth[i])).cell(std::log(wf.wealth[i]));
            paths.end();
        }
        for (const auto& e : path.experts) {
            experts.cell(std::to_string(p)).cell(std::to_string(e.k)).cell(e.t).cells(e.z);
            experts.end();
        }
        summary.push_back({{"path", p},
                           {"seed", seed},
                           {"points", path.grid.points.size()},
                           {"experts", path.experts.size()},
                           {"log_terminal", {{"R", wr.log_terminal}, {"E", we.log_terminal}, {"C", wc.log_terminal}, {"F", wf.log_terminal}}}});
    }
    paths.close();
    experts.close();
    ctx.result.result = {{"experiment", "simulate"}, {"master_seed", cfg.seed}, {"paths", summary}};
    ctx.out << "simulated " << cfg.paths << " path(s), master seed " << cfg.seed << '\n';
}

void run_covariance(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const MarketModel& model = cfg.model;
    const ExpertSchedule schedule = cfg.schedule.build(model.horizon);
    const TimeGrid grid = make_grid(model.horizon, schedule.dates(), cfg.grid());
    const int d = model.dim();
    const CovariancePath r = covariance_path(model, ExpertSchedule{}, Regime::R, grid);
    const CovariancePath e = covariance_path(model, schedule, Regime::E, grid);
    const CovariancePath c = covariance_path(model, schedule, Regime::C, grid);

    CsvWriter csv(ctx.file("covariance.csv"), "covariance",
                  concat(std::vector<std::string>{"regime", "t", "kind"}, matrix_columns("g", d), std::vector<std::string>{"norm", "trace"}));
    for (const CovariancePath* path : {&r, &e, &c}) {
        const std::string name(regime_name(path->regime));
        std::size_t next_date = 0;
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            const bool jumps = path->regime != Regime::R;
            if (jumps && next_date < path->date_grid_index.size() && path->date_grid_index[next_date] == i) {
                const SymMatrix& left = path->left_limits[next_date];
                csv.cell(name).cell(grid.points[i]).cell("left").cells(left.mat()).cell(spectral_norm(left)).cell(trace(left));
                csv.end();
                ++next_date;
            }
            const SymMatrix& g = path->values[i];
            csv.cell(name).cell(grid.points[i]).cell("value").cells(g.mat()).cell(spectral_norm(g)).cell(trace(g));
            csv.end();
        }
    }
    csv.close();

    double c_vs_r = 0.0;
    double c_vs_e = 0.0;
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        c_vs_r = std::max(c_vs_r, loewner_excess(c.values[i], r.values[i]));
        c_vs_e = std::max(c_vs_e, loewner_excess(c.values[i], e.values[i]));
    }
    ctx.result.result = {{"experiment", "covariance"},
                         {"points", grid.points.size()},
                         {"dates", schedule.size()},
                         {"terminal", {{"R", sym_to_json(r.values.back())}, {"E", sym_to_json(e.values.back())}, {"C", sym_to_json(c.values.back())}}},
                         {"max_order_violation", {{"C_le_R", c_vs_r}, {"C_le_E", c_vs_e}}}};
    if (c_vs_r > 1e-8 || c_vs_e > 1e-8) ctx.result.problems.push_back("covariance ordering violated");
    ctx.out << "covariance paths on " << grid.points.size() << " points; worst ordering excess C<=R "
            << format_number(c_vs_r) << ", C<=E " << format_number(c_vs_e) << '\n';
}

void run_value_table(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const MarketModel& model = cfg.model;
    const std::vector<int> ns = cfg.ns.empty() ? std::vector<int>{0, 10, 100, 1000, 10000} : cfg.ns;
    CsvWriter csv(ctx.file("value_table.csv"), "value-table", {"N", "V_E", "V_C", "rho_E", "rho_C"});
    json rows = json::array();
    double worst_cross = 0.0;
    double v_r = 0.0;
    double v_f = 0.0;
    ctx.out << std::setw(7) << "N" << std::setw(10) << "V^E" << std::setw(10) << "V^C" << std::setw(10) << "rho^E"
            << std::setw(10) << "rho^C" << '\n';
    for (int n : ns) {
        const ValueReport rep = value_report(model, cfg.schedule.with_count(n, model.horizon), cfg.x0, cfg.grid());
        for (Regime r : kAllRegimes) {
            const std::size_t i = ValueReport::slot(r);
            worst_cross = std::max(worst_cross, std::abs(rep.rho[i] - rep.rho_cross_check[i]) / rep.rho[i]);
        }
        const double ve = rep.v(Regime::E), vc = rep.v(Regime::C);
        const double re = rep.efficiency(Regime::E), rc = rep.efficiency(Regime::C);
        v_r = rep.v(Regime::R);
        v_f = rep.v(Regime::F);
        csv.cell(std::to_string(n)).cell(ve).cell(vc).cell(re).cell(rc);
        csv.end();
        rows.push_back({{"N", n},
                        {"V_R", v_r},
                        {"V_E", ve},
                        {"V_C", vc},
                        {"V_F", v_f},
                        {"rho_R", rep.efficiency(Regime::R)},
                        {"rho_E", re},
                        {"rho_C", rc},
                        {"filter_term_E", rep.terms[ValueReport::slot(Regime::E)].filter_term},
                        {"filter_term_C", rep.terms[ValueReport::slot(Regime::C)].filter_term}});
        if (std::max(v_r, ve) > vc + 1e-9 || vc > v_f + 1e-9) {
            ctx.result.problems.push_back("value ordering violated at N = " + std::to_string(n));
        }
        ctx.out << std::setw(7) << n << std::fixed << std::setprecision(4) << std::setw(10) << ve << std::setw(10) << vc
                << std::setprecision(2) << std::setw(10) << 100.0 * re << std::setw(10) << 100.0 * rc << '\n'
                << std::defaultfloat;
    }
    csv.close();
    ctx.out << "V^R(x0) = " << format_number(v_r) << ", V^F(x0) = " << format_number(v_f) << '\n';
    if (worst_cross > 1e-9) ctx.result.problems.push_back("efficiency formulas disagree");
    ctx.result.result = {{"experiment", "value-table"}, {"x0", cfg.x0}, {"V_R", v_r}, {"V_F", v_f},
                         {"rows", rows}, {"efficiency_cross_check_max_gap", worst_cross}};
}

void run_efficiency(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ExpertSchedule schedule = cfg.schedule.build(cfg.model.horizon);
    CsvWriter csv(ctx.file("efficiency.csv"), "efficiency", {"regime", "rho_integral", "rho_capital", "relative_gap"});
    json regimes = json::object();
    for (Regime r : kAllRegimes) {
        const Efficiency e = efficiency(cfg.model, schedule, r, cfg.grid());
        const std::string name(regime_name(r));
        csv.cell(name).cell(e.by_integral).cell(e.by_capital).cell(e.relative_gap);
        csv.end();
        regimes[name] = {{"rho_integral", e.by_integral}, {"rho_capital", e.by_capital}, {"relative_gap", e.relative_gap}};
        if (e.relative_gap > 1e-9) ctx.result.problems.push_back("efficiency formulas disagree for regime " + name);
        ctx.out << "rho^" << name << " = " << std::fixed << std::setprecision(2) << 100.0 * e.by_integral << "%\n"
                << std::defaultfloat;
    }
    csv.close();
    ctx.result.result = {{"experiment", "efficiency"}, {"N", schedule.size()}, {"regimes", regimes}};
}

void run_decay(Context& ctx) {
    const auto& cfg = ctx.cfg;
    if (!cfg.schedule.has_gamma()) throw ConfigError("schedule.Gamma: required for the decay experiment");
    const std::vector<int> ns = cfg.ns.empty() ? std::vector<int>{10, 100, 1000, 10000} : cfg.ns;
    const double u = cfg.u > 0.0 ? cfg.u : cfg.model.horizon;
    const DecaySeries s = decay_experiment(cfg.model, u, ns, cfg.schedule.gamma, cfg.grid());
    CsvWriter csv(ctx.file("decay.csv"), "decay", {"N", "norm_E", "norm_C"});
    for (std::size_t i = 0; i < ns.size(); ++i) {
        csv.cell(std::to_string(ns[i])).cell(s.norms_e[i]).cell(s.norms_c[i]);
        csv.end();
        ctx.out << "N = " << ns[i] << ": |gamma^E| = " << format_number(s.norms_e[i]) << ", |gamma^C| = " << format_number(s.norms_c[i]) << '\n';
    }
    csv.close();
    ctx.result.result = {{"experiment", "decay"}, {"u", u}, {"N", ns}, {"norms_E", s.norms_e}, {"norms_C", s.norms_c},
                         {"bound_C", s.bound_c}, {"sigma0_norm", s.sigma0_norm},
                         {"strictly_decreasing_E", s.strictly_decreasing_e}, {"strictly_decreasing_C", s.strictly_decreasing_c},
                         {"C_below_E", s.c_below_e}};
    if (!s.c_below_e) ctx.result.problems.push_back("|gamma^C| exceeded |gamma^E|");
}

double require_spacing(const ExperimentConfig& cfg) {
    if (cfg.schedule.kind != ScheduleSpec::Kind::Spacing) throw ConfigError("schedule.equidistant.Delta: required for this experiment");
    return cfg.schedule.spacing;
}

Regime cycle_regime(const ExperimentConfig& cfg) {
    const Regime r = parse_regime(cfg.regime);
    if (r != Regime::E && r != Regime::C) throw ConfigError("regime: must be E or C for this experiment");
    return r;
}

json report_json(const MonotonicityReport& rep) {
    return {{"norm_start", rep.norm_start},       {"norm_end", rep.norm_end},
            {"min_norm", rep.min_norm},           {"max_norm", rep.max_norm},
            {"trace_start", rep.trace_start},     {"trace_end", rep.trace_end},
            {"min_trace", rep.min_trace},         {"max_trace", rep.max_trace},
            {"trace_dip", rep.trace_dip},         {"liminf_trace", rep.liminf_trace},
            {"limsup_trace", rep.limsup_trace},   {"liminf_gap", rep.liminf_gap},
            {"limsup_gap", rep.limsup_gap},       {"norm_nondecreasing", rep.norm_nondecreasing},
            {"loewner_nondecreasing", rep.loewner_nondecreasing},
            {"alpha_scalar", rep.alpha_scalar},   {"sigma_scalar", rep.sigma_scalar},
            {"gamma_proportional", rep.gamma_proportional},
            {"predicts_trace_law", rep.predicts_trace_law},
            {"predicts_norm_monotone", rep.predicts_norm_monotone}};
}

json cycle_json(const LimitCycle& c) {
    return {{"regime", std::string(regime_name(c.regime))},
            {"Delta", c.delta},
            {"Gamma", sym_to_json(c.gamma)},
            {"L", sym_to_json(c.lower)},
            {"U", sym_to_json(c.upper)},
            {"converged", c.converged},
            {"iterations", c.iterations},
            {"start_order", comparability_name(c.start_order)}};
}

void write_profile(Context& ctx, const std::string& name, const std::string& experiment, const LimitCycle& c) {
    const int d = c.gamma.dim();
    CsvWriter csv(ctx.file(name), experiment, concat(std::vector<std::string>{"h", "norm", "trace"}, matrix_columns("g", d)));
    for (std::size_t j = 0; j < c.profile.size(); ++j) {
        csv.cell(c.h[j]).cell(spectral_norm(c.profile[j])).cell(trace(c.profile[j])).cells(c.profile[j].mat());
        csv.end();
    }
    csv.close();
}

void run_limit_cycle(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Regime regime = cycle_regime(cfg);
    const double delta = require_spacing(cfg);
    CycleOptions opts;
    opts.steps_per_period = cfg.steps_per_period;
    const LimitCycle c = limit_cycle(cfg.model, regime, delta, cfg.schedule.gamma, opts);
    const MonotonicityReport rep = monotonicity_report(cfg.model, c, cfg.periods);
    write_profile(ctx, "limit_cycle.csv", "limit-cycle", c);
    json j = cycle_json(c);
    j["experiment"] = "limit-cycle";
    j["report"] = report_json(rep);
    ctx.result.result = j;
    ctx.out << "limit cycle (" << regime_name(regime) << ", Delta = " << delta << ") converged after " << c.iterations
            << " periods; tr L = " << format_number(trace(c.lower)) << ", tr U = " << format_number(trace(c.upper))
            << ", trace dip = " << format_number(rep.trace_dip) << '\n';
}

void run_counterexample(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Regime regime = cycle_regime(cfg);
    const double delta = require_spacing(cfg);
    json j = {{"experiment", "counterexample"}, {"regime", std::string(regime_name(regime))}, {"Delta", delta}};

    bool constructed = false;
    try {
        const PeriodicGamma pg = build_periodic_gamma(cfg.model, regime, delta, cfg.steps_per_period);
        const PeriodicityCheck chk = check_periodicity(cfg.model, regime, delta, pg, cfg.periods, cfg.steps_per_period);
        j["constructed"] = {{"Gamma", sym_to_json(pg.gamma)},
                            {"eigenvalues", eigenvalues_json(pg.gamma)},
                            {"L", sym_to_json(pg.lower)},
                            {"U", sym_to_json(pg.upper)},
                            {"periodicity", {{"periods", chk.periods}, {"max_successive_gap", chk.max_successive_gap},
                                             {"max_drift", chk.max_drift}, {"update_gap", chk.update_gap}}}};
        constructed = true;
        if (chk.max_successive_gap > cfg.tolerances.periodicity) ctx.result.problems.push_back("constructed Gamma is not periodic");
        ctx.out << "constructed Gamma eigenvalues: " << eigenvalues_json(pg.gamma).dump() << '\n';
    } catch (const PreconditionError& e) {
        j["constructed"] = {{"error", e.what()}, {"U_minus_L_eigenvalues", eigenvalues_json(
            PeriodFlow(cfg.model, regime, delta, cfg.steps_per_period).advance(cfg.model.sigma0) - cfg.model.sigma0)}};
        ctx.result.problems.push_back(std::string("construction failed: ") + e.what());
        ctx.out << "construction failed: " << e.what() << '\n';
    }

    if (cfg.schedule.has_gamma()) {
        CycleOptions opts;
        opts.steps_per_period = cfg.steps_per_period;
        const LimitCycle c = limit_cycle(cfg.model, regime, delta, cfg.schedule.gamma, opts);
        const MonotonicityReport rep = monotonicity_report(cfg.model, c, cfg.periods);
        const SymMatrix rebuilt = spd_inverse(spd_inverse(c.lower) - spd_inverse(c.upper));
        j["configured"] = cycle_json(c);
        j["configured"]["Gamma_eigenvalues"] = eigenvalues_json(cfg.schedule.gamma);
        j["configured"]["U_minus_Sigma0_norm"] = spectral_norm(c.upper - cfg.model.sigma0);
        j["configured"]["L_minus_Sigma0_norm"] = spectral_norm(c.lower - cfg.model.sigma0);
        j["configured"]["Gamma_from_cycle_gap"] = spectral_norm(rebuilt - cfg.schedule.gamma);
        j["configured"]["report"] = report_json(rep);
        write_profile(ctx, "counterexample_cycle.csv", "counterexample", c);
        ctx.out << "configured Gamma: limit cycle tr L = " << format_number(trace(c.lower)) << ", min tr = "
                << format_number(rep.min_trace) << ", trace dip = " << format_number(rep.trace_dip) << '\n';
    }
    ctx.result.result = j;
    if (!constructed) ctx.result.code = ExitCode::NumericFailure;
}

void run_are(Context& ctx) {
    const auto& cfg = ctx.cfg;
    AreOptions opts;
    opts.tol = cfg.tolerances.are_residual;
    const bool stab = model_stabilizable(cfg.model);
    const bool det = model_detectable(cfg.model);
    const AreSolution s = solve_are(cfg.model, opts);
    const SymMatrix lyap = lyapunov_fixed_point(cfg.model);
    ctx.result.result = {{"experiment", "are"},
                         {"gamma_inf", sym_to_json(s.gamma_inf)},
                         {"residual_norm", s.residual_norm},
                         {"iterations", s.iterations},
                         {"newton_steps", s.newton_steps},
                         {"flow_time", s.flow_time},
                         {"method", s.method},
                         {"uniqueness_gap", s.uniqueness_gap},
                         {"stabilizable", stab},
                         {"detectable", det},
                         {"lyapunov_fixed_point", sym_to_json(lyap)},
                         {"below_lyapunov", loewner_leq(s.gamma_inf, lyap, 1e-9)}};
    ctx.out << "gamma_inf residual " << format_number(s.residual_norm) << " after " << s.iterations
            << " steps; uniqueness gap " << format_number(s.uniqueness_gap) << '\n';
}

const json* at_pointer(const json& j, const std::string& pointer) {
    try {
        const json::json_pointer p(pointer);
        if (!j.contains(p)) return nullptr;
        return &j.at(p);
    } catch (const json::exception&) {
        return nullptr;
    }
}

void compare_value(const json& got, const json& want, double tol, const std::string& where, std::vector<std::string>& out) {
    if (want.is_number()) {
        if (!got.is_number()) {
            out.push_back(where + ": expected a number");
        } else if (!(std::abs(got.get<double>() - want.get<double>()) <= tol)) {
            out.push_back(where + ": got " + format_number(got.get<double>()) + ", expected " +
                          format_number(want.get<double>()) + " +/- " + format_number(tol));
        }
        return;
    }
    if (want.is_array()) {
        if (!got.is_array() || got.size() != want.size()) {
            out.push_back(where + ": shape mismatch");
            return;
        }
        for (std::size_t i = 0; i < want.size(); ++i) compare_value(got[i], want[i], tol, where + "/" + std::to_string(i), out);
        return;
    }
    if (got != want) out.push_back(where + ": got " + got.dump() + ", expected " + want.dump());
}

}  // namespace

std::vector<std::string> golden_mismatches(const json& result, const json& expected) {
    std::vector<std::string> out;
    if (!expected.is_object() || !expected.contains("checks")) return out;
    for (const json& c : expected.at("checks")) {
        const std::string path = c.value("path", "");
        const double tol = c.value("tol", 0.0);
        const json* got = at_pointer(result, path);
        if (got == nullptr) {
            out.push_back(path + ": missing from result");
            continue;
        }
        compare_value(*got, c.at("value"), tol, path, out);
    }
    return out;
}

RunResult run(const std::string& experiment, ExperimentConfig cfg, const RunOptions& options, std::ostream& out) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
        throw ConfigError("experiment: unknown experiment '" + experiment + "'");
    }
    cfg.experiment = experiment;
    if (options.seed) cfg.seed = *options.seed;
    if (options.step) {
        if (!(*options.step > 0.0)) throw ConfigError("step: must be positive");
        cfg.grid_step = *options.step;
    }
    if (options.out_dir) cfg.out_dir = *options.out_dir;

    RunResult result;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
    Context ctx{cfg, fs::path(cfg.out_dir), out, result};

    try {
        if (experiment == "simulate") run_simulate(ctx);
        else if (experiment == "covariance") run_covariance(ctx);
        else if (experiment == "value-table") run_value_table(ctx);
        else if (experiment == "efficiency") run_efficiency(ctx);
        else if (experiment == "decay") run_decay(ctx);
        else if (experiment == "limit-cycle") run_limit_cycle(ctx);
        else if (experiment == "counterexample") run_counterexample(ctx);
        else run_are(ctx);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const fs::path json_path = ctx.file(experiment + ".json");
    std::ofstream js(json_path);
    if (!js) throw IoError("cannot write " + json_path.string());
    js << result.result.dump(2) << '\n';
    js.close();
    if (!js) throw IoError("failed writing " + json_path.string());

    if (!result.problems.empty() && result.code == ExitCode::Ok) result.code = ExitCode::NumericFailure;
    if (options.check) {
        if (cfg.expected.is_null()) throw ConfigError("expected: --check needs an expected block in the config");
        const auto mismatches = golden_mismatches(result.result, cfg.expected);
        for (const auto& m : mismatches) out << "MISMATCH " << m << '\n';
        if (!mismatches.empty()) {
            result.problems.insert(result.problems.end(), mismatches.begin(), mismatches.end());
            result.code = ExitCode::CheckMismatch;
        } else {
            out << "all " << cfg.expected.at("checks").size() << " golden checks passed\n";
        }
    }
    for (const auto& p : result.problems) out << "problem: " << p << '\n';
    return result;
}

}  // namespace driftfilter
