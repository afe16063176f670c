#include "driftfilter/asymptotics.hpp"
#include "driftfilter/config.hpp"
#include "driftfilter/experiments.hpp"
#include "driftfilter/portfolio.hpp"
#include "driftfilter/riccati.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace driftfilter;

namespace {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

DenseMatrix dense(const SymMatrix& s) { return DenseMatrix(s.mat()); }
DenseMatrix dense(const Matrix& m) { return DenseMatrix(m); }
DenseVector dense(const Vector& v) { return DenseVector(v); }

Matrix fixed(const DenseMatrix& m) {
    if (m.rows() > kMaxDim || m.cols() > kMaxDim) throw DimensionError("matrix exceeds the supported dimension");
    return Matrix(m);
}
Vector fixed(const DenseVector& v) {
    if (v.size() > kMaxDim) throw DimensionError("vector exceeds the supported dimension");
    return Vector(v);
}

py::list matrices(const std::vector<SymMatrix>& xs) {
    py::list out;
    for (const auto& x : xs) out.append(dense(x));
    return out;
}

ExpertSchedule make_schedule(const std::vector<double>& dates, const std::vector<DenseMatrix>& gammas) {
    std::vector<SymMatrix> g;
    g.reserve(gammas.size());
    for (const auto& m : gammas) g.emplace_back(fixed(m));
    return ExpertSchedule(dates, std::move(g));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Drift filtering with expert opinions and log-utility portfolio values";

    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

    py::enum_<Regime>(m, "Regime")
        .value("R", Regime::R)
        .value("E", Regime::E)
        .value("C", Regime::C)
        .value("F", Regime::F);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](double max_step, int min_steps) { return GridSpec{max_step, min_steps, true}; }),
             py::arg("max_step") = 1e-3, py::arg("min_steps_per_interval") = 200)
        .def_readwrite("max_step", &GridSpec::max_step)
        .def_readwrite("min_steps_per_interval", &GridSpec::min_steps_per_interval);

    py::class_<MarketModel>(m, "MarketModel")
        .def(py::init([](const DenseMatrix& alpha, const DenseMatrix& beta, const DenseMatrix& sigma, const DenseVector& delta,
                         const DenseMatrix& sigma0, double horizon, double rate, std::optional<DenseVector> m0) {
                 MarketModel mm;
                 mm.alpha = SymMatrix(fixed(alpha));
                 mm.beta = fixed(beta);
                 mm.sigma = fixed(sigma);
                 mm.delta = fixed(delta);
                 mm.m0 = m0 ? fixed(*m0) : mm.delta;
                 mm.sigma0 = SymMatrix(fixed(sigma0));
                 mm.horizon = horizon;
                 mm.rate = RateFunction::constant(rate);
                 mm.validate();
                 return mm;
             }),
             py::arg("alpha"), py::arg("beta"), py::arg("sigma"), py::arg("delta"), py::arg("sigma0"), py::arg("horizon") = 1.0,
             py::arg("rate") = 0.0, py::arg("m0") = py::none())
        .def_property_readonly("dim", &MarketModel::dim)
        .def_property_readonly("alpha", [](const MarketModel& mm) { return dense(mm.alpha); })
        .def_property_readonly("beta", [](const MarketModel& mm) { return dense(mm.beta); })
        .def_property_readonly("sigma", [](const MarketModel& mm) { return dense(mm.sigma); })
        .def_property_readonly("sigma0", [](const MarketModel& mm) { return dense(mm.sigma0); })
        .def_property_readonly("delta", [](const MarketModel& mm) { return dense(mm.delta); })
        .def_readonly("horizon", &MarketModel::horizon);

    py::class_<ExpertSchedule>(m, "ExpertSchedule")
        .def(py::init(&make_schedule), py::arg("dates"), py::arg("gammas"))
        .def_static(
            "equidistant", [](int n, double horizon, const DenseMatrix& gamma) {
                return ExpertSchedule::equidistant_count(n, horizon, SymMatrix(fixed(gamma)));
            },
            py::arg("n"), py::arg("horizon"), py::arg("gamma"))
        .def_property_readonly("dates", &ExpertSchedule::dates)
        .def("__len__", &ExpertSchedule::size);

    m.def(
        "covariance_path",
        [](const MarketModel& mm, const ExpertSchedule& s, Regime r, const GridSpec& spec) {
            const CovariancePath p = covariance_path(mm, s, r, make_grid(mm.horizon, s.dates(), spec));
            return py::make_tuple(p.grid.points, matrices(p.values), matrices(p.left_limits));
        },
        py::arg("model"), py::arg("schedule"), py::arg("regime"), py::arg("grid") = GridSpec{},
        "Returns (times, covariances, left limits at the expert dates).");

    m.def("bayes_update", [](const DenseMatrix& prior, const DenseMatrix& expert) {
        const BayesUpdate u = bayes_update(SymMatrix(fixed(prior)), SymMatrix(fixed(expert)));
        return py::make_tuple(dense(u.gamma_plus), dense(u.weight));
    });

    m.def(
        "solve_are",
        [](const MarketModel& mm) {
            const AreSolution s = solve_are(mm);
            py::dict d;
            d["gamma_inf"] = dense(s.gamma_inf);
            d["residual_norm"] = s.residual_norm;
            d["uniqueness_gap"] = s.uniqueness_gap;
            d["iterations"] = s.iterations;
            d["newton_steps"] = s.newton_steps;
            return d;
        },
        py::arg("model"));

    m.def("value_function", &value_function, py::arg("model"), py::arg("schedule"), py::arg("regime"), py::arg("x0") = 1.0,
          py::arg("grid") = GridSpec{});
    m.def(
        "efficiency",
        [](const MarketModel& mm, const ExpertSchedule& s, Regime r, const GridSpec& spec) {
            const Efficiency e = efficiency(mm, s, r, spec);
            return py::make_tuple(e.by_integral, e.by_capital);
        },
        py::arg("model"), py::arg("schedule"), py::arg("regime"), py::arg("grid") = GridSpec{});
    m.def("optimal_strategy", [](const DenseVector& mu_hat, double r, const MarketModel& mm) {
        return dense(optimal_strategy(fixed(mu_hat), r, mm));
    });

    m.def(
        "limit_cycle",
        [](const MarketModel& mm, Regime r, double delta, const DenseMatrix& gamma) {
            const LimitCycle c = limit_cycle(mm, r, delta, SymMatrix(fixed(gamma)));
            const MonotonicityReport rep = monotonicity_report(mm, c);
            py::dict d;
            d["lower"] = dense(c.lower);
            d["upper"] = dense(c.upper);
            d["iterations"] = c.iterations;
            d["h"] = c.h;
            d["profile"] = matrices(c.profile);
            d["trace_dip"] = rep.trace_dip;
            d["liminf_gap"] = rep.liminf_gap;
            d["limsup_gap"] = rep.limsup_gap;
            return d;
        },
        py::arg("model"), py::arg("regime"), py::arg("delta"), py::arg("gamma"));

    m.def(
        "build_periodic_gamma",
        [](const MarketModel& mm, Regime r, double delta, int steps) { return dense(build_periodic_gamma(mm, r, delta, steps).gamma); },
        py::arg("model"), py::arg("regime"), py::arg("delta"), py::arg("steps_per_period") = 400);

    m.def(
        "simulate_log_wealth",
        [](const MarketModel& mm, const ExpertSchedule& s, Regime r, double step, std::uint64_t seed) {
            const SimulationPath p = simulate_path(mm, s, step, seed);
            return simulate_wealth(mm, s, p, r, 1.0).log_terminal;
        },
        py::arg("model"), py::arg("schedule"), py::arg("regime"), py::arg("step"), py::arg("seed"));

    m.def("load_model", [](const std::string& path) {
        const ExperimentConfig cfg = load_config(path);
        return py::make_tuple(cfg.model, cfg.schedule.build(cfg.model.horizon));
    });

    m.def(
        "run_experiment",
        [](const std::string& experiment, const std::string& config, const std::string& out_dir) {
            std::ostringstream log;
            RunOptions opts;
            opts.out_dir = out_dir;
            const RunResult r = run(experiment, load_config(config), opts, log);
            return py::make_tuple(static_cast<int>(r.code), r.files, log.str());
        },
        py::arg("experiment"), py::arg("config"), py::arg("out_dir"));
}
