#include "driftfilter/portfolio.hpp"

#include <cmath>
#include <stdexcept>

namespace driftfilter {

Vector optimal_strategy(const Vector& mu_hat, double r, const MarketModel& model) {
    if (mu_hat.size() != model.dim()) throw DimensionError("optimal_strategy: mu_hat has wrong length");
    return spd_solve(gram(model.sigma), mu_hat - Vector::Constant(model.dim(), r));
}

namespace {

double simpson_weight(std::size_t j, std::size_t n) {
    if (j == 0 || j == n) return 1.0;
    return j % 2 == 1 ? 4.0 : 2.0;
}

void require_even(const TimeGrid& grid) {
    for (std::size_t s = 0; s < grid.segments(); ++s) {
        if (grid.steps(s) % 2 != 0) throw std::invalid_argument("Simpson quadrature needs an even step count per panel");
    }
}

class TraceIntegrator : public CovarianceVisitor {
public:
    TraceIntegrator(const TimeGrid& grid, const SymMatrix& precision) : grid_(grid), precision_(precision.mat()) {}

    void point(std::size_t segment, std::size_t step, double, const SymMatrix& gamma) override {
        const std::size_t b = grid_.boundaries[segment];
        const std::size_t n = grid_.steps(segment);
        const double h = (grid_.points[b + n] - grid_.points[b]) / static_cast<double>(n);
        sum_ += simpson_weight(step, n) * h / 3.0 * precision_.cwiseProduct(gamma.mat()).sum();
    }

    double integral() const { return sum_; }

private:
    const TimeGrid& grid_;
    Matrix precision_;
    double sum_ = 0.0;
};

}  // namespace

ValueTerms unconditional_terms(const MarketModel& model, double x0, const GridSpec& spec) {
    if (!(x0 > 0.0)) throw std::invalid_argument("value: x0 must be positive");
    std::vector<double> breaks;
    for (const auto& [t, r] : model.rate.knots()) {
        if (t > 0.0 && t < model.horizon) breaks.push_back(t);
    }
    GridSpec even = spec;
    even.even_steps = true;
    const TimeGrid grid = make_grid(model.horizon, breaks, even);
    const DriftDynamics dyn(model);
    const Matrix& p = dyn.precision().mat();
    const int d = model.dim();

    ValueTerms terms;
    terms.log_x0 = std::log(x0);
    for (std::size_t s = 0; s < grid.segments(); ++s) {
        const std::size_t b = grid.boundaries[s];
        const std::size_t n = grid.steps(s);
        const double h = (grid.points[b + n] - grid.points[b]) / static_cast<double>(n);
        for (std::size_t j = 0; j <= n; ++j) {
            const double t = grid.points[b + j];
            const double w = simpson_weight(j, n) * h / 3.0;
            const Vector m = drift_mean(model, t);
            const Vector r1 = Vector::Constant(d, model.rate(t));
            const Matrix second = drift_cov(model, t).mat() + m * m.transpose();
            terms.rate_term += w * (model.rate(t) - r1.dot(p * m) + 0.5 * r1.dot(p * r1));
            terms.moment_term += w * 0.5 * p.cwiseProduct(second).sum();
        }
    }
    return terms;
}

double filter_term(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, const GridSpec& spec) {
    if (regime == Regime::F) return 0.0;
    GridSpec even = spec;
    even.even_steps = true;
    const TimeGrid grid = make_grid(model.horizon, schedule.dates(), even);
    require_even(grid);
    TraceIntegrator integrator(grid, DriftDynamics(model).precision());
    propagate_covariance(model, schedule, regime, grid, integrator);
    return 0.5 * integrator.integral();
}

double value_function(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, double x0,
                      const GridSpec& spec) {
    ValueTerms terms = unconditional_terms(model, x0, spec);
    terms.filter_term = filter_term(model, schedule, regime, spec);
    return terms.value();
}

Efficiency efficiency(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, const GridSpec& spec) {
    const ValueTerms base = unconditional_terms(model, 1.0, spec);
    ValueTerms h = base;
    h.filter_term = filter_term(model, schedule, regime, spec);
    Efficiency e;
    e.by_integral = std::exp(-h.filter_term);
    // V^H(x) = log x + V^H(1), so V^H(x0^H) = V^F(1) gives x0^H = exp(V^F(1) - V^H(1))
    e.by_capital = 1.0 / std::exp(base.value() - h.value());
    e.relative_gap = std::abs(e.by_integral - e.by_capital) / e.by_integral;
    return e;
}

ValueReport value_report(const MarketModel& model, const ExpertSchedule& schedule, double x0, const GridSpec& spec) {
    ValueReport report;
    report.x0 = x0;
    report.n = static_cast<int>(schedule.size());
    const ValueTerms base = unconditional_terms(model, x0, spec);
    const ValueTerms base_unit = unconditional_terms(model, 1.0, spec);
    for (Regime r : kAllRegimes) {
        const std::size_t i = ValueReport::slot(r);
        report.terms[i] = base;
        report.terms[i].filter_term = filter_term(model, schedule, r, spec);
        report.value[i] = report.terms[i].value();
        report.rho[i] = std::exp(-report.terms[i].filter_term);
        ValueTerms unit = base_unit;
        unit.filter_term = report.terms[i].filter_term;
        report.rho_cross_check[i] = 1.0 / std::exp(base_unit.value() - unit.value());
    }
    return report;
}

WealthPath simulate_wealth(const MarketModel& model, const SimulationPath& path, const FilterPath& filter, double x0) {
    if (!(x0 > 0.0)) throw std::invalid_argument("wealth: x0 must be positive");
    if (filter.grid.points != path.grid.points) throw std::invalid_argument("wealth: filter grid does not match the path grid");
    const TimeGrid& grid = path.grid;
    const int d = model.dim();
    const Matrix sigma_t = model.sigma.transpose();

    WealthPath out;
    out.regime = filter.regime;
    out.grid = grid;
    out.wealth.resize(grid.points.size());
    out.pi.resize(grid.points.size());
    double log_x = std::log(x0);
    out.wealth[0] = x0;
    for (std::size_t i = 0; i + 1 < grid.points.size(); ++i) {
        const double t = grid.points[i];
        const double h = grid.points[i + 1] - t;
        const double r = model.rate(t);
        const Vector pi = optimal_strategy(filter.mu_hat[i], r, model);
        const Vector& mu = path.mu[i];
        const Vector noise = path.return_increments[i] - mu * h;  // sigma dW
        const Vector excess = mu - Vector::Constant(d, r);
        log_x += (pi.dot(excess) + r - 0.5 * (sigma_t * pi).squaredNorm()) * h + pi.dot(noise);
        out.pi[i] = pi;
        out.wealth[i + 1] = std::exp(log_x);
    }
    const std::size_t last = grid.points.size() - 1;
    out.pi[last] = optimal_strategy(filter.mu_hat[last], model.rate(grid.points[last]), model);
    out.log_terminal = log_x;
    return out;
}

WealthPath simulate_wealth(const MarketModel& model, const ExpertSchedule& schedule, const SimulationPath& path,
                           Regime regime, double x0) {
    return simulate_wealth(model, path, filter_path(model, schedule, path, regime), x0);
}

}  // namespace driftfilter
