#include "driftfilter/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace driftfilter {

PeriodFlow::PeriodFlow(const MarketModel& model, Regime regime, double delta, int steps)
    : dyn_(model), regime_(regime), delta_(delta), steps_(steps) {
    if (regime != Regime::E && regime != Regime::C) throw std::invalid_argument("period flow: regime must be E or C");
    if (!(delta > 0.0)) throw std::invalid_argument("period flow: Delta must be positive");
    if (steps < 1) throw std::invalid_argument("period flow: need at least one step");
    if (regime == Regime::E) {
        period_decay_ = dyn_.decay(delta);
        period_noise_ = dyn_.noise_cov(delta);
        step_decay_ = dyn_.decay(step());
        step_noise_ = dyn_.noise_cov(step());
    }
}

SymMatrix PeriodFlow::advance(const SymMatrix& gamma) const {
    if (regime_ == Regime::E) return congruence(period_decay_.mat(), gamma) + period_noise_;
    SymMatrix g = gamma;
    for (int j = 0; j < steps_; ++j) g = dyn_.riccati_advance(g, step(), true);
    return g;
}

std::vector<SymMatrix> PeriodFlow::trajectory(const SymMatrix& gamma) const {
    std::vector<SymMatrix> out;
    out.reserve(static_cast<std::size_t>(steps_) + 1);
    out.push_back(gamma);
    for (int j = 0; j < steps_; ++j) {
        const SymMatrix& g = out.back();
        out.push_back(regime_ == Regime::E ? congruence(step_decay_.mat(), g) + step_noise_
                                           : dyn_.riccati_advance(g, step(), true));
    }
    return out;
}

const char* comparability_name(Comparability c) {
    switch (c) {
        case Comparability::Increasing: return "increasing";
        case Comparability::Decreasing: return "decreasing";
        case Comparability::Equal: return "equal";
        case Comparability::Incomparable: return "incomparable";
    }
    return "?";
}

namespace {

Comparability compare(const SymMatrix& first, const SymMatrix& second) {
    const SymEigen e = sym_eigen(second - first);
    const double tol = 1e-12 * (1.0 + std::max(spectral_norm(first), spectral_norm(second)));
    const bool up = e.values(0) >= -tol;
    const bool down = e.values(e.values.size() - 1) <= tol;
    if (up && down) return Comparability::Equal;
    if (up) return Comparability::Increasing;
    if (down) return Comparability::Decreasing;
    return Comparability::Incomparable;
}

bool is_scalar_multiple_of_identity(const SymMatrix& a) {
    const double mean = trace(a) / a.dim();
    const Matrix diff = a.mat() - mean * Matrix::Identity(a.dim(), a.dim());
    return diff.norm() <= 1e-12 * (1.0 + a.mat().norm());
}

}  // namespace

LimitCycle limit_cycle(const MarketModel& model, Regime regime, double delta, const SymMatrix& gamma,
                       const CycleOptions& options, const std::optional<SymMatrix>& start) {
    const PeriodFlow flow(model, regime, delta, options.steps_per_period);
    LimitCycle cycle;
    cycle.regime = regime;
    cycle.delta = delta;
    cycle.gamma = gamma;
    cycle.steps_per_period = options.steps_per_period;

    SymMatrix pre = start ? *start : model.sigma0;
    for (int k = 0; k < options.max_cycles; ++k) {
        const SymMatrix next = flow.advance(bayes_update(pre, gamma).gamma_plus);
        if (k == 0) cycle.start_order = compare(pre, next);
        const double change = spectral_norm(next - pre);
        pre = next;
        cycle.iterations = k + 1;
        cycle.final_change = change;
        if (change <= options.tol * (1.0 + spectral_norm(pre))) {
            cycle.converged = true;
            break;
        }
    }
    if (!cycle.converged) {
        throw NumericError("limit cycle did not converge within " + std::to_string(options.max_cycles) +
                           " periods (last change " + std::to_string(cycle.final_change) + ")");
    }
    cycle.upper = pre;
    cycle.lower = bayes_update(pre, gamma).gamma_plus;
    cycle.profile = flow.trajectory(cycle.lower);
    cycle.h.resize(cycle.profile.size());
    for (std::size_t j = 0; j < cycle.h.size(); ++j) cycle.h[j] = flow.step() * static_cast<double>(j);
    return cycle;
}

PeriodicGamma build_periodic_gamma(const MarketModel& model, Regime regime, double delta, int steps_per_period,
                                   const std::optional<SymMatrix>& start) {
    const PeriodFlow flow(model, regime, delta, steps_per_period);
    PeriodicGamma out;
    out.lower = start ? *start : model.sigma0;
    out.upper = flow.advance(out.lower);
    if (!is_positive_definite(out.lower)) throw PreconditionError("periodic Gamma: start covariance is singular");
    const double gap = min_eig(out.upper - out.lower);
    if (!(gap > 0.0)) {
        throw PreconditionError("periodic Gamma: flow over Delta is not above its start in Loewner order (min eigenvalue of U - L = " +
                                std::to_string(gap) + ")");
    }
    const SymMatrix diff = spd_inverse(out.lower) - spd_inverse(out.upper);
    if (!is_positive_definite(diff)) throw PreconditionError("periodic Gamma: L^{-1} - U^{-1} is not positive definite");
    out.gamma = spd_inverse(diff);
    return out;
}

PeriodicityCheck check_periodicity(const MarketModel& model, Regime regime, double delta, const PeriodicGamma& pg,
                                   int periods, int steps_per_period) {
    const PeriodFlow flow(model, regime, delta, steps_per_period);
    PeriodicityCheck check;
    check.periods = periods;
    check.update_gap = spectral_norm(bayes_update(pg.upper, pg.gamma).gamma_plus - pg.lower);
    SymMatrix pre = pg.upper;
    for (int k = 0; k < periods; ++k) {
        const SymMatrix next = flow.advance(bayes_update(pre, pg.gamma).gamma_plus);
        check.max_successive_gap = std::max(check.max_successive_gap, spectral_norm(next - pre));
        check.max_drift = std::max(check.max_drift, spectral_norm(next - pg.upper));
        pre = next;
    }
    return check;
}

MonotonicityReport monotonicity_report(const MarketModel& model, const LimitCycle& cycle, int final_periods,
                                       double tol) {
    MonotonicityReport rep;
    const auto& g = cycle.profile;
    rep.norm_start = spectral_norm(g.front());
    rep.norm_end = spectral_norm(g.back());
    rep.trace_start = trace(g.front());
    rep.trace_end = trace(g.back());
    rep.min_norm = rep.max_norm = rep.norm_start;
    rep.min_trace = rep.max_trace = rep.trace_start;
    rep.norm_nondecreasing = true;
    rep.loewner_nondecreasing = true;
    double prev_norm = rep.norm_start;
    for (std::size_t j = 1; j < g.size(); ++j) {
        const double n = spectral_norm(g[j]);
        const double t = trace(g[j]);
        rep.min_norm = std::min(rep.min_norm, n);
        rep.max_norm = std::max(rep.max_norm, n);
        rep.min_trace = std::min(rep.min_trace, t);
        rep.max_trace = std::max(rep.max_trace, t);
        if (n < prev_norm - tol) rep.norm_nondecreasing = false;
        if (min_eig(g[j] - g[j - 1]) < -tol) rep.loewner_nondecreasing = false;
        prev_norm = n;
    }
    rep.trace_dip = trace(cycle.lower) - rep.min_trace;

    const PeriodFlow flow(model, cycle.regime, cycle.delta, cycle.steps_per_period);
    rep.final_periods = final_periods;
    SymMatrix pre = cycle.upper;
    rep.liminf_trace = rep.limsup_trace = trace(pre);
    for (int p = 0; p < final_periods; ++p) {
        const std::vector<SymMatrix> traj = flow.trajectory(bayes_update(pre, cycle.gamma).gamma_plus);
        for (const SymMatrix& s : traj) {
            const double t = trace(s);
            rep.liminf_trace = std::min(rep.liminf_trace, t);
            rep.limsup_trace = std::max(rep.limsup_trace, t);
        }
        pre = traj.back();
    }
    rep.liminf_gap = std::abs(rep.liminf_trace - trace(cycle.lower));
    rep.limsup_gap = std::abs(rep.limsup_trace - trace(cycle.upper));

    rep.alpha_scalar = is_scalar_multiple_of_identity(model.alpha);
    rep.sigma_scalar = is_scalar_multiple_of_identity(gram(model.sigma));
    const double c = (cycle.gamma.mat().cwiseProduct(cycle.upper.mat())).sum() / cycle.upper.mat().squaredNorm();
    rep.gamma_proportional = (cycle.gamma.mat() - c * cycle.upper.mat()).norm() <= 1e-9 * cycle.gamma.mat().norm();
    rep.predicts_trace_law = cycle.regime == Regime::E || rep.sigma_scalar;
    rep.predicts_norm_monotone = cycle.regime == Regime::E && rep.alpha_scalar;
    return rep;
}

ProportionalRun proportional_run(const MarketModel& model, double delta, double c, int periods, const SymMatrix& start,
                                 int steps_per_period) {
    if (!(c > 0.0)) throw std::invalid_argument("proportional run: c must be positive");
    const PeriodFlow flow(model, Regime::C, delta, steps_per_period);
    const DriftDynamics dyn(model);
    ProportionalRun run;
    run.start_compliant = min_eig(dyn.riccati_rhs(start, true)) >= -psd_tolerance(start);
    run.loewner_nondecreasing = true;
    run.worst_step_min_eig = 0.0;
    bool first = true;
    SymMatrix pre = start;
    for (int k = 0; k < periods; ++k) {
        const SymMatrix post = bayes_update(pre, pre * c).gamma_plus;
        const std::vector<SymMatrix> traj = flow.trajectory(post);
        for (std::size_t j = 0; j < traj.size(); ++j) {
            run.t.push_back(k * delta + flow.step() * static_cast<double>(j));
            run.values.push_back(traj[j]);
            if (j > 0) {
                const double m = min_eig(traj[j] - traj[j - 1]);
                run.worst_step_min_eig = first ? m : std::min(run.worst_step_min_eig, m);
                first = false;
                if (m < -psd_tolerance(traj[j])) run.loewner_nondecreasing = false;
            }
        }
        pre = traj.back();
    }
    return run;
}

DecaySeries decay_experiment(const MarketModel& model, double u, const std::vector<int>& ns, const SymMatrix& gamma,
                             const GridSpec& spec) {
    if (!(u > 0.0) || u > model.horizon) throw std::invalid_argument("decay: u must lie in (0, T]");
    for (std::size_t i = 1; i < ns.size(); ++i) {
        if (ns[i] <= ns[i - 1]) throw std::invalid_argument("decay: N values must be increasing");
    }
    DecaySeries series;
    series.u = u;
    series.ns = ns;
    series.bound_c = spectral_norm(gamma);
    series.sigma0_norm = spectral_norm(model.sigma0);
    series.c_below_e = true;
    for (int n : ns) {
        const ExpertSchedule schedule = ExpertSchedule::equidistant_count(n, model.horizon, gamma);
        const double e = spectral_norm(covariance_at(model, schedule, Regime::E, u, spec));
        const double c = spectral_norm(covariance_at(model, schedule, Regime::C, u, spec));
        series.norms_e.push_back(e);
        series.norms_c.push_back(c);
        if (c > e + 1e-12) series.c_below_e = false;
    }
    auto strictly_decreasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] < v[i - 1])) return false;
        }
        return true;
    };
    series.strictly_decreasing_e = strictly_decreasing(series.norms_e);
    series.strictly_decreasing_c = strictly_decreasing(series.norms_c);
    return series;
}

}  // namespace driftfilter
