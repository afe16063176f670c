#include "driftfilter/filters.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace driftfilter {

std::string_view regime_name(Regime r) {
    switch (r) {
        case Regime::R: return "R";
        case Regime::E: return "E";
        case Regime::C: return "C";
        case Regime::F: return "F";
    }
    return "?";
}

Regime parse_regime(std::string_view name) {
    if (name == "R") return Regime::R;
    if (name == "E") return Regime::E;
    if (name == "C") return Regime::C;
    if (name == "F") return Regime::F;
    throw std::invalid_argument("unknown regime '" + std::string(name) + "' (expected R, E, C or F)");
}

BayesUpdate bayes_update(const SymMatrix& gamma_minus, const SymMatrix& expert_cov) {
    if (gamma_minus.dim() != expert_cov.dim()) throw DimensionError("bayes_update: dimension mismatch");
    if (!is_positive_definite(expert_cov)) throw std::invalid_argument("bayes_update: Gamma must be positive definite");
    const SymMatrix total = gamma_minus + expert_cov;
    // (gamma_- + Gamma)^{-1} gamma_-, the Kalman gain transposed
    const Matrix gain_t = spd_solve(total, gamma_minus.mat());
    BayesUpdate out;
    out.weight = spd_solve(total, expert_cov.mat()).transpose();
    out.gamma_plus = psd_clip(SymMatrix(gamma_minus.mat() - gamma_minus.mat() * gain_t));
    return out;
}

namespace {

bool uses_experts(Regime r) { return r == Regime::E || r == Regime::C; }

void check_grid_matches_schedule(const ExpertSchedule& schedule, const TimeGrid& grid) {
    if (schedule.empty()) return;
    if (grid.segments() != schedule.size()) {
        throw std::invalid_argument("grid segments do not match the information dates");
    }
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (std::abs(grid.points[grid.boundaries[k]] - schedule.dates()[k]) > 1e-12 * std::max(1.0, schedule.dates()[k])) {
            throw std::invalid_argument("grid boundary " + std::to_string(k) + " does not match its information date");
        }
    }
}

// Per-segment propagator; E steps reuse the closed form for a fixed h.
class Stepper {
public:
    Stepper(const DriftDynamics& dyn, Regime regime) : dyn_(dyn), regime_(regime) {}

    SymMatrix step(const SymMatrix& g, double h) {
        switch (regime_) {
            case Regime::F: return g;
            case Regime::E: {
                if (h != cached_h_) {
                    cached_h_ = h;
                    decay_ = dyn_.decay(h).mat();
                    noise_ = dyn_.noise_cov(h);
                }
                return congruence(decay_, g) + noise_;
            }
            case Regime::R:
            case Regime::C: return dyn_.riccati_advance(g, h, true);
        }
        return g;
    }

private:
    const DriftDynamics& dyn_;
    Regime regime_;
    double cached_h_ = -1.0;
    Matrix decay_;
    SymMatrix noise_;
};

}  // namespace

void propagate_covariance(const MarketModel& model, const ExpertSchedule& schedule, Regime regime,
                          const TimeGrid& grid, CovarianceVisitor& visitor) {
    const bool updates = uses_experts(regime) && !schedule.empty();
    if (updates) {
        check_grid_matches_schedule(schedule, grid);
        schedule.validate_against(grid.horizon(), model.dim());
    }
    const DriftDynamics dyn(model);
    Stepper stepper(dyn, regime);
    SymMatrix gamma = regime == Regime::F ? SymMatrix::zero(model.dim()) : model.sigma0;

    for (std::size_t s = 0; s < grid.segments(); ++s) {
        const std::size_t b = grid.boundaries[s];
        const std::size_t n = grid.steps(s);
        if (updates) {
            SymMatrix after = bayes_update(gamma, schedule.gammas()[s]).gamma_plus;
            visitor.update(s, gamma, after);
            gamma = std::move(after);
        }
        visitor.point(s, 0, grid.points[b], gamma);
        const double h = (grid.points[b + n] - grid.points[b]) / static_cast<double>(n);
        for (std::size_t j = 1; j <= n; ++j) {
            gamma = stepper.step(gamma, h);
            visitor.point(s, j, grid.points[b + j], gamma);
        }
    }
}

namespace {

class PathBuilder : public CovarianceVisitor {
public:
    explicit PathBuilder(CovariancePath& out) : out_(out) {}

    void update(std::size_t, const SymMatrix& before, const SymMatrix&) override { out_.left_limits.push_back(before); }

    void point(std::size_t segment, std::size_t step, double, const SymMatrix& gamma) override {
        const std::size_t i = out_.grid.boundaries[segment] + step;
        // the segment-end point is a left limit unless it is T; the next segment overwrites it
        out_.values[i] = gamma;
    }

private:
    CovariancePath& out_;
};

}  // namespace

CovariancePath covariance_path(const MarketModel& model, const ExpertSchedule& schedule, Regime regime,
                               const TimeGrid& grid) {
    CovariancePath path;
    path.regime = regime;
    path.grid = grid;
    path.values.resize(grid.points.size());
    PathBuilder builder(path);
    propagate_covariance(model, schedule, regime, grid, builder);
    if (!schedule.empty()) {
        for (std::size_t k = 0; k < schedule.size(); ++k) path.date_grid_index.push_back(grid.index_of(schedule.dates()[k]));
        if (path.left_limits.empty()) {
            // no jumps in this regime: the left limit is the value itself
            for (std::size_t idx : path.date_grid_index) path.left_limits.push_back(path.values[idx]);
        }
    }
    return path;
}

CovariancePath gamma_R(const MarketModel& model, const TimeGrid& grid) {
    return covariance_path(model, ExpertSchedule{}, Regime::R, grid);
}

CovariancePath gamma_E(const MarketModel& model, const ExpertSchedule& schedule, const TimeGrid& grid) {
    return covariance_path(model, schedule, Regime::E, grid);
}

CovariancePath gamma_C(const MarketModel& model, const ExpertSchedule& schedule, const TimeGrid& grid) {
    return covariance_path(model, schedule, Regime::C, grid);
}

namespace {
class LastValue : public CovarianceVisitor {
public:
    void point(std::size_t, std::size_t, double, const SymMatrix& gamma) override { last = gamma; }
    SymMatrix last;
};
}  // namespace

SymMatrix covariance_at(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, double u,
                        const GridSpec& spec) {
    if (!(u > 0.0)) {
        if (u == 0.0 && uses_experts(regime) && !schedule.empty()) {
            return bayes_update(model.sigma0, schedule.gammas()[0]).gamma_plus;
        }
        if (u == 0.0) return regime == Regime::F ? SymMatrix::zero(model.dim()) : model.sigma0;
        throw std::invalid_argument("covariance_at: u must be non-negative");
    }
    const double tol = 1e-12 * std::max(1.0, u);
    std::vector<double> dates;
    std::vector<SymMatrix> gammas;
    const SymMatrix* at_u = nullptr;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double t = schedule.dates()[k];
        if (t < u - tol) {
            dates.push_back(t);
            gammas.push_back(schedule.gammas()[k]);
        } else if (std::abs(t - u) <= tol) {
            at_u = &schedule.gammas()[k];
        }
    }
    const ExpertSchedule head(std::move(dates), std::move(gammas));
    const TimeGrid grid = make_grid(u, head.dates(), spec);
    LastValue last;
    propagate_covariance(model, head, regime, grid, last);
    if (at_u != nullptr && uses_experts(regime)) return bayes_update(last.last, *at_u).gamma_plus;
    return last.last;
}

FilterPath filter_path(const MarketModel& model, const ExpertSchedule& schedule, const SimulationPath& path,
                       const CovariancePath& covariance) {
    const TimeGrid& grid = path.grid;
    if (covariance.grid.points != grid.points || covariance.grid.boundaries != grid.boundaries) {
        throw std::invalid_argument("filter_path: covariance grid does not match the simulation grid");
    }
    const Regime regime = covariance.regime;
    FilterPath out;
    out.regime = regime;
    out.grid = grid;
    out.source_seed = path.seed;

    if (regime == Regime::F) {
        out.mu_hat = path.mu;
        return out;
    }

    const bool updates = uses_experts(regime) && !schedule.empty();
    if (updates) check_grid_matches_schedule(schedule, grid);
    if (updates && path.experts.size() != schedule.size()) {
        throw std::invalid_argument("filter_path: path carries a different number of expert opinions");
    }

    const DriftDynamics dyn(model);
    const Matrix& precision = dyn.precision().mat();
    const Matrix& alpha = model.alpha.mat();
    out.mu_hat.resize(grid.points.size());
    Vector mu = model.m0;

    for (std::size_t s = 0; s < grid.segments(); ++s) {
        const std::size_t b = grid.boundaries[s];
        const std::size_t n = grid.steps(s);
        if (updates) {
            const Matrix weight = bayes_update(covariance.left_limits[s], schedule.gammas()[s]).weight;
            out.left_limits.push_back(mu);
            out.update_weights.push_back(weight);
            mu = weight * mu + (Matrix::Identity(model.dim(), model.dim()) - weight) * path.experts[s].z;
        }
        out.mu_hat[b] = mu;
        const double h = (grid.points[b + n] - grid.points[b]) / static_cast<double>(n);
        const Matrix decay = regime == Regime::E ? dyn.decay(h).mat() : Matrix();
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = b + j;
            if (regime == Regime::E) {
                mu = model.delta + decay * (mu - model.delta);
            } else {
                const Vector innovation = path.return_increments[i] - mu * h;
                mu = mu + alpha * (model.delta - mu) * h + covariance.values[i].mat() * (precision * innovation);
            }
            out.mu_hat[i + 1] = mu;
        }
    }
    return out;
}

FilterPath filter_path(const MarketModel& model, const ExpertSchedule& schedule, const SimulationPath& path,
                       Regime regime) {
    return filter_path(model, schedule, path, covariance_path(model, schedule, regime, path.grid));
}

}  // namespace driftfilter
