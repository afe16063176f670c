#pragma once

#include "driftfilter/model.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace driftfilter {

/// Information regimes: returns only, experts only, combined, full observation.
enum class Regime { R, E, C, F };

std::string_view regime_name(Regime r);
Regime parse_regime(std::string_view name);

/// Result of fusing a Gaussian prior with covariance gamma_minus and an
/// unbiased expert view with covariance Gamma.
struct BayesUpdate {
    SymMatrix gamma_plus;
    Matrix weight;  // Lambda = Gamma (gamma_minus + Gamma)^{-1}, applied to the prior mean
};

BayesUpdate bayes_update(const SymMatrix& gamma_minus, const SymMatrix& expert_cov);

/// Receives a covariance trajectory segment by segment. Within segment s,
/// point() is called for steps 0..n; step n is the left limit at the segment's
/// right end (or the value at T on the last segment). update() is called
/// before segment k's first point whenever an expert arrives at its start.
class CovarianceVisitor {
public:
    virtual ~CovarianceVisitor() = default;
    virtual void update(std::size_t /*date_index*/, const SymMatrix& /*before*/, const SymMatrix& /*after*/) {}
    virtual void point(std::size_t segment, std::size_t step, double t, const SymMatrix& gamma) = 0;
};

/// Drives the conditional covariance of the given regime over the grid.
/// R and C use RK4 on the Riccati ODE, E the closed-form Lyapunov propagation,
/// F is identically zero. E and C apply the Bayes update at every date
/// (including t_0 = 0, starting from gamma_{0-} = Sigma0).
void propagate_covariance(const MarketModel& model, const ExpertSchedule& schedule, Regime regime,
                          const TimeGrid& grid, CovarianceVisitor& visitor);

struct CovariancePath {
    Regime regime = Regime::R;
    TimeGrid grid;
    std::vector<SymMatrix> values;       // right-continuous, one per grid point
    std::vector<SymMatrix> left_limits;  // gamma_{t_k-}, one per information date
    std::vector<std::size_t> date_grid_index;

    const SymMatrix& at(std::size_t i) const { return values[i]; }
};

CovariancePath covariance_path(const MarketModel& model, const ExpertSchedule& schedule, Regime regime,
                               const TimeGrid& grid);
CovariancePath gamma_R(const MarketModel& model, const TimeGrid& grid);
CovariancePath gamma_E(const MarketModel& model, const ExpertSchedule& schedule, const TimeGrid& grid);
CovariancePath gamma_C(const MarketModel& model, const ExpertSchedule& schedule, const TimeGrid& grid);

/// Conditional covariance at a single time u (right-continuous at dates),
/// integrated on a grid over [0, u] built from spec.
SymMatrix covariance_at(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, double u,
                        const GridSpec& spec);

struct FilterPath {
    Regime regime = Regime::R;
    TimeGrid grid;
    std::vector<Vector> mu_hat;           // right-continuous, per grid point
    std::vector<Vector> left_limits;      // mu_hat_{t_k-}, per information date
    std::vector<Matrix> update_weights;   // Lambda_k per information date
    std::uint64_t source_seed = 0;
};

/// Filter realization along a simulated path. R and C use Euler-Maruyama on
/// d mu_hat = alpha(delta - mu_hat) dt + gamma (sigma sigma^T)^{-1} (dR - mu_hat dt);
/// E uses its closed-form propagation; F copies the true drift.
FilterPath filter_path(const MarketModel& model, const ExpertSchedule& schedule, const SimulationPath& path,
                       const CovariancePath& covariance);
FilterPath filter_path(const MarketModel& model, const ExpertSchedule& schedule, const SimulationPath& path,
                       Regime regime);

}  // namespace driftfilter
