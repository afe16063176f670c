#pragma once

#include "driftfilter/filters.hpp"

#include <array>
#include <vector>

namespace driftfilter {

/// pi* = (sigma sigma^T)^{-1} (mu_hat - r 1)
Vector optimal_strategy(const Vector& mu_hat, double r, const MarketModel& model);

/// The three additive pieces of the optimal value:
/// V = log x0 + rate_term + moment_term - filter_term, where
///   rate_term   = int r - (r1)^T P m + 1/2 (r1)^T P (r1) dt,
///   moment_term = 1/2 int tr(P (Sigma_t + m_t m_t^T)) dt,
///   filter_term = 1/2 int tr(P gamma_t) dt,   P = (sigma sigma^T)^{-1}.
struct ValueTerms {
    double log_x0 = 0.0;
    double rate_term = 0.0;
    double moment_term = 0.0;
    double filter_term = 0.0;

    double value() const { return log_x0 + rate_term + moment_term - filter_term; }
};

/// Regime-independent part, integrated by composite Simpson on a grid with breaks at the rate knots.
ValueTerms unconditional_terms(const MarketModel& model, double x0, const GridSpec& spec = {});

/// 1/2 int_0^T tr(P gamma^H_t) dt, Simpson on each inter-date panel (the panels
/// close at t_k- and reopen at t_k). Covariances are streamed, not stored.
double filter_term(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, const GridSpec& spec = {});

double value_function(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, double x0,
                      const GridSpec& spec = {});

struct Efficiency {
    double by_integral = 0.0;  // exp(-1/2 int tr(P gamma))
    double by_capital = 0.0;   // 1 / x0^H with V^H(x0^H) = V^F(1)
    double relative_gap = 0.0;
};

Efficiency efficiency(const MarketModel& model, const ExpertSchedule& schedule, Regime regime, const GridSpec& spec = {});

inline constexpr std::array<Regime, 4> kAllRegimes{Regime::R, Regime::E, Regime::C, Regime::F};

struct ValueReport {
    double x0 = 1.0;
    int n = 0;
    std::array<ValueTerms, 4> terms{};
    std::array<double, 4> value{};
    std::array<double, 4> rho{};
    std::array<double, 4> rho_cross_check{};

    static std::size_t slot(Regime r) { return static_cast<std::size_t>(r); }
    double v(Regime r) const { return value[slot(r)]; }
    double efficiency(Regime r) const { return rho[slot(r)]; }
};

ValueReport value_report(const MarketModel& model, const ExpertSchedule& schedule, double x0, const GridSpec& spec = {});

struct WealthPath {
    Regime regime = Regime::R;
    TimeGrid grid;
    std::vector<double> wealth;
    std::vector<Vector> pi;
    double log_terminal = 0.0;
};

/// Log-wealth by the exact log-SDE increment on the path's grid:
/// d log X = (pi^T (mu - r1) + r - 1/2 |sigma^T pi|^2) dt + pi^T sigma dW, sigma dW = dR - mu dt.
WealthPath simulate_wealth(const MarketModel& model, const SimulationPath& path, const FilterPath& filter, double x0);
WealthPath simulate_wealth(const MarketModel& model, const ExpertSchedule& schedule, const SimulationPath& path,
                           Regime regime, double x0);

}  // namespace driftfilter
