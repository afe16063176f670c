#pragma once

#include "driftfilter/matops.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace driftfilter {

/// Deterministic short rate r_t: either constant or linear between knots
/// (flat beyond the first and last knot).
class RateFunction {
public:
    RateFunction() = default;
    static RateFunction constant(double r);
    static RateFunction piecewise_linear(std::vector<std::pair<double, double>> knots);

    double operator()(double t) const;
    bool is_constant() const { return knots_.size() <= 1; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_{{0.0, 0.0}};
};

/// Static parameters of the market: OU drift d mu = alpha (delta - mu) dt + beta dB,
/// returns dR = mu dt + sigma dW, mu_0 ~ N(m0, Sigma0).
struct MarketModel {
    SymMatrix alpha;
    Matrix beta;
    Vector delta;
    Matrix sigma;
    Vector m0;
    SymMatrix sigma0;
    RateFunction rate;
    double horizon = 1.0;

    int dim() const { return alpha.dim(); }
    int noise_dim() const { return static_cast<int>(sigma.cols()); }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Quantities derived once from a model and shared by every propagator:
/// the eigenbasis of alpha, beta beta^T and the return precision (sigma sigma^T)^{-1}.
class DriftDynamics {
public:
    explicit DriftDynamics(const MarketModel& model);

    int dim() const { return bbt_.dim(); }
    const SymMatrix& alpha() const { return alpha_; }
    const SymMatrix& beta_beta_t() const { return bbt_; }
    const SymMatrix& precision() const { return precision_; }

    /// e^{-alpha h}
    SymMatrix decay(double h) const;

    /// int_0^h e^{-alpha s} beta beta^T e^{-alpha s} ds, evaluated in the eigenbasis of alpha.
    SymMatrix noise_cov(double h) const;

    /// Covariance flow without observations over a step h:
    /// e^{-alpha h} gamma e^{-alpha h} + noise_cov(h).
    SymMatrix lyapunov_step(const SymMatrix& gamma, double h) const;

    /// Right-hand side -alpha g - g alpha + beta beta^T [- g (sigma sigma^T)^{-1} g].
    SymMatrix riccati_rhs(const SymMatrix& gamma, bool with_returns) const;

    /// One classical RK4 step of the Riccati/Lyapunov ODE, symmetrized and clipped.
    SymMatrix rk4_step(const SymMatrix& gamma, double h, bool with_returns) const;
    /// Advances the ODE by h in equal RK4 substeps, enough of them that each
    /// substep times the local stiffness 2 (|alpha| + |gamma| |P|) stays below 0.2.
    SymMatrix riccati_advance(const SymMatrix& gamma, double h, bool with_returns) const;

private:
    SymMatrix alpha_;
    SymMatrix bbt_;
    SymMatrix precision_;
    SymEigen alpha_eig_;
    double alpha_norm_ = 0.0;
    double precision_norm_ = 0.0;
    Matrix bbt_eigenbasis_;
};

/// m_t = delta + e^{-alpha t}(m0 - delta)
Vector drift_mean(const MarketModel& model, double t);

/// Sigma_t = e^{-alpha t}(Sigma0 + int_0^t e^{alpha s} beta beta^T e^{alpha s} ds) e^{-alpha t}
SymMatrix drift_cov(const MarketModel& model, double t);

/// Information dates t_0 = 0 < t_1 < ... with expert covariances Gamma_k.
class ExpertSchedule {
public:
    ExpertSchedule() = default;
    ExpertSchedule(std::vector<double> dates, std::vector<SymMatrix> gammas);

    /// N dates t_k = k T / N. N = 0 gives the empty schedule.
    static ExpertSchedule equidistant_count(int n, double horizon, const SymMatrix& gamma);
    /// Dates t_k = k Delta for all k Delta < horizon.
    static ExpertSchedule equidistant_spacing(double spacing, double horizon, const SymMatrix& gamma);

    std::size_t size() const { return dates_.size(); }
    bool empty() const { return dates_.empty(); }
    const std::vector<double>& dates() const { return dates_; }
    const std::vector<SymMatrix>& gammas() const { return gammas_; }

    /// Throws std::invalid_argument unless every date lies in [0, horizon).
    void validate_against(double horizon, int dim) const;

private:
    std::vector<double> dates_;
    std::vector<SymMatrix> gammas_;
};

/// Time grid in which every information date is a segment boundary.
/// Segment s covers points[boundaries[s]] .. points[boundaries[s+1]].
struct TimeGrid {
    std::vector<double> points;
    std::vector<std::size_t> boundaries;

    std::size_t segments() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
    std::size_t steps(std::size_t segment) const { return boundaries[segment + 1] - boundaries[segment]; }
    double horizon() const { return points.back(); }
    /// Grid index of the first point >= t - 1e-12 (t must lie on the grid).
    std::size_t index_of(double t) const;
};

struct GridSpec {
    double max_step = 1e-3;
    int min_steps_per_interval = 200;
    bool even_steps = true;  // Simpson needs an even count per segment
};

/// Grid on [0, horizon] whose segments end at the given dates. Each segment is
/// split into max(min_steps, ceil(len / max_step)) equal steps.
TimeGrid make_grid(double horizon, std::span<const double> dates, const GridSpec& spec);

struct ExpertObservation {
    std::size_t k = 0;
    double t = 0.0;
    std::size_t grid_index = 0;
    Vector z;
};

struct SimulationPath {
    TimeGrid grid;
    std::vector<Vector> mu;                 // per grid point
    std::vector<Vector> return_increments;  // per grid step
    std::vector<ExpertObservation> experts;
    std::uint64_t seed = 0;
};

/// Per-path seed derived from a master seed: splitmix64(master + (i + 1) * golden gamma).
std::uint64_t path_seed(std::uint64_t master, std::uint64_t index);

/// Simulates the drift by its exact Gaussian OU transition, returns by an Euler
/// increment mu_t dt + sigma sqrt(dt) xi, and Z_k = mu_{t_k} + Gamma_k^{1/2} eps_k.
SimulationPath simulate_path(const MarketModel& model, const ExpertSchedule& schedule, const TimeGrid& grid,
                             std::uint64_t seed);
SimulationPath simulate_path(const MarketModel& model, const ExpertSchedule& schedule, double grid_step,
                             std::uint64_t seed);

/// A relative view Q = P mu + xi rewritten as an absolute view Z = mu + phi with
/// phi = P^T (P P^T)^{-1} xi. The filters in this library consume only absolute views.
struct AbsoluteView {
    Matrix pick;      // P, l x d
    Matrix lift;      // P^T (P P^T)^{-1}, d x l
    SymMatrix phi_cov;  // lift xi_cov lift^T
    /// Minimum-norm z with P z = q.
    Vector lift_view(const Vector& q) const { return lift * q; }
};

AbsoluteView relative_to_absolute(const Matrix& pick, const Vector& q, const SymMatrix& xi_cov);

}  // namespace driftfilter
