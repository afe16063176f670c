#pragma once

#include "driftfilter/filters.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace driftfilter {

/// Raised when a construction's hypothesis (e.g. Loewner ordering) does not hold.
class PreconditionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Covariance flow over one inter-date period of length Delta for regime E
/// (closed form) or C (RK4 with `steps` equal steps).
class PeriodFlow {
public:
    PeriodFlow(const MarketModel& model, Regime regime, double delta, int steps = 400);

    Regime regime() const { return regime_; }
    double period() const { return delta_; }
    int steps() const { return steps_; }
    double step() const { return delta_ / steps_; }

    /// gamma after one full period without update.
    SymMatrix advance(const SymMatrix& gamma) const;
    /// steps + 1 samples of the flow started at gamma, h = 0, step(), ..., Delta.
    std::vector<SymMatrix> trajectory(const SymMatrix& gamma) const;

private:
    DriftDynamics dyn_;
    Regime regime_;
    double delta_;
    int steps_;
    SymMatrix period_decay_;
    SymMatrix period_noise_;
    SymMatrix step_decay_;
    SymMatrix step_noise_;
};

struct CycleOptions {
    double tol = 1e-11;      // on |gamma_{t_{k+1}-} - gamma_{t_k-}|, relative to 1 + |gamma|
    int max_cycles = 200000;
    int steps_per_period = 400;
};

enum class Comparability { Increasing, Decreasing, Equal, Incomparable };
const char* comparability_name(Comparability c);

struct LimitCycle {
    Regime regime = Regime::E;
    double delta = 0.0;
    SymMatrix gamma;           // expert covariance
    SymMatrix lower;           // L = lim gamma_{t_k}
    SymMatrix upper;           // U = lim gamma_{t_k-}
    std::vector<double> h;     // sample offsets in [0, Delta]
    std::vector<SymMatrix> profile;  // G_h
    bool converged = false;
    int iterations = 0;
    double final_change = 0.0;
    Comparability start_order = Comparability::Incomparable;  // gamma_{t_0-} vs gamma_{t_1-}
    int steps_per_period = 0;
};

/// Iterates the period map (update, then propagate Delta) from gamma_{t_0-} = start
/// (Sigma0 by default). Throws NumericError if max_cycles is exceeded.
LimitCycle limit_cycle(const MarketModel& model, Regime regime, double delta, const SymMatrix& gamma,
                       const CycleOptions& options = {}, const std::optional<SymMatrix>& start = std::nullopt);

struct PeriodicGamma {
    SymMatrix gamma;
    SymMatrix lower;  // flow start
    SymMatrix upper;  // flow after Delta
};

/// Gamma = (L^{-1} - U^{-1})^{-1} with L = start (Sigma0 by default) and U its
/// no-update flow over Delta (Lyapunov for E, Riccati for C). Throws
/// PreconditionError unless U - L is positive definite.
PeriodicGamma build_periodic_gamma(const MarketModel& model, Regime regime, double delta, int steps_per_period = 400,
                                   const std::optional<SymMatrix>& start = std::nullopt);

struct PeriodicityCheck {
    int periods = 0;
    double max_successive_gap = 0.0;  // max_k |gamma_{t_{k+1}-} - gamma_{t_k-}|
    double max_drift = 0.0;           // max_k |gamma_{t_k-} - U|
    double update_gap = 0.0;          // |bayes(U, Gamma) - L|
};

/// Runs the period map from U for `periods` periods.
PeriodicityCheck check_periodicity(const MarketModel& model, Regime regime, double delta, const PeriodicGamma& pg,
                                   int periods = 10, int steps_per_period = 400);

struct MonotonicityReport {
    double norm_start = 0.0, norm_end = 0.0, min_norm = 0.0, max_norm = 0.0;
    double trace_start = 0.0, trace_end = 0.0, min_trace = 0.0, max_trace = 0.0;
    double trace_dip = 0.0;       // tr(L) - min_h tr(G_h); > 0 means the trace falls below its post-update value
    double liminf_trace = 0.0;    // over the final periods, sampled on the grid
    double limsup_trace = 0.0;    // including left limits at the dates
    double liminf_gap = 0.0;      // |liminf - tr(L)|
    double limsup_gap = 0.0;      // |limsup - tr(U)|
    bool norm_nondecreasing = false;
    bool loewner_nondecreasing = false;
    bool alpha_scalar = false;
    bool sigma_scalar = false;
    bool gamma_proportional = false;
    bool predicts_trace_law = false;     // E always; C when sigma sigma^T = s I
    bool predicts_norm_monotone = false; // E with alpha = a I
    int final_periods = 0;
};

MonotonicityReport monotonicity_report(const MarketModel& model, const LimitCycle& cycle, int final_periods = 5,
                                       double tol = 1e-8);

/// Covariance under Gamma_k = c gamma_{t_k-} for `periods` equidistant dates,
/// with each within-period trajectory checked for Loewner monotonicity.
struct ProportionalRun {
    std::vector<double> t;
    std::vector<SymMatrix> values;
    bool start_compliant = false;        // Riccati right-hand side at gamma_0 is PSD
    bool loewner_nondecreasing = false;  // inside every period
    double worst_step_min_eig = 0.0;     // min over consecutive samples of lambda_min(next - prev)
};

ProportionalRun proportional_run(const MarketModel& model, double delta, double c, int periods,
                                 const SymMatrix& start, int steps_per_period = 400);

struct DecaySeries {
    double u = 0.0;
    std::vector<int> ns;
    std::vector<double> norms_e;
    std::vector<double> norms_c;
    double bound_c = 0.0;  // |Gamma|
    double sigma0_norm = 0.0;
    bool strictly_decreasing_e = false;
    bool strictly_decreasing_c = false;
    bool c_below_e = false;
};

/// |gamma_u^{E,N}| and |gamma_u^{C,N}| for equidistant dates t_k = k T / N.
DecaySeries decay_experiment(const MarketModel& model, double u, const std::vector<int>& ns, const SymMatrix& gamma,
                             const GridSpec& spec = {});

}  // namespace driftfilter
