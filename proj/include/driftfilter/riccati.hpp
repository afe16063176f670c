#pragma once

#include "driftfilter/model.hpp"

#include <optional>
#include <string>

namespace driftfilter {

/// True iff every eigenvalue of the (general) square matrix has negative real part.
bool is_stable(const Matrix& a);

/// (A, B) is stabilizable if A + B K is stable for some K. The check uses the
/// supplied witness K; without one it tries K = -I (square B) or K = -B^T.
bool is_stabilizable(const Matrix& a, const Matrix& b, const std::optional<Matrix>& witness = std::nullopt);

/// (C, A) is detectable if A + F C is stable for some F; default witness F = -C^T.
bool is_detectable(const Matrix& c, const Matrix& a, const std::optional<Matrix>& witness = std::nullopt);

/// (-alpha, tau) with tau = ((sigma sigma^T)^{-1})^{1/2}, witnessed by -(alpha + tau).
bool model_stabilizable(const MarketModel& model);
/// (beta^T, -alpha), witnessed by -(beta beta^T + alpha).
bool model_detectable(const MarketModel& model);

/// Spectral norm of -alpha g - g alpha + beta beta^T - g (sigma sigma^T)^{-1} g.
double are_residual(const MarketModel& model, const SymMatrix& gamma);

/// Solves A X + X A^T = Q through the Kronecker form (I (x) A + A (x) I) vec X = vec Q.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

struct AreOptions {
    double tol = 1e-9;
    double max_time = 0.0;      // 0: 200 / lambda_min(alpha) + 50
    double switch_tol = 1e-6;   // flow speed (relative) at which Newton takes over
    int max_newton = 50;
    long max_flow_steps = 200000;  // past this, Newton starts from wherever the flow got to
    bool check_uniqueness = true;
};

struct AreSolution {
    SymMatrix gamma_inf;
    double residual_norm = 0.0;
    int iterations = 0;         // RK4 steps + Newton steps
    int newton_steps = 0;
    double flow_time = 0.0;
    std::string method;
    double uniqueness_gap = 0.0;  // distance to the solution reached from 0_d (when checked)
};

/// Stationary covariance of the returns-only filter: integrates the Riccati flow
/// from Sigma0 and polishes with Newton's method on the algebraic equation.
AreSolution solve_are(const MarketModel& model, const AreOptions& options = {});

/// e^{-alpha t}(gamma0 + int_0^t e^{alpha s} beta beta^T e^{alpha s} ds) e^{-alpha t}
SymMatrix lyapunov_flow(const MarketModel& model, const SymMatrix& gamma0, double t);

/// Solution of alpha X + X alpha = beta beta^T.
SymMatrix lyapunov_fixed_point(const MarketModel& model);

}  // namespace driftfilter
