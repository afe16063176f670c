#include "driftfilter/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftfilter {

bool is_stable(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("is_stable: matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(a), false);
    if (solver.info() != Eigen::Success) throw NumericError("is_stable: eigenvalue computation failed");
    return (solver.eigenvalues().real().array() < 0.0).all();
}

bool is_stabilizable(const Matrix& a, const Matrix& b, const std::optional<Matrix>& witness) {
    if (a.rows() != a.cols() || b.rows() != a.rows()) throw DimensionError("is_stabilizable: shape mismatch");
    Matrix k;
    if (witness) {
        k = *witness;
    } else if (b.rows() == b.cols()) {
        k = -Matrix::Identity(b.cols(), b.cols());
    } else {
        k = -b.transpose();
    }
    if (k.rows() != b.cols() || k.cols() != a.cols()) throw DimensionError("is_stabilizable: witness has wrong shape");
    return is_stable(a + b * k);
}

bool is_detectable(const Matrix& c, const Matrix& a, const std::optional<Matrix>& witness) {
    if (a.rows() != a.cols() || c.cols() != a.cols()) throw DimensionError("is_detectable: shape mismatch");
    const Matrix f = witness ? *witness : Matrix(-c.transpose());
    if (f.rows() != a.rows() || f.cols() != c.rows()) throw DimensionError("is_detectable: witness has wrong shape");
    return is_stable(a + f * c);
}

bool model_stabilizable(const MarketModel& model) {
    const SymMatrix tau = psd_sqrt(spd_inverse(gram(model.sigma)));
    return is_stabilizable(-model.alpha.mat(), tau.mat());
}

bool model_detectable(const MarketModel& model) {
    return is_detectable(model.beta.transpose(), -model.alpha.mat());
}

double are_residual(const MarketModel& model, const SymMatrix& gamma) {
    return spectral_norm(DriftDynamics(model).riccati_rhs(gamma, true));
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) throw DimensionError("solve_lyapunov: shape mismatch");
    const Eigen::MatrixXd ad(a);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd kron(n * n, n * n);
    // column-major vec: vec(A X) = (I (x) A) vec X, vec(X A^T) = (A (x) I) vec X
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) = id(i, j) * ad + ad(i, j) * id;
        }
    }
    Eigen::VectorXd rhs(n * n);
    for (Eigen::Index j = 0; j < n; ++j) rhs.segment(j * n, n) = q.col(j);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kron);
    if (!lu.isInvertible()) throw NumericError("solve_lyapunov: operator is singular (A and -A share an eigenvalue)");
    const Eigen::VectorXd x = lu.solve(rhs);
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) out.col(j) = x.segment(j * n, n);
    return out;
}

namespace {

struct FlowResult {
    SymMatrix gamma;
    int steps = 0;
    double time = 0.0;
};

// RK4 on the Riccati flow with a step tied to the current stiffness, until the
// flow speed drops below switch_tol * (1 + |gamma|).
FlowResult integrate_to_rest(const DriftDynamics& dyn, SymMatrix gamma, double switch_tol, double max_time,
                             long max_steps) {
    const double alpha_norm = spectral_norm(dyn.alpha());
    const double prec_norm = spectral_norm(dyn.precision());
    // rate at which the flow leaves 0 when the noise and precision are both large
    const double intrinsic = std::sqrt(spectral_norm(dyn.beta_beta_t()) * prec_norm);
    FlowResult out;
    while (true) {
        const SymMatrix rhs = dyn.riccati_rhs(gamma, true);
        const double g_norm = spectral_norm(gamma);
        if (spectral_norm(rhs) <= switch_tol * (1.0 + g_norm) || out.steps >= max_steps) break;
        if (out.time >= max_time) {
            throw NumericError("algebraic Riccati solve: flow did not settle within t = " + std::to_string(max_time));
        }
        double h = 0.1 / (alpha_norm + g_norm * prec_norm + intrinsic + 1e-3);
        for (int halvings = 0;; ++halvings) {
            try {
                gamma = dyn.rk4_step(gamma, h, true);
                break;
            } catch (const NumericError&) {
                if (halvings == 20) throw;
                h *= 0.5;
            }
        }
        out.time += h;
        ++out.steps;
    }
    out.gamma = gamma;
    return out;
}

}  // namespace

AreSolution solve_are(const MarketModel& model, const AreOptions& options) {
    if (!model_stabilizable(model)) throw std::invalid_argument("algebraic Riccati solve: (-alpha, tau) is not stabilizable");
    if (!model_detectable(model)) throw std::invalid_argument("algebraic Riccati solve: (beta^T, -alpha) is not detectable");
    const DriftDynamics dyn(model);
    const double max_time = options.max_time > 0.0 ? options.max_time : 200.0 / min_eig(model.alpha) + 50.0;
    const double switch_tol = std::max(options.switch_tol, options.tol);

    auto solve_from = [&](const SymMatrix& start, AreSolution& sol) {
        FlowResult flow = integrate_to_rest(dyn, start, switch_tol, max_time, options.max_flow_steps);
        if (!is_stable(-(model.alpha.mat() + flow.gamma.mat() * dyn.precision().mat()))) {
            throw NumericError("algebraic Riccati solve: flow stopped at a non-stabilizing point; raise max_flow_steps");
        }
        SymMatrix g = flow.gamma;
        double residual = spectral_norm(dyn.riccati_rhs(g, true));
        int newton = 0;
        while (residual > options.tol && newton < options.max_newton) {
            // (alpha + g P) X + X (alpha + g P)^T = F(g)
            const Matrix closed = model.alpha.mat() + g.mat() * dyn.precision().mat();
            const Matrix x = solve_lyapunov(closed, dyn.riccati_rhs(g, true).mat());
            g = psd_clip(SymMatrix(g.mat() + x));
            residual = spectral_norm(dyn.riccati_rhs(g, true));
            ++newton;
        }
        if (residual > options.tol) {
            throw NumericError("algebraic Riccati solve: residual " + std::to_string(residual) + " above tolerance after " +
                               std::to_string(newton) + " Newton steps");
        }
        sol.gamma_inf = g;
        sol.residual_norm = residual;
        sol.newton_steps = newton;
        sol.iterations = flow.steps + newton;
        sol.flow_time = flow.time;
    };

    AreSolution solution;
    solution.method = "rk4-flow+newton";
    solve_from(model.sigma0, solution);
    if (options.check_uniqueness) {
        AreSolution other;
        solve_from(SymMatrix::zero(model.dim()), other);
        solution.uniqueness_gap = spectral_norm(solution.gamma_inf - other.gamma_inf);
    }
    return solution;
}

SymMatrix lyapunov_flow(const MarketModel& model, const SymMatrix& gamma0, double t) {
    if (t < 0.0) throw std::invalid_argument("lyapunov_flow: t must be non-negative");
    if (t == 0.0) return gamma0;
    return DriftDynamics(model).lyapunov_step(gamma0, t);
}

SymMatrix lyapunov_fixed_point(const MarketModel& model) {
    return SymMatrix(solve_lyapunov(model.alpha.mat(), gram(model.beta).mat()));
}

}  // namespace driftfilter
