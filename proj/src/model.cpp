#include "driftfilter/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace driftfilter {

RateFunction RateFunction::constant(double r) {
    RateFunction f;
    f.knots_ = {{0.0, r}};
    return f;
}

RateFunction RateFunction::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw std::invalid_argument("rate: piecewise-linear rate needs at least one knot");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].first > knots[i - 1].first)) {
            throw std::invalid_argument("rate: knot times must be strictly increasing");
        }
    }
    RateFunction f;
    f.knots_ = std::move(knots);
    return f;
}

double RateFunction::operator()(double t) const {
    if (knots_.size() == 1 || t <= knots_.front().first) return knots_.front().second;
    if (t >= knots_.back().first) return knots_.back().second;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double v, const std::pair<double, double>& k) { return v < k.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.first) / (hi.first - lo.first);
    return (1.0 - w) * lo.second + w * hi.second;
}

void MarketModel::validate() const {
    const int d = alpha.dim();
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("alpha: dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    if (beta.rows() != d || beta.cols() != d) throw std::invalid_argument("beta: must be d x d");
    if (delta.size() != d) throw std::invalid_argument("delta: must have length d");
    if (m0.size() != d) throw std::invalid_argument("m0: must have length d");
    if (sigma.rows() != d || sigma.cols() < 1 || sigma.cols() > kMaxDim) {
        throw std::invalid_argument("sigma: must be d x m with 1 <= m <= " + std::to_string(kMaxDim));
    }
    if (sigma0.dim() != d) throw std::invalid_argument("Sigma0: must be d x d");
    if (!(horizon > 0.0)) throw std::invalid_argument("T: horizon must be positive");
    if (!is_positive_definite(alpha)) throw std::invalid_argument("alpha: must be symmetric positive definite");
    if (!is_positive_definite(gram(beta))) throw std::invalid_argument("beta: beta beta^T must be positive definite");
    if (!is_positive_definite(gram(sigma))) {
        throw std::invalid_argument("sigma: sigma sigma^T must be positive definite");
    }
    if (min_eig(sigma0) < -psd_tolerance(sigma0)) {
        throw std::invalid_argument("Sigma0: must be positive semidefinite");
    }
}

DriftDynamics::DriftDynamics(const MarketModel& model)
    : alpha_(model.alpha),
      bbt_(gram(model.beta)),
      precision_(spd_inverse(gram(model.sigma))),
      alpha_eig_(sym_eigen(model.alpha)) {
    bbt_eigenbasis_ = alpha_eig_.vectors.transpose() * bbt_.mat() * alpha_eig_.vectors;
    alpha_norm_ = alpha_eig_.values.cwiseAbs().maxCoeff();
    precision_norm_ = max_eig(precision_);
}

SymMatrix DriftDynamics::decay(double h) const {
    return spectral_apply(alpha_eig_, [h](double l) { return std::exp(-l * h); });
}

SymMatrix DriftDynamics::noise_cov(double h) const {
    const int d = dim();
    Matrix w(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const double c = alpha_eig_.values(i) + alpha_eig_.values(j);
            // int_0^h e^{-c s} ds
            const double integral = std::abs(c * h) < 1e-300 ? h : -std::expm1(-c * h) / c;
            w(i, j) = bbt_eigenbasis_(i, j) * integral;
        }
    }
    return SymMatrix(alpha_eig_.vectors * w * alpha_eig_.vectors.transpose());
}

SymMatrix DriftDynamics::lyapunov_step(const SymMatrix& gamma, double h) const {
    return congruence(decay(h).mat(), gamma) + noise_cov(h);
}

SymMatrix DriftDynamics::riccati_rhs(const SymMatrix& gamma, bool with_returns) const {
    const Matrix& g = gamma.mat();
    Matrix rhs = -alpha_.mat() * g - g * alpha_.mat() + bbt_.mat();
    if (with_returns) rhs -= g * precision_.mat() * g;
    return SymMatrix(rhs);
}

SymMatrix DriftDynamics::rk4_step(const SymMatrix& gamma, double h, bool with_returns) const {
    const SymMatrix k1 = riccati_rhs(gamma, with_returns);
    const SymMatrix k2 = riccati_rhs(gamma + k1 * (0.5 * h), with_returns);
    const SymMatrix k3 = riccati_rhs(gamma + k2 * (0.5 * h), with_returns);
    const SymMatrix k4 = riccati_rhs(gamma + k3 * h, with_returns);
    SymMatrix next = gamma + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if (!next.mat().allFinite()) {
        throw NumericError("Riccati integration diverged; retry with a step below " + std::to_string(h / 4.0));
    }
    try {
        return psd_clip(next);
    } catch (const NotPsdError&) {
        throw NumericError("Riccati integration lost positive semidefiniteness; retry with a step below " +
                           std::to_string(h / 4.0));
    }
}

SymMatrix DriftDynamics::riccati_advance(const SymMatrix& gamma, double h, bool with_returns) const {
    // Frobenius norm bounds the spectral norm and avoids an eigensolve per step
    const double stiffness = 2.0 * (alpha_norm_ + (with_returns ? gamma.mat().norm() * precision_norm_ : 0.0));
    const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(h) * stiffness / 0.2)));
    if (substeps == 1) return rk4_step(gamma, h, with_returns);
    const double sub = h / substeps;
    SymMatrix g = gamma;
    for (int i = 0; i < substeps; ++i) g = rk4_step(g, sub, with_returns);
    return g;
}

Vector drift_mean(const MarketModel& model, double t) {
    const DriftDynamics dyn(model);
    return model.delta + dyn.decay(t).mat() * (model.m0 - model.delta);
}

SymMatrix drift_cov(const MarketModel& model, double t) {
    if (t == 0.0) return model.sigma0;
    return DriftDynamics(model).lyapunov_step(model.sigma0, t);
}

ExpertSchedule::ExpertSchedule(std::vector<double> dates, std::vector<SymMatrix> gammas)
    : dates_(std::move(dates)), gammas_(std::move(gammas)) {
    if (dates_.size() != gammas_.size()) throw std::invalid_argument("schedule: dates and gammas differ in length");
    if (!dates_.empty() && dates_.front() != 0.0) throw std::invalid_argument("schedule: first date must be 0");
    for (std::size_t k = 1; k < dates_.size(); ++k) {
        if (!(dates_[k] > dates_[k - 1])) throw std::invalid_argument("schedule: dates must be strictly increasing");
    }
    for (std::size_t k = 0; k < gammas_.size(); ++k) {
        if (!is_positive_definite(gammas_[k])) {
            throw std::invalid_argument("schedule: Gamma[" + std::to_string(k) + "] must be positive definite");
        }
    }
}

ExpertSchedule ExpertSchedule::equidistant_count(int n, double horizon, const SymMatrix& gamma) {
    if (n < 0) throw std::invalid_argument("schedule: N must be non-negative");
    std::vector<double> dates(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) dates[k] = horizon * static_cast<double>(k) / static_cast<double>(n);
    return ExpertSchedule(std::move(dates), std::vector<SymMatrix>(static_cast<std::size_t>(n), gamma));
}

ExpertSchedule ExpertSchedule::equidistant_spacing(double spacing, double horizon, const SymMatrix& gamma) {
    if (!(spacing > 0.0)) throw std::invalid_argument("schedule: Delta must be positive");
    std::vector<double> dates;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * spacing;
        if (t >= horizon * (1.0 - 1e-12)) break;
        dates.push_back(t);
    }
    std::vector<SymMatrix> gammas(dates.size(), gamma);
    return ExpertSchedule(std::move(dates), std::move(gammas));
}

void ExpertSchedule::validate_against(double horizon, int dim) const {
    for (std::size_t k = 0; k < dates_.size(); ++k) {
        if (dates_[k] >= horizon) throw std::invalid_argument("schedule: date " + std::to_string(k) + " is not before T");
        if (gammas_[k].dim() != dim) throw std::invalid_argument("schedule: Gamma dimension does not match the model");
    }
}

std::size_t TimeGrid::index_of(double t) const {
    auto it = std::lower_bound(points.begin(), points.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
    if (it == points.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t))) {
        throw std::invalid_argument("time " + std::to_string(t) + " is not a grid point");
    }
    return static_cast<std::size_t>(it - points.begin());
}

TimeGrid make_grid(double horizon, std::span<const double> dates, const GridSpec& spec) {
    if (!(spec.max_step > 0.0)) throw std::invalid_argument("grid: step must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("grid: horizon must be positive");
    std::vector<double> knots{0.0};
    for (double t : dates) {
        if (t < 0.0 || t >= horizon) throw std::invalid_argument("grid: expert date outside [0, T)");
        if (t > knots.back()) knots.push_back(t);
    }
    knots.push_back(horizon);

    TimeGrid grid;
    grid.points.push_back(0.0);
    grid.boundaries.push_back(0);
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double a = knots[s];
        const double b = knots[s + 1];
        auto n = static_cast<std::size_t>(std::ceil((b - a) / spec.max_step - 1e-9));
        n = std::max<std::size_t>(n, static_cast<std::size_t>(std::max(1, spec.min_steps_per_interval)));
        if (spec.even_steps && n % 2 == 1) ++n;
        for (std::size_t i = 1; i < n; ++i) grid.points.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
        grid.points.push_back(b);
        grid.boundaries.push_back(grid.points.size() - 1);
    }
    return grid;
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

// Standard normals from mt19937_64 via Box-Muller; both the engine and the
// transform are fully specified, unlike std::normal_distribution.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    Vector draw(int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = next();
        return v;
    }

private:
    double uniform_open() {
        // (0, 1]: 53 random bits, shifted away from zero
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace

SimulationPath simulate_path(const MarketModel& model, const ExpertSchedule& schedule, const TimeGrid& grid,
                             std::uint64_t seed) {
    schedule.validate_against(model.horizon, model.dim());
    const int d = model.dim();
    const int m = model.noise_dim();
    const DriftDynamics dyn(model);
    GaussianStream rng(seed);

    SimulationPath path;
    path.grid = grid;
    path.seed = seed;
    path.mu.reserve(grid.points.size());
    path.return_increments.reserve(grid.points.size() - 1);

    std::vector<std::size_t> date_index(schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k) date_index[k] = grid.index_of(schedule.dates()[k]);

    path.mu.push_back(model.m0 + psd_sqrt(model.sigma0).mat() * rng.draw(d));
    std::vector<SymMatrix> expert_sqrt;
    expert_sqrt.reserve(schedule.size());
    for (const auto& g : schedule.gammas()) expert_sqrt.push_back(psd_sqrt(g));

    std::size_t next_expert = 0;
    auto observe = [&](std::size_t i) {
        while (next_expert < schedule.size() && date_index[next_expert] == i) {
            ExpertObservation obs;
            obs.k = next_expert;
            obs.t = schedule.dates()[next_expert];
            obs.grid_index = i;
            obs.z = path.mu[i] + expert_sqrt[next_expert].mat() * rng.draw(d);
            path.experts.push_back(std::move(obs));
            ++next_expert;
        }
    };

    for (std::size_t s = 0; s < grid.segments(); ++s) {
        const std::size_t i0 = grid.boundaries[s];
        const std::size_t i1 = grid.boundaries[s + 1];
        const double h = (grid.points[i1] - grid.points[i0]) / static_cast<double>(i1 - i0);
        const Matrix decay = dyn.decay(h).mat();
        const Matrix noise = psd_sqrt(dyn.noise_cov(h)).mat();
        const Matrix vol = model.sigma * std::sqrt(h);
        for (std::size_t i = i0; i < i1; ++i) {
            observe(i);
            const Vector& mu = path.mu[i];
            path.return_increments.push_back(mu * h + vol * rng.draw(m));
            path.mu.push_back(model.delta + decay * (mu - model.delta) + noise * rng.draw(d));
        }
    }
    observe(grid.points.size() - 1);
    return path;
}

SimulationPath simulate_path(const MarketModel& model, const ExpertSchedule& schedule, double grid_step,
                             std::uint64_t seed) {
    if (!(grid_step > 0.0)) throw std::invalid_argument("simulate: grid step must be positive");
    GridSpec spec;
    spec.max_step = grid_step;
    spec.min_steps_per_interval = 1;
    spec.even_steps = false;
    return simulate_path(model, schedule, make_grid(model.horizon, schedule.dates(), spec), seed);
}

AbsoluteView relative_to_absolute(const Matrix& pick, const Vector& q, const SymMatrix& xi_cov) {
    const auto l = pick.rows();
    if (l < 1 || l > pick.cols()) throw DimensionError("relative view: pick matrix must be l x d with 1 <= l <= d");
    if (q.size() != l || xi_cov.dim() != l) throw DimensionError("relative view: Q and xi covariance must have length l");
    const SymMatrix ppt = gram(pick);
    Eigen::FullPivLU<Matrix> lu(pick);
    if (lu.rank() < l) throw std::invalid_argument("relative view: pick matrix must have full row rank");
    AbsoluteView view;
    view.pick = pick;
    view.lift = spd_solve(ppt, pick).transpose();
    view.phi_cov = congruence(view.lift, xi_cov);
    return view;
}

}  // namespace driftfilter
