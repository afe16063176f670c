#include "support.hpp"

#include "driftfilter/montecarlo.hpp"

#include <doctest.h>

using namespace driftfilter;
using namespace testing;

TEST_CASE("regime names round-trip") {
    for (Regime r : {Regime::R, Regime::E, Regime::C, Regime::F}) CHECK(parse_regime(regime_name(r)) == r);
    CHECK_THROWS(parse_regime("X"));
}

TEST_CASE("bayes_update") {
    SUBCASE("perfect prior") {
        const BayesUpdate u = bayes_update(SymMatrix::zero(3), example61_gamma());
        CHECK(u.gamma_plus.mat().norm() < 1e-15);
        CHECK((u.weight - Matrix::Identity(3, 3)).norm() < 1e-14);
    }
    SUBCASE("scalar oracles") {
        CHECK(bayes_update(scalar_sym(0.3), scalar_sym(0.3)).gamma_plus(0, 0) == doctest::Approx(0.15));
        CHECK(bayes_update(scalar_sym(0.2), scalar_sym(0.8)).gamma_plus(0, 0) == doctest::Approx(0.8 * 0.2 / (0.2 + 0.8)));
    }
    SUBCASE("equivalent forms and contraction on random pairs") {
        ConfigSampler s(7);
        for (int trial = 0; trial < 100; ++trial) {
            const int d = s.integer(1, 5);
            const SymMatrix gm = s.psd(d, 0.7);
            const SymMatrix g = s.spd(d, 0.05, 3.0);
            const BayesUpdate u = bayes_update(gm, g);
            const Matrix inv = (gm.mat() + g.mat()).inverse();
            const Matrix via_weight = u.weight * gm.mat();
            const Matrix via_gamma = g.mat() - g.mat() * inv * g.mat();
            CHECK((u.gamma_plus.mat() - via_weight).norm() <= 1e-10 * (1 + gm.mat().norm()));
            CHECK((u.gamma_plus.mat() - via_gamma).norm() <= 1e-10 * (1 + g.mat().norm()));
            CHECK(loewner_leq(u.gamma_plus, g, 1e-10));
            CHECK(loewner_leq(u.gamma_plus, gm, 1e-10));
        }
    }
    CHECK_THROWS_AS(bayes_update(SymMatrix::identity(2), SymMatrix::diagonal(vec({1, 0}))), std::invalid_argument);
}

TEST_CASE("gamma_R") {
    SUBCASE("zero is an equilibrium without drift noise") {
        MarketModel m = example61();
        m.beta = Matrix::Zero(3, 3);
        m.sigma0 = SymMatrix::zero(3);
        const CovariancePath p = gamma_R(m, make_grid(1.0, {}, GridSpec{}));
        for (const auto& g : p.values) CHECK(g.mat().norm() == 0.0);
    }
    SUBCASE("scalar closed-form solution") {
        const double a = 0.8, b = 0.6, s = 0.4, g0 = 0.5;
        const MarketModel m = scalar_model(a, b, s, g0, 6.0);
        const CovariancePath p = gamma_R(m, make_grid(6.0, {}, GridSpec{1e-3, 1, true}));
        double worst = 0.0;
        for (std::size_t i = 0; i < p.values.size(); i += 37) {
            worst = std::max(worst, std::abs(p.values[i](0, 0) - scalar_riccati(a, b, s, g0, p.grid.points[i])));
        }
        CHECK(worst < 1e-11);
        CHECK(p.values.back()(0, 0) == doctest::Approx(s * s * (-a + std::sqrt(a * a + b * b / (s * s)))).epsilon(1e-8));
    }
    SUBCASE("matches a slow midpoint reference in three dimensions") {
        const MarketModel m = example31();
        const CovariancePath p = gamma_R(m, make_grid(1.0, {}, GridSpec{}));
        const DriftDynamics dyn(m);
        const Matrix ref = midpoint_riccati(m.alpha.mat(), dyn.beta_beta_t().mat(), dyn.precision().mat(), m.sigma0.mat(), 1.0, 200000);
        CHECK((p.values.back().mat() - ref).norm() < 1e-8);
        CHECK(spectral_norm(p.values.front()) == doctest::Approx(spectral_norm(m.sigma0)));
    }
}

TEST_CASE("gamma_E") {
    const MarketModel m = example61();
    const SymMatrix g = example61_gamma();

    SUBCASE("update at t0 from Sigma0 and left limits at every date") {
        const MarketModel s = scalar_model(1.0, 0.5, 1.0, 0.2);
        const ExpertSchedule sched({0.0, 0.5}, {scalar_sym(0.8), scalar_sym(0.8)});
        const CovariancePath p = gamma_E(s, sched, make_grid(1.0, sched.dates(), GridSpec{}));
        REQUIRE(p.left_limits.size() == 2);
        CHECK(p.left_limits[0](0, 0) == doctest::Approx(0.2));
        CHECK(p.values[0](0, 0) == doctest::Approx(0.16));
        const std::size_t k1 = p.date_grid_index[1];
        CHECK(p.values[k1](0, 0) < p.left_limits[1](0, 0));
    }

    SUBCASE("useless and perfect estimates") {
        const ExpertSchedule vague = ExpertSchedule::equidistant_count(5, 1.0, SymMatrix::identity(3) * 1e12);
        const CovariancePath p = gamma_E(m, vague, make_grid(1.0, vague.dates(), GridSpec{}));
        for (std::size_t k = 0; k < 5; ++k) CHECK((p.values[p.date_grid_index[k]].mat() - p.left_limits[k].mat()).norm() < 1e-9);
        MarketModel z = m;
        z.sigma0 = SymMatrix::zero(3);
        const ExpertSchedule once({0.0}, {g});
        CHECK(gamma_E(z, once, make_grid(1.0, once.dates(), GridSpec{})).values[0].mat().norm() == 0.0);
    }

    SUBCASE("propagation is exact and grid independent") {
        const ExpertSchedule sched = ExpertSchedule::equidistant_count(4, 1.0, g);
        const CovariancePath coarse = gamma_E(m, sched, make_grid(1.0, sched.dates(), GridSpec{0.05, 2, true}));
        const CovariancePath fine = gamma_E(m, sched, make_grid(1.0, sched.dates(), GridSpec{1e-3, 2, true}));
        CHECK((coarse.values.back().mat() - fine.values.back().mat()).norm() < 1e-12);
        // closed form from the last date, evaluated with independent oracles
        const SymMatrix post = fine.values[fine.date_grid_index[3]];
        const Matrix e = taylor_expm(-m.alpha.mat() * 0.25);
        const Matrix direct = e * post.mat() * e + quadrature_noise_cov(m.alpha.mat(), m.beta, 0.25, 4, 32);
        CHECK((fine.values.back().mat() - direct).norm() < 1e-9);
    }
}

TEST_CASE("gamma_C") {
    const MarketModel m = example61();
    SUBCASE("no experts: identical to gamma_R") {
        const TimeGrid grid = make_grid(1.0, {}, GridSpec{});
        const CovariancePath c = gamma_C(m, ExpertSchedule{}, grid);
        const CovariancePath r = gamma_R(m, grid);
        for (std::size_t i = 0; i < grid.points.size(); ++i) CHECK(c.values[i].mat() == r.values[i].mat());
    }
    SUBCASE("perfect experts collapse the covariance at each date") {
        const ExpertSchedule sharp = ExpertSchedule::equidistant_count(5, 1.0, SymMatrix::identity(3) * 1e-12);
        const CovariancePath c = gamma_C(m, sharp, make_grid(1.0, sharp.dates(), GridSpec{}));
        for (std::size_t idx : c.date_grid_index) CHECK(spectral_norm(c.values[idx]) < 1e-10);
    }
    SUBCASE("ordering and update contraction on the twelve-date example") {
        const MarketModel m31 = example31();
        const ExpertSchedule sched = ExpertSchedule::equidistant_count(12, 1.0, example31_gamma());
        const TimeGrid grid = make_grid(1.0, sched.dates(), GridSpec{});
        const CovariancePath r = gamma_R(m31, grid);
        const CovariancePath e = gamma_E(m31, sched, grid);
        const CovariancePath c = gamma_C(m31, sched, grid);
        bool ordered = true;
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            ordered = ordered && loewner_leq(c.values[i], r.values[i], 1e-9) && loewner_leq(c.values[i], e.values[i], 1e-9);
        }
        CHECK(ordered);
        for (std::size_t k = 0; k < sched.size(); ++k) {
            CHECK(loewner_leq(c.values[c.date_grid_index[k]], c.left_limits[k], 1e-10));
            CHECK(loewner_leq(c.values[c.date_grid_index[k]], sched.gammas()[k], 1e-10));
        }
    }
}

TEST_CASE("covariance_at agrees with the stored path") {
    const MarketModel m = example61();
    const ExpertSchedule sched = ExpertSchedule::equidistant_count(10, 1.0, example61_gamma());
    const GridSpec spec{1e-3, 100, true};
    const TimeGrid grid = make_grid(1.0, sched.dates(), spec);
    for (Regime r : {Regime::R, Regime::E, Regime::C}) {
        const CovariancePath p = covariance_path(m, r == Regime::R ? ExpertSchedule{} : sched, r, grid);
        CHECK((covariance_at(m, sched, r, 1.0, spec).mat() - p.values.back().mat()).norm() < 1e-12);
        // right-continuous at a date
        const std::size_t i = p.date_grid_index.empty() ? grid.index_of(0.5) : p.date_grid_index[5];
        CHECK((covariance_at(m, sched, r, 0.5, spec).mat() - p.values[i].mat()).norm() < 1e-12);
    }
    CHECK(covariance_at(m, sched, Regime::F, 0.5, spec).mat().norm() == 0.0);
}

TEST_CASE("filter_path") {
    const MarketModel m = example61();
    const ExpertSchedule sched = ExpertSchedule::equidistant_count(10, 1.0, example61_gamma());
    const SimulationPath path = simulate_path(m, sched, 0.005, 11);

    const FilterPath f = filter_path(m, sched, path, Regime::F);
    for (std::size_t i = 0; i < path.mu.size(); ++i) CHECK(f.mu_hat[i] == path.mu[i]);

    SUBCASE("E without experts is the unconditional mean") {
        MarketModel shifted = m;
        shifted.m0 = vec({0.2, 0.0, -0.1});
        const SimulationPath p = simulate_path(shifted, ExpertSchedule{}, 0.01, 3);
        const FilterPath e = filter_path(shifted, ExpertSchedule{}, p, Regime::E);
        for (std::size_t i = 0; i < p.grid.points.size(); i += 10) {
            CHECK((e.mu_hat[i] - drift_mean(shifted, p.grid.points[i])).norm() < 1e-13);
        }
    }

    SUBCASE("jumps at the dates are the weighted mean of prior filter and view") {
        for (Regime r : {Regime::E, Regime::C}) {
            const FilterPath fp = filter_path(m, sched, path, r);
            REQUIRE(fp.update_weights.size() == 10);
            for (std::size_t k = 0; k < 10; ++k) {
                const std::size_t i = path.experts[k].grid_index;
                const Matrix& lam = fp.update_weights[k];
                const Vector expected = lam * fp.left_limits[k] + (Matrix::Identity(3, 3) - lam) * path.experts[k].z;
                CHECK((fp.mu_hat[i] - expected).norm() < 1e-14);
                CHECK((fp.mu_hat[i] - fp.left_limits[k]).norm() > 0.0);
            }
        }
    }

    SUBCASE("grid mismatch") {
        const SimulationPath other = simulate_path(m, sched, 0.01, 11);
        const CovariancePath cov = gamma_C(m, sched, other.grid);
        CHECK_THROWS_AS(filter_path(m, sched, path, cov), std::invalid_argument);
    }
}

TEST_CASE("second moments of the filters (small sample)") {
    const MarketModel m = example61();
    const ExpertSchedule sched = ExpertSchedule::equidistant_count(10, 1.0, example61_gamma());
    const double step = 0.002;
    const SimulationPath probe = simulate_path(m, sched, step, 0);
    const CovariancePath cr = covariance_path(m, ExpertSchedule{}, Regime::R, probe.grid);
    const CovariancePath ce = covariance_path(m, sched, Regime::E, probe.grid);
    const CovariancePath cc = covariance_path(m, sched, Regime::C, probe.grid);
    const std::size_t half = probe.grid.index_of(0.5);
    const std::size_t last = probe.grid.points.size() - 1;
    struct Out {
        std::array<Vector, 3> at_half, at_end;
    };
    const int paths = 2000;
    const auto outs = parallel_map<Out>(paths, 0, [&](std::size_t i) {
        const SimulationPath p = simulate_path(m, sched, step, path_seed(77, i));
        Out o;
        const CovariancePath* covs[3] = {&cr, &ce, &cc};
        for (int h = 0; h < 3; ++h) {
            const FilterPath f = filter_path(m, sched, p, *covs[h]);
            o.at_half[h] = f.mu_hat[half];
            o.at_end[h] = f.mu_hat[last];
        }
        return o;
    });
    const CovariancePath* covs[3] = {&cr, &ce, &cc};
    for (int h = 0; h < 3; ++h) {
        for (auto [idx, t] : {std::pair{half, 0.5}, std::pair{last, 1.0}}) {
            const Vector mt = drift_mean(m, t);
            const Matrix target = drift_cov(m, t).mat() + mt * mt.transpose() - covs[h]->values[idx].mat();
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b <= a; ++b) {
                    RunningStats st;
                    for (const auto& o : outs) {
                        const Vector& v = t == 0.5 ? o.at_half[h] : o.at_end[h];
                        st.add(v(a) * v(b));
                    }
                    CHECK(std::abs(st.mean() - target(a, b)) <= 5.0 * st.std_error());
                }
            }
        }
    }
}
