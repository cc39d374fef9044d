#include <doctest.h>

#include "desk.hpp"
#include "nlsd/equilibrium.hpp"
#include "nlsd/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace nlsd;

namespace {

EnsembleForecast constant_ensemble(const std::vector<double> &state, int records, int n, int h) {
    SimConfig cfg;
    cfg.horizon_years = records;
    cfg.n_trajectories = n;
    std::vector<std::vector<double>> slices(static_cast<std::size_t>(h + 1), state);
    EnsembleForecast e{{}, cfg, NoiseSpec{}, History(2000, slices)};
    for (int k = 0; k < n; ++k) {
        Trajectory t;
        t.age_count = static_cast<int>(state.size());
        for (int r = 0; r < records; ++r) t.values.insert(t.values.end(), state.begin(), state.end());
        e.trajectories.push_back(t);
    }
    return e;
}

double grid_argmax(double delta, double b, double h) {
    const double upper = 2.0 * (1.0 - b * b);
    double best = -1e300, arg = 0.0;
    for (int i = 1; i < 100000; ++i) {
        const double l = upper * i / 100000.0;
        const double v = l - L_value(delta, b, h, l);
        if (v > best) {
            best = v;
            arg = l;
        }
    }
    return arg;
}

} // namespace

TEST_SUITE("equilibrium_analysis") {

TEST_CASE("M1 equals alpha_bar") {
    CHECK(compute_M1(make_profile(0.0, discretized_exponential(1.0, 3))) == doctest::Approx(1.0));
    std::vector<double> atom(6, 0.0);
    atom[5] = 1.0;
    CHECK(compute_M1(make_profile(-0.002, atom)) == doctest::Approx(0.99));
}

TEST_CASE("scalar fixed point by hand") {
    const auto k = KernelWeights::from_rows(1, 0, 0, {0.5, 0.5});
    const auto fp = solve_fixed_point(k, 1.0, [](int) { return 0.4; });
    REQUIRE(fp.u_bar.size() == 1);
    CHECK(fp.u_bar[0] == doctest::Approx(0.4));
    CHECK(fp.residual_norm < 1e-15);
}

TEST_CASE("M1 = 0 gives the zero vector") {
    std::mt19937_64 rng(4);
    const auto k = desk::random_kernel(rng, 6, 3, 9);
    const auto fp = solve_fixed_point(k, 0.0, [](int) { return 0.3; });
    for (double u : fp.u_bar) CHECK(u == 0.0);
}

TEST_CASE("violated diagonal dominance is reported") {
    const auto k = KernelWeights::from_rows(0, 1, 1, {0.5, 0.5, 0.5, 0.5});
    try {
        solve_fixed_point(k, 1.0, [](int) { return 0.1; });
        FAIL("expected NotDiagonallyDominant");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotDiagonallyDominant);
    }
    const auto ok = cond_fixed(k, 0.99);
    CHECK(ok[0]);
    CHECK_FALSE(cond_fixed(k, 1.0)[1]);
}

TEST_CASE("fixed point agrees with iteration and is monotone in g") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int max_age = 2 + static_cast<int>(rng() % 10);
        const auto k = desk::random_kernel(rng, max_age, 2, max_age + 3);
        const double M1 = 0.2 + 0.7 * u(rng);
        std::vector<double> g(static_cast<std::size_t>(k.window_size()));
        for (auto &v : g) v = 0.5 * u(rng);
        auto ext = [&](int z) { return g[static_cast<std::size_t>(z + k.lower_extension())]; };
        const auto fp = solve_fixed_point(k, M1, ext);
        const auto it = desk::iterate_fixed_point(k, M1, ext);
        for (std::size_t i = 0; i < it.size(); ++i) {
            CHECK(std::abs(fp.u_bar[i] - it[i]) < 1e-12);
            CHECK(fp.u_bar[i] >= 0.0);
        }
        CHECK(fp.residual_norm < 1e-12);
        g[0] += 0.1;
        const auto raised = solve_fixed_point(k, M1, ext);
        for (std::size_t i = 0; i < it.size(); ++i) CHECK(raised.u_bar[i] >= fp.u_bar[i]);
    }
}

TEST_CASE("delta by hand") {
    const auto k = KernelWeights::from_rows(1, 1, 1, {0.1, 0.5, 0.4, 0.1, 0.5, 0.4});
    CHECK(k.interior_mass(0) == doctest::Approx(0.9));
    CHECK(compute_delta(k, 1.0, 0.1) == doctest::Approx(0.09));
    CHECK(compute_delta(k, 0.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("stability conditions") {
    const auto c = check_conditions(0.9, 0.05, 0.5);
    CHECK(c.cond_m1_ok);
    CHECK(c.h_limit == doctest::Approx(std::log(0.9975 / 0.0975) / 1.995));
    CHECK(c.h_limit == doctest::Approx(1.166).epsilon(1e-3));
    CHECK(c.cond_h_ok);
    CHECK_FALSE(check_conditions(0.9, 0.05, 1.2).cond_h_ok);
    const auto bad = check_conditions(-0.01, 0.05, 0.0);
    CHECK_FALSE(bad.cond_m1_ok);
    CHECK_FALSE(bad.cond_h_ok);
    CHECK(check_conditions(1e-9, 0.0, 0.0).cond_h_ok); // h = 0 holds whenever delta > 0
    try {
        check_conditions(0.5, 1.0, 1.0);
        FAIL("expected HypothesisViolated");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::HypothesisViolated);
    }
    auto sys = desk::bound_system();
    const auto kc = check_conditions(sys.kernel, sys.profile, 0.05, 2.0);
    CHECK(kc.cond_m1_ok);
    CHECK(kc.cond_h_ok);
}

TEST_CASE("lambda star: interior optimum in closed form") {
    const double delta = 0.95, b = 0.05, h = 2.0;
    const double c = 2.0 * (1.0 - delta - b * b);
    const auto ls = find_lambda_star(delta, b, h);
    REQUIRE(ls.has_value());
    CHECK(std::abs(ls->lambda - std::log(1.0 / (c * h)) / h) < 1e-8);
    CHECK(std::abs(ls->lambda - grid_argmax(delta, b, h)) < 1e-4);
    CHECK(ls->L == doctest::Approx(L_value(delta, b, h, ls->lambda)));
    CHECK(ls->lambda > ls->L);
}

TEST_CASE("lambda star: boundary optimum matches a grid scan") {
    const auto ls = find_lambda_star(0.9, 0.05, 0.5);
    REQUIRE(ls.has_value());
    CHECK(ls->lambda > 1.0);
    CHECK(ls->lambda < 2.0 * (1.0 - 0.0025));
    CHECK(std::abs(ls->lambda - grid_argmax(0.9, 0.05, 0.5)) < 1e-4);
}

TEST_CASE("lambda star does not depend on the search bracket") {
    const auto a = find_lambda_star(0.95, 0.05, 2.0);
    LambdaSearch s;
    s.lo = 0.3;
    s.hi = 1.9;
    const auto b = find_lambda_star(0.95, 0.05, 2.0, s);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(std::abs(a->lambda - b->lambda) < 1e-8);
}

TEST_CASE("lambda star: degenerate delay and infeasible cases") {
    const double delta = 0.3, b = 0.1;
    const auto ls = find_lambda_star(delta, b, 0.0);
    REQUIRE(ls.has_value());
    CHECK(std::abs((ls->lambda - ls->L) - 2.0 * delta) < 1e-9);
    CHECK_FALSE(find_lambda_star(0.01, 0.05, 10.0).has_value());
}

TEST_CASE("theoretical bound") {
    const std::vector<double> u{0.2}; // |u|^2 = 0.04
    CHECK(theoretical_bound(u, 0.1, 1.0, 0.5) == doctest::Approx(0.0016));
    CHECK(theoretical_bound(u, 0.0, 1.0, 0.5) == 0.0);
    CHECK_THROWS_AS(theoretical_bound(u, 0.1, 0.5, 0.5), Error);

    // Larger delta never raises the bound.
    double previous = 1e300;
    for (double delta = 0.90; delta < 0.99; delta += 0.01) {
        const auto ls = find_lambda_star(delta, 0.05, 1.0);
        REQUIRE(ls.has_value());
        const double bound = theoretical_bound(u, 0.05, ls->lambda, ls->L);
        CHECK(bound <= previous);
        previous = bound;
    }
    // With 1 - delta - b^2 held fixed the bound scales as b^2.
    const auto l1 = find_lambda_star(0.9, 0.05, 1.0);
    const auto l2 = find_lambda_star(0.9 - 3 * 0.0025, 0.1, 1.0);
    REQUIRE(l1.has_value());
    REQUIRE(l2.has_value());
    CHECK(theoretical_bound(u, 0.1, l2->lambda, l2->L) ==
          doctest::Approx(4.0 * theoretical_bound(u, 0.05, l1->lambda, l1->L)));
}

TEST_CASE("empirical time average on constant ensembles") {
    const std::vector<double> u_bar{0.1, 0.2, 0.3};
    CHECK(empirical_time_average(constant_ensemble(u_bar, 8, 3, 2), u_bar, 2, 5.0) == 0.0);
    const double c = 0.01;
    const std::vector<double> shifted{0.11, 0.21, 0.31};
    CHECK(empirical_time_average(constant_ensemble(shifted, 8, 1, 2), u_bar, 2, 5.0) ==
          doctest::Approx(3 * c * c));
    try {
        empirical_time_average(constant_ensemble(u_bar, 6, 1, 2), u_bar, 2, 5.0);
        FAIL("expected ShortHorizon");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::ShortHorizon);
    }
}

TEST_CASE("empirical time average takes the sup over the delay window") {
    const std::vector<double> u_bar{0.0};
    auto e = constant_ensemble(u_bar, 6, 1, 1);
    e.trajectories[0].values[0] = 1.0; // t = 1 has squared distance 1
    // sup over [s-1, s]: 0 at s=0, 1 on s in {1, 2}, 0 from s = 3.
    // Trapezoid on [0, 4]: 0.5 + 1 + 0.5 + 0 = 2, divided by 4.
    CHECK(empirical_time_average(e, u_bar, 1, 4.0) == doctest::Approx(0.5));
}

TEST_CASE("analysis and report") {
    auto sys = desk::bound_system();
    const auto g = [&](int age) { return sys.rule.at(age, sys.history.at_delay(0)); };
    const auto r = analyze_equilibrium(sys.kernel, sys.profile, g, 0.05);
    CHECK(r.cond_m1_ok);
    CHECK(r.cond_h_ok);
    REQUIRE(r.lambda_star.has_value());
    REQUIRE(r.theoretical_bound.has_value());
    CHECK(*r.lambda_star > *r.L_at_lambda_star);
    CHECK(*r.lambda_star < 2.0 * (1.0 - 0.0025));
    CHECK(r.residual_norm < 1e-10);
    std::ostringstream rep, csv;
    write_equilibrium_report(rep, r);
    write_u_bar_csv(csv, r);
    CHECK(rep.str().find("cond_m1_ok = true") != std::string::npos);
    CHECK(rep.str().find("empirical_time_average = absent") != std::string::npos);
    CHECK(csv.str().rfind("age,u_bar,cond_fixed_ok\n0,", 0) == 0);

    const auto noiseless = analyze_equilibrium(sys.kernel, sys.profile, g, 0.0);
    REQUIRE(noiseless.theoretical_bound.has_value());
    CHECK(*noiseless.theoretical_bound == 0.0);
}

}
