#include <doctest.h>

#include "nlsd/delay_profile.hpp"
#include "nlsd/error.hpp"
#include "nlsd/synth.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace nlsd;

TEST_SUITE("delay_profile") {

TEST_CASE("spheric weight shape") {
    const SphericConfig c; // a = 20, b = 30, T = 1
    CHECK(spheric_weight(0.0, c) == 1.0);
    CHECK(spheric_weight(9.999, c) == 1.0);
    CHECK(spheric_weight(10.0, c) == doctest::Approx(1.0)); // continuous at b - a
    CHECK(spheric_weight(30.0, c) == 0.0);
    CHECK(spheric_weight(31.0, c) == 0.0);
    const double r = (30.0 - 20.0) / 20.0;
    CHECK(spheric_weight(20.0, c) == doctest::Approx(0.5 * (3 * r - r * r * r)));
    for (double s = 10.0; s < 30.0; s += 0.5) {
        CHECK(spheric_weight(s + 0.5, c) <= spheric_weight(s, c));
    }
    SphericConfig bad;
    bad.range_b = 10.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("global improvement rate") {
    const std::vector<double> base{0.1, 0.2, 0.3};
    const std::vector<double> half{0.05, 0.1, 0.15};
    CHECK(global_improvement_rate(base, base) == doctest::Approx(1.0));
    CHECK(global_improvement_rate(base, half) == doctest::Approx(0.5));
    const std::vector<double> other{0.2, 0.1, 0.3};
    CHECK(global_improvement_rate(base, other) == doctest::Approx((0.02 + 0.02 + 0.09) / 0.14));
    CHECK_THROWS_AS(global_improvement_rate(base, std::vector<double>{0.1}), Error);
    CHECK_THROWS_AS(global_improvement_rate(std::vector<double>{0.0, 0.0}, std::vector<double>{0.1, 0.1}), Error);
}

TEST_CASE("rate table of a three-year toy") {
    LifeTable t(1, 2000, {0.1, 0.2, 0.09, 0.18, 0.081, 0.162});
    const auto table = build_rate_table(t);
    CHECK(table.cell_count() == 3);
    CHECK(table.max_delay() == 2);
    CHECK(table.rate(2000, 1) == doctest::Approx(0.9));
    CHECK(table.rate(2001, 1) == doctest::Approx(0.9));
    CHECK(table.rate(2000, 2) == doctest::Approx(0.81));
    CHECK_THROWS_AS(table.rate(2001, 2), Error);
    CHECK_THROWS_AS(table.at_delay(3), Error);
    std::ostringstream out;
    write_rate_table_csv(out, table);
    CHECK(out.str().rfind("base_year,delay,rate\n2000,1,", 0) == 0);
    CHECK_THROWS_AS(build_rate_table(t.slice_years({2000, 2000})), Error);
}

TEST_CASE("global rate by delay uses spheric weights of the base year index") {
    // Rates at delay 1: base years i = 1..4 carry weights 1,1,1,1 (i < b - a).
    ImprovementRateTable table(2000, 5, {{1.0, 2.0, 3.0, 4.0}, {1.0, 1.0, 1.0}, {5.0, 5.0}, {7.0}});
    CHECK(global_rate_by_delay(table, 1, SphericConfig{}) == doctest::Approx(2.5));
    SphericConfig c;
    c.range_a = 2.0;
    c.range_b = 3.0; // weights: i=1 -> 1, i=2 -> spheric(1), i=3 -> 0, i=4 -> 0
    const double w2 = spheric_weight(2.0, c);
    CHECK(global_rate_by_delay(table, 1, c) == doctest::Approx((1.0 + w2 * 2.0 + 0.0 * 3.0) / (1.0 + w2 + 0.0)));
}

TEST_CASE("fit_beta recovers an exact line") {
    std::vector<double> rates;
    for (int d = 1; d <= 10; ++d) rates.push_back(0.98 - 0.004 * d);
    CHECK(fit_beta(rates) == doctest::Approx(-0.004));
    CHECK_THROWS_AS(fit_beta(std::vector<double>{1.0}), Error);
}

TEST_CASE("discretized exponential") {
    const auto f = discretized_exponential(11.0 / 12.0, 90);
    CHECK(f.size() == 91);
    CHECK(std::abs(std::accumulate(f.begin(), f.end(), 0.0) - 1.0) < 1e-12);
    CHECK(f[1] / f[0] == doctest::Approx(std::exp(-11.0 / 12.0)));
    CHECK_THROWS_AS(discretized_exponential(0.0, 3), Error);
}

TEST_CASE("alpha_bar examples") {
    std::vector<double> atom(6, 0.0);
    atom[5] = 1.0;
    CHECK(make_profile(-0.002, atom).alpha_bar == doctest::Approx(0.99));
    CHECK(make_profile(0.0, discretized_exponential(1.0, 4)).alpha_bar == doctest::Approx(1.0));
    const auto p = make_profile(-0.003473, discretized_exponential(11.0 / 12.0, 90));
    CHECK(std::abs(p.alpha_bar - (1.0 + p.beta * p.mean_delay())) < 1e-12);
    CHECK(p.alpha_bar <= 1.0);
    CHECK(p.warnings.empty());
}

TEST_CASE("alpha is clamped at zero with a warning") {
    const auto p = make_profile(-0.5, discretized_exponential(0.1, 4));
    CHECK(p.alpha_values[2] == 0.0);
    CHECK(p.alpha_values[4] == 0.0);
    CHECK(p.alpha_values[1] == doctest::Approx(0.5));
    CHECK(p.warnings.size() == 1);
}

TEST_CASE("build_profile on a synthetic table") {
    synth::SynthConfig sc;
    sc.last_year = 2018;
    const auto t = synth::make_table(sc);
    const auto p = build_profile(t, 90, 11.0 / 12.0, SphericConfig{});
    CHECK(p.max_delay == 90);
    CHECK(p.global_rates.size() == 90);
    CHECK(p.weighted_rates.size() == 90);
    CHECK(p.beta < 0.0);
    CHECK(p.alpha_bar <= 1.0);
    CHECK(p.weighted_rates[0] == doctest::Approx(p.global_rates[0] * p.fstar[1]));
    CHECK_THROWS_AS(build_profile(t, 111, 11.0 / 12.0, SphericConfig{}), Error);
    CHECK_THROWS_AS(build_profile(t, 1, 11.0 / 12.0, SphericConfig{}), Error);
    std::ostringstream out;
    write_profile_csv(out, p);
    CHECK(out.str().rfind("delay,global_rate,fstar,alpha,weighted_rate\n0,,", 0) == 0);
}

}
