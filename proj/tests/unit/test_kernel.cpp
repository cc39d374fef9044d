#include <doctest.h>

#include "desk.hpp"
#include "nlsd/error.hpp"
#include "nlsd/kernel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace nlsd;

TEST_SUITE("kernel_graduation") {

TEST_CASE("gaussian density") {
    CHECK(gaussian_density(0.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(gaussian_density(0.5, 0.25) == doctest::Approx(4.0 * std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi)));
    CHECK_THROWS_AS(gaussian_density(0.0, 0.0), Error);
    try {
        gaussian_density(1.0, -1.0);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::BadBandwidth);
    }
}

TEST_CASE("default kernel rows are stochastic") {
    const auto k = build_kernel(KernelConfig{});
    CHECK(k.age_count() == 101);
    CHECK(k.window_size() == 201);
    for (int x = 0; x <= 100; ++x) {
        double s = 0.0;
        for (double w : k.row(x)) {
            CHECK(w >= 0.0);
            s += w;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
        CHECK(k.below_mass(x) + k.interior_mass(x) + k.above_mass(x) == doctest::Approx(1.0));
    }
    // Narrow bandwidth: nearly all weight on the diagonal.
    CHECK(k.weight(50, 50) > 0.99);
    CHECK(k.weight(50, 51) == doctest::Approx(k.weight(50, 49)));
}

TEST_CASE("rows renormalize over their own window") {
    KernelConfig c;
    c.bandwidth = 3.0;
    c.max_age = 10;
    c.lower_extension = 2;
    c.upper_extension = 12;
    const auto k = build_kernel(c);
    // Age 0 loses its left tail to the window edge, so its remaining weights grow.
    CHECK(k.weight(0, 1) == doctest::Approx(k.weight(0, -1)));
    CHECK(k.weight(0, 0) > k.weight(5, 5));
    CHECK(k.below_mass(10) < k.below_mass(0));
    CHECK(k.above_mass(10) > k.above_mass(0));
    CHECK(k.interior_row(3).size() == 11);
    CHECK(k.interior_row(3)[3] == k.weight(3, 3));
    CHECK_THROWS_AS(k.row(11), Error);
    CHECK_THROWS_AS(k.row(-1), Error);
}

TEST_CASE("config validation") {
    KernelConfig c;
    c.bandwidth = 0;
    CHECK_THROWS_AS(build_kernel(c), Error);
    c = KernelConfig{};
    c.upper_extension = 50;
    CHECK_THROWS_AS(c.validate(), Error);
    c = KernelConfig{};
    c.lower_extension = -1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("from_rows rejects bad rows") {
    CHECK_THROWS_AS(KernelWeights::from_rows(0, 0, 1, {0.5, 0.6}), Error);
    CHECK_THROWS_AS(KernelWeights::from_rows(0, 0, 1, {1.5, -0.5}), Error);
    CHECK_THROWS_AS(KernelWeights::from_rows(0, 0, 1, {1.0}), Error);
    const auto k = KernelWeights::from_rows(1, 0, 1, {0.25, 0.5, 0.25});
    CHECK(k.below_mass(0) == 0.25);
    CHECK(k.interior_mass(0) == 0.5);
    CHECK(k.above_mass(0) == 0.25);
}

TEST_CASE("convolve against a direct double loop") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.001, 0.5);
    KernelConfig c;
    c.bandwidth = 1.7;
    c.max_age = 12;
    c.lower_extension = 4;
    c.upper_extension = 20;
    const auto k = build_kernel(c);
    std::vector<double> interior(13), exterior(25);
    for (auto &v : interior) v = u(rng);
    for (auto &v : exterior) v = u(rng);
    const auto oracle = desk::brute_force_convolution(1.7, 4, 12, 20, interior, exterior);
    std::vector<double> extended(25);
    for (int z = -4; z <= 20; ++z) {
        extended[static_cast<std::size_t>(z + 4)] =
            (z >= 0 && z <= 12) ? interior[static_cast<std::size_t>(z)] : exterior[static_cast<std::size_t>(z + 4)];
    }
    for (int x = 0; x <= 12; ++x) {
        const double got = convolve(k, interior, [&](int z) { return exterior[static_cast<std::size_t>(z + 4)]; }, x);
        CHECK(std::abs(got - oracle[static_cast<std::size_t>(x)]) < 1e-14);
        CHECK(std::abs(convolve_extended(k, extended, x) - got) < 1e-15);
    }
    CHECK_THROWS_AS(convolve(k, interior, [](int) { return 0.0; }, 13), Error);
    CHECK_THROWS_AS(convolve(k, std::vector<double>(5), [](int) { return 0.0; }, 0), Error);
}

TEST_CASE("constant input is reproduced") {
    const auto k = build_kernel(KernelConfig{});
    const std::vector<double> flat(101, 0.2);
    for (int x : {0, 40, 100}) {
        CHECK(convolve(k, flat, [](int) { return 0.2; }, x) == doctest::Approx(0.2).epsilon(1e-13));
    }
}

TEST_CASE("csv dump") {
    const auto k = KernelWeights::from_rows(1, 0, 1, {0.25, 0.5, 0.25});
    std::ostringstream out;
    write_kernel_csv(out, k);
    CHECK(out.str() == "age,z,weight\n0,-1,0.25\n0,0,0.5\n0,1,0.25\n");
}

}
