#pragma once

#include <cstdint>

#include "nlsd/life_table.hpp"

namespace nlsd::synth {

/// Smooth mortality surface in Heligman-Pollard form with a log-linear
/// improvement trend and multiplicative lognormal noise. Shapes and sizes
/// resemble a national period table; the values are not real data.
struct SynthConfig {
    int first_year = 1908;
    int last_year = 2023;
    int max_age = kActuarialInfinity;
    /// Yearly decline of the infant, hump and senescent terms.
    double infant_trend = 0.035;
    double hump_trend = 0.02;
    double senescent_trend = 0.009;
    /// Standard deviation of the log-noise; 0 gives a smooth surface.
    double noise = 0.03;
    std::uint64_t seed = 7;
};

/// Noise-free odds-based rate at (age, years since first_year).
double smooth_rate(const SynthConfig &cfg, int age, int t);

LifeTable make_table(const SynthConfig &cfg);

} // namespace nlsd::synth
