#include "nlsd/synth.hpp"

#include "nlsd/error.hpp"
#include "nlsd/rng.hpp"

#include <cmath>
#include <vector>

namespace nlsd::synth {

namespace {

constexpr double kA = 0.06;
constexpr double kB = 0.02;
constexpr double kC = 0.12;
constexpr double kD = 0.004;
constexpr double kE = 8.0;
constexpr double kF = 22.0;
constexpr double kG = 0.00015;
constexpr double kH = 1.095;

} // namespace

double smooth_rate(const SynthConfig &cfg, int age, int t) {
    const double x = age;
    const double a = kA * std::exp(-cfg.infant_trend * t);
    const double d = kD * std::exp(-cfg.hump_trend * t);
    const double g = kG * std::exp(-cfg.senescent_trend * t);
    const double infant = std::pow(a, std::pow(x + kB, kC));
    const double hump = age == 0 ? 0.0 : d * std::exp(-kE * std::pow(std::log(x / kF), 2));
    const double odds = infant + hump + g * std::pow(kH, x);
    return odds / (1.0 + odds);
}

LifeTable make_table(const SynthConfig &cfg) {
    if (cfg.last_year < cfg.first_year || cfg.max_age < 0 || !(cfg.noise >= 0.0)) {
        throw Error(ErrorCode::BadConfig, "synthetic table needs a nonempty year range and noise >= 0");
    }
    GaussianStream stream(cfg.seed);
    std::vector<double> q;
    q.reserve(static_cast<std::size_t>(cfg.last_year - cfg.first_year + 1) *
              static_cast<std::size_t>(cfg.max_age + 1));
    for (int year = cfg.first_year; year <= cfg.last_year; ++year) {
        for (int age = 0; age <= cfg.max_age; ++age) {
            const double p = smooth_rate(cfg, age, year - cfg.first_year);
            const double odds = p / (1.0 - p) * std::exp(cfg.noise * stream.next_increment(1.0));
            q.push_back(odds / (1.0 + odds));
        }
    }
    return LifeTable(cfg.max_age, cfg.first_year, std::move(q), "synthetic seed " + std::to_string(cfg.seed));
}

} // namespace nlsd::synth
