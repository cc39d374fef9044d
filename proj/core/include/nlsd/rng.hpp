#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>

namespace nlsd {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of trajectory `index` in an ensemble; a pure function of its inputs so
/// results never depend on scheduling.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

/// Box-Muller transform of two uniforms in (0,1) into two independent
/// N(0, tau) draws: r = sqrt(-2 ln u1), (r cos 2 pi u2, r sin 2 pi u2) * sqrt(tau).
std::pair<double, double> box_muller(double u1, double u2, double tau) noexcept;

/// Reproducible stream of Brownian increments.
///
/// Uniforms come from mt19937_64 mapped onto the open interval (0,1); normals
/// are produced in Box-Muller pairs. `next_increment` hands out the first
/// member of a pair and keeps the second for the following call, so
/// consecutive ages share a pair and the leftover carries into the next step.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_{seed} {}

    double next_uniform() noexcept;
    /// A fresh pair of N(0, tau) draws (discards nothing, touches no cache).
    std::pair<double, double> next_pair(double tau) noexcept;
    double next_increment(double tau) noexcept;

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_; // standard normal, unscaled
};

/// Two independent N(0, tau) increments; advances the stream by two uniforms.
inline std::pair<double, double> gaussian_increments(GaussianStream &stream, double tau) noexcept {
    return stream.next_pair(tau);
}

} // namespace nlsd
