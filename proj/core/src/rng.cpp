#include "nlsd/rng.hpp"

#include <cmath>
#include <numbers>

namespace nlsd {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(base_seed) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

std::pair<double, double> box_muller(double u1, double u2, double tau) noexcept {
    const double r = std::sqrt(-2.0 * std::log(u1)) * std::sqrt(tau);
    const double angle = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
}

double GaussianStream::next_uniform() noexcept {
    // 53 random bits centered in their cell: never exactly 0 or 1.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::pair<double, double> GaussianStream::next_pair(double tau) noexcept {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return box_muller(u1, u2, tau);
}

double GaussianStream::next_increment(double tau) noexcept {
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return z * std::sqrt(tau);
    }
    const auto [z1, z2] = next_pair(1.0);
    spare_ = z2;
    return z1 * std::sqrt(tau);
}

} // namespace nlsd
