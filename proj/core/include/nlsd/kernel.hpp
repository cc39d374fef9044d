#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "nlsd/life_table.hpp"

namespace nlsd {

/// (1/bandwidth) * phi(u/bandwidth), phi the standard normal density.
double gaussian_density(double u, double bandwidth);

struct KernelConfig {
    double bandwidth = 0.25;
    /// Number of ages below zero included in the window (window starts at -lower_extension).
    int lower_extension = 50;
    /// Last age of the window; must be at least max_age.
    int upper_extension = 150;
    int max_age = kActuarialInfinity;

    void validate() const;
};

/// Row-normalized nonlocal diffusion weights j_{x-z}.
///
/// Row x (0 <= x <= max_age) holds one weight per window age
/// z = -lower_extension .. upper_extension. Rows are nonnegative and sum to 1.
/// Ages z < 0 and z > max_age are exterior; their per-row total mass is cached
/// so callers with a piecewise-constant exterior can skip the exterior sum.
class KernelWeights {
public:
    /// Validates nonnegativity and unit row sums (within 1e-12).
    static KernelWeights from_rows(int lower_extension, int max_age, int upper_extension,
                                   std::vector<double> rows);

    int max_age() const noexcept { return max_age_; }
    int age_count() const noexcept { return max_age_ + 1; }
    int lower_extension() const noexcept { return lower_; }
    int upper_extension() const noexcept { return upper_; }
    int window_size() const noexcept { return lower_ + upper_ + 1; }

    /// Full window row for age x, indexed by z + lower_extension().
    std::span<const double> row(int x) const;
    /// Interior part of row x, indexed by z in 0..max_age.
    std::span<const double> interior_row(int x) const;
    double weight(int x, int z) const;

    /// Sum of j_{x-z} over z in 0..max_age.
    double interior_mass(int x) const { return interior_mass_.at(static_cast<std::size_t>(x)); }
    /// Sum of j_{x-z} over window ages z < 0.
    double below_mass(int x) const { return below_mass_.at(static_cast<std::size_t>(x)); }
    /// Sum of j_{x-z} over window ages z > max_age.
    double above_mass(int x) const { return above_mass_.at(static_cast<std::size_t>(x)); }

private:
    KernelWeights(int lower, int max_age, int upper, std::vector<double> rows);

    int lower_;
    int max_age_;
    int upper_;
    std::vector<double> rows_;
    std::vector<double> interior_mass_;
    std::vector<double> below_mass_;
    std::vector<double> above_mass_;
};

/// Truncated discrete Gaussian kernel: each row renormalizes K_b(|x-z|) over
/// its own window of distances.
KernelWeights build_kernel(const KernelConfig &config);

using ExteriorProfile = std::function<double(int age)>;

/// Sum over interior ages of j_{x-z} interior[z] plus the same sum over the
/// exterior window ages with exterior(z).
double convolve(const KernelWeights &weights, std::span<const double> interior,
                const ExteriorProfile &exterior, int x);

/// Convolution against a profile already laid out over the whole window
/// (`extended[z + lower_extension]`).
double convolve_extended(const KernelWeights &weights, std::span<const double> extended, int x);

/// CSV dump `age,z,weight` of every row.
void write_kernel_csv(std::ostream &out, const KernelWeights &weights);

} // namespace nlsd
