#include "nlsd/kernel.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace nlsd {

double gaussian_density(double u, double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw Error(ErrorCode::BadBandwidth, "bandwidth must be positive, got " + io::format_double(bandwidth));
    }
    const double s = u / bandwidth;
    return std::exp(-0.5 * s * s) / (bandwidth * std::sqrt(2.0 * std::numbers::pi));
}

void KernelConfig::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw Error(ErrorCode::BadBandwidth, "kernel.bandwidth must be positive");
    }
    if (max_age < 0) {
        throw Error(ErrorCode::BadConfig, "model.max_age must be nonnegative");
    }
    if (lower_extension < 0) {
        throw Error(ErrorCode::BadConfig, "kernel.lower_extension must be nonnegative");
    }
    if (upper_extension < max_age) {
        throw Error(ErrorCode::BadConfig, "kernel.upper_extension must be at least max_age");
    }
}

KernelWeights::KernelWeights(int lower, int max_age, int upper, std::vector<double> rows)
    : lower_{lower}, max_age_{max_age}, upper_{upper}, rows_{std::move(rows)} {
    const auto width = static_cast<std::size_t>(window_size());
    for (int x = 0; x <= max_age_; ++x) {
        const auto r = row(x);
        double below = 0.0;
        double interior = 0.0;
        double above = 0.0;
        for (std::size_t k = 0; k < width; ++k) {
            const int z = static_cast<int>(k) - lower_;
            if (z < 0) {
                below += r[k];
            } else if (z <= max_age_) {
                interior += r[k];
            } else {
                above += r[k];
            }
        }
        below_mass_.push_back(below);
        interior_mass_.push_back(interior);
        above_mass_.push_back(above);
    }
}

KernelWeights KernelWeights::from_rows(int lower_extension, int max_age, int upper_extension,
                                       std::vector<double> rows) {
    if (lower_extension < 0 || max_age < 0 || upper_extension < max_age) {
        throw Error(ErrorCode::BadConfig, "inconsistent kernel window");
    }
    const auto width = static_cast<std::size_t>(lower_extension + upper_extension + 1);
    if (rows.size() != width * static_cast<std::size_t>(max_age + 1)) {
        throw Error(ErrorCode::BadConfig, "kernel rows have the wrong size");
    }
    for (int x = 0; x <= max_age; ++x) {
        double sum = 0.0;
        for (std::size_t k = 0; k < width; ++k) {
            const double w = rows[static_cast<std::size_t>(x) * width + k];
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw Error(ErrorCode::BadConfig, "kernel weight negative or non-finite in row " + std::to_string(x));
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw Error(ErrorCode::BadConfig, "kernel row " + std::to_string(x) + " sums to " + io::format_double(sum));
        }
    }
    return KernelWeights(lower_extension, max_age, upper_extension, std::move(rows));
}

std::span<const double> KernelWeights::row(int x) const {
    if (x < 0 || x > max_age_) {
        throw Error(ErrorCode::BadAge, "age " + std::to_string(x) + " outside 0.." + std::to_string(max_age_));
    }
    const auto width = static_cast<std::size_t>(window_size());
    return std::span<const double>(rows_).subspan(static_cast<std::size_t>(x) * width, width);
}

std::span<const double> KernelWeights::interior_row(int x) const {
    return row(x).subspan(static_cast<std::size_t>(lower_), static_cast<std::size_t>(age_count()));
}

double KernelWeights::weight(int x, int z) const {
    if (z < -lower_ || z > upper_) {
        return 0.0;
    }
    return row(x)[static_cast<std::size_t>(z + lower_)];
}

KernelWeights build_kernel(const KernelConfig &config) {
    config.validate();
    const int width = config.lower_extension + config.upper_extension + 1;
    std::vector<double> rows(static_cast<std::size_t>(width) * static_cast<std::size_t>(config.max_age + 1));
    for (int x = 0; x <= config.max_age; ++x) {
        double* r = rows.data() + static_cast<std::size_t>(x) * static_cast<std::size_t>(width);
        double norm = 0.0;
        for (int k = 0; k < width; ++k) {
            const int z = k - config.lower_extension;
            r[k] = gaussian_density(std::abs(x - z), config.bandwidth);
            norm += r[k];
        }
        for (int k = 0; k < width; ++k) {
            r[k] /= norm;
        }
    }
    return KernelWeights::from_rows(config.lower_extension, config.max_age, config.upper_extension,
                                    std::move(rows));
}

double convolve(const KernelWeights &weights, std::span<const double> interior,
                const ExteriorProfile &exterior, int x) {
    if (x < 0 || x > weights.max_age()) {
        throw Error(ErrorCode::BadAge, "age " + std::to_string(x) + " outside the modeled range");
    }
    if (interior.size() != static_cast<std::size_t>(weights.age_count())) {
        throw Error(ErrorCode::BadAge, "interior profile does not cover every modeled age");
    }
    const auto r = weights.row(x);
    const int lower = weights.lower_extension();
    double sum = 0.0;
    for (int z = -lower; z <= weights.upper_extension(); ++z) {
        const double w = r[static_cast<std::size_t>(z + lower)];
        const double v = (z >= 0 && z <= weights.max_age()) ? interior[static_cast<std::size_t>(z)] : exterior(z);
        sum += w * v;
    }
    return sum;
}

double convolve_extended(const KernelWeights &weights, std::span<const double> extended, int x) {
    if (extended.size() != static_cast<std::size_t>(weights.window_size())) {
        throw Error(ErrorCode::BadAge, "extended profile does not cover the kernel window");
    }
    const auto r = weights.row(x);
    double sum = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        sum += r[k] * extended[k];
    }
    return sum;
}

void write_kernel_csv(std::ostream &out, const KernelWeights &weights) {
    out << "age,z,weight\n";
    for (int x = 0; x <= weights.max_age(); ++x) {
        const auto r = weights.row(x);
        for (int z = -weights.lower_extension(); z <= weights.upper_extension(); ++z) {
            out << x << ',' << z << ',' << io::format_double(r[static_cast<std::size_t>(z + weights.lower_extension())])
                << '\n';
        }
    }
}

} // namespace nlsd
