#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlsd/delay_profile.hpp"
#include "nlsd/kernel.hpp"
#include "nlsd/life_table.hpp"
#include "nlsd/simulator.hpp"

namespace nlsd::cli {

/// Run configuration. Every field has a default except data_path and
/// last_fit_year, which most commands need.
struct RunConfig {
    std::filesystem::path data_path;
    std::optional<int> last_fit_year;
    std::filesystem::path output_dir = "nlsd_out";

    int max_age = kActuarialInfinity;
    std::optional<double> clip_epsilon;

    int h = 90;
    double lambda = 11.0 / 12.0;
    SphericConfig spheric;
    KernelConfig kernel;
    BoundaryRule boundary;
    NoiseSpec noise;
    SimConfig sim;

    std::vector<double> ci_levels{0.98, 0.90, 0.80};
    std::vector<double> validate_b_values{0.1, 0.05, 0.025};
    double T_end = 0.0;
    std::vector<int> density_ages{0, 20, 40, 60, 80, 100};

    /// Checks every field against the owning module's rules; throws BadConfig.
    void validate() const;
};

/// Applies one `key = value` setting; throws BadConfig for unknown keys or
/// malformed values.
void apply_setting(RunConfig &cfg, std::string_view key, std::string_view value);

/// Flat `key = value` text with `#` comments and blank lines.
RunConfig parse_config(std::istream &in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path &path, RunConfig base = {});

/// Every recognized key with its current value, one `key = value` per line.
void write_config(std::ostream &out, const RunConfig &cfg);

} // namespace nlsd::cli
