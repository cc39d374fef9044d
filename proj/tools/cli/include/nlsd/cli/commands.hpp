#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlsd/cli/config.hpp"

namespace nlsd::cli {

/// Each command validates the configuration, computes, then writes its files
/// under cfg.output_dir. Progress lines go to `log`.
void cmd_profile(const RunConfig &cfg, std::ostream &log);
void cmd_forecast(const RunConfig &cfg, std::ostream &log);
void cmd_validate(const RunConfig &cfg, std::ostream &log);
void cmd_equilibrium(const RunConfig &cfg, std::ostream &log);
void cmd_report(const RunConfig &cfg, std::ostream &log);

/// Full command-line entry point; returns the process exit code
/// (0 ok, 1 computation error, 2 input error).
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// Gaussian kernel density estimate on `grid` with Silverman's bandwidth.
std::vector<double> kde_silverman(std::span<const double> samples, std::span<const double> grid);
double silverman_bandwidth(std::span<const double> samples);

} // namespace nlsd::cli
