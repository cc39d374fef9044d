#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlsd/simulator.hpp"

namespace nlsd {

struct EnsembleStats {
    std::vector<double> mean;
    std::vector<double> sd; // divisor n - 1
};

/// Values of every trajectory at one record, `samples[trajectory][age]`.
std::vector<std::span<const double>> ensemble_samples(const EnsembleForecast &ensemble, int year);

EnsembleStats sample_stats(std::span<const std::span<const double>> samples);
EnsembleStats ensemble_stats(const EnsembleForecast &ensemble, int year);
/// Mean only; defined for a single trajectory.
std::vector<double> ensemble_mean(const EnsembleForecast &ensemble, int year);

/// Linear interpolation between order statistics at position p (n - 1) + 1
/// (1-based) of an ascending sample.
double empirical_quantile(std::span<const double> sorted, double p);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct CiResult {
    double level = 0.0;
    std::vector<Interval> intervals;
    std::vector<std::string> warnings;
};

CiResult sample_ci(std::span<const std::span<const double>> samples, double level);
/// Per-age quantiles at alpha/2 and 1 - alpha/2 for level 1 - alpha.
CiResult empirical_ci(const EnsembleForecast &ensemble, int year, double level);

struct ErrorIndicators {
    double mqd = 0.0;
    double mrqd = 0.0;
};

ErrorIndicators error_indicators(std::span<const double> observed, std::span<const double> mean);
/// Number of ages whose observation lies strictly outside its interval.
int count_indicator(std::span<const double> observed, std::span<const Interval> intervals);
/// Sum over ages of (observed - mean)^2 / sd^power.
double central_indicator(std::span<const double> observed, std::span<const double> mean,
                         std::span<const double> sd, int power);

struct YearIndicators {
    int year = 0;
    ErrorIndicators errors;
    std::vector<std::pair<double, int>> counts;   // (level, count)
    std::vector<std::pair<int, double>> central;  // (power, value)
};

struct IndicatorReport {
    std::vector<double> ci_levels;
    std::vector<YearIndicators> years;
    std::vector<std::string> warnings;
};

/// Indicators for every year of `observed_years` present in the forecast;
/// `observed(year)` returns the observed age profile.
IndicatorReport evaluate_indicators(const EnsembleForecast &ensemble, std::span<const int> observed_years,
                                    const std::function<std::span<const double>(int)> &observed,
                                    std::span<const double> ci_levels);

/// `year,indicator,level_or_power,value`
void write_indicator_csv(std::ostream &out, const IndicatorReport &report);
/// `year,age,level,lo,hi,observed,inside`
void write_ci_csv(std::ostream &out, int year, const CiResult &ci, std::span<const double> observed);

} // namespace nlsd
