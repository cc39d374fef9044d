#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlsd/life_table.hpp"

namespace nlsd {

/// Parameters of the modified spheric weighting. `range_b` plays the role of
/// the outer range; it is unrelated to the noise intensity.
struct SphericConfig {
    double range_a = 20.0;
    double range_b = 30.0;
    double sill = 1.0;

    void validate() const;
};

/// Modified spheric function: the sill on [0, b-a), the spheric variogram
/// evaluated at b-s on [b-a, b], zero beyond b.
double spheric_weight(double s, const SphericConfig &cfg);

/// Through-origin least-squares coefficient of `target` on `base`.
double global_improvement_rate(std::span<const double> base, std::span<const double> target);

/// Triangular table of global improvement rates r(t0, t0 + d).
class ImprovementRateTable {
public:
    ImprovementRateTable(int first_year, int year_count, std::vector<std::vector<double>> by_delay);

    int first_year() const noexcept { return first_year_; }
    int last_year() const noexcept { return first_year_ + year_count_ - 1; }
    int year_count() const noexcept { return year_count_; }
    int max_delay() const noexcept { return year_count_ - 1; }

    /// Rates at delay d, ordered by base year first_year .. last_year - d.
    std::span<const double> at_delay(int d) const;
    double rate(int base_year, int d) const;
    std::size_t cell_count() const noexcept;

private:
    int first_year_;
    int year_count_;
    std::vector<std::vector<double>> by_delay_;
};

ImprovementRateTable build_rate_table(const LifeTable &fit);

/// Spheric-weighted average of the rates at delay d. Weight index i = 1 is
/// the first fit year.
double global_rate_by_delay(const ImprovementRateTable &table, int d, const SphericConfig &cfg);

/// OLS slope of rates[k] against delay k + 1 (intercept fitted, then dropped).
double fit_beta(std::span<const double> rates);

/// Exponential weights e^{-lambda d}, d = 0..dmax, normalized to sum 1.
std::vector<double> discretized_exponential(double lambda, int dmax);

/// Everything the delayed drift needs, on the integer delay grid d = 0..h.
struct DelayProfile {
    int max_delay = 0;
    double exp_lambda = 0.0;
    double beta = 0.0;
    /// Entry k is the global rate at delay k + 1 (empty for synthetic profiles).
    std::vector<double> global_rates;
    /// alpha(-d) = max(0, 1 + beta d), d = 0..h.
    std::vector<double> alpha_values;
    std::vector<double> fstar;
    double alpha_bar = 0.0;
    /// R_weight at delay k + 1; reported only, never used by the simulator.
    std::vector<double> weighted_rates;
    std::vector<std::string> warnings;

    /// fstar[d] * alpha_values[d], the total weight of the delay-d slice.
    double delay_weight(int d) const { return fstar.at(static_cast<std::size_t>(d)) * alpha_values.at(static_cast<std::size_t>(d)); }
    /// Expected delay under fstar.
    double mean_delay() const;
};

/// Assembles alpha, alpha_bar and warnings from a slope and a delay density.
DelayProfile make_profile(double beta, std::vector<double> fstar, double lambda = 0.0);

DelayProfile build_profile(const LifeTable &fit, int h, double lambda, const SphericConfig &cfg);

/// `base_year,delay,rate`
void write_rate_table_csv(std::ostream &out, const ImprovementRateTable &table);
/// `delay,global_rate,fstar,alpha,weighted_rate`; delay 0 has no rate columns.
void write_profile_csv(std::ostream &out, const DelayProfile &profile);

} // namespace nlsd
