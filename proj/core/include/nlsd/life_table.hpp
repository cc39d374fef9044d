#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlsd {

/// Oldest modeled age. Mortality above it is supplied by the exterior rule.
inline constexpr int kActuarialInfinity = 100;

/// Closed range of calendar years.
struct YearInterval {
    int first = 0;
    int last = -1;

    int size() const noexcept { return last - first + 1; }
    bool empty() const noexcept { return last < first; }
    bool contains(int year) const noexcept { return year >= first && year <= last; }
    friend bool operator==(const YearInterval &, const YearInterval &) = default;
};

/// Observed death probabilities q[age][year] on a complete rectangular grid.
///
/// Ages run 0..max_age (the actuarial infinity, 100 for real tables) and years
/// are contiguous. Every stored value lies strictly inside (0, 1). Storage is
/// year-major so a single year's age profile is one contiguous span.
class LifeTable {
public:
    /// `q` holds year_count * (max_age + 1) values, year-major.
    LifeTable(int max_age, int first_year, std::vector<double> q, std::string source_id = {});

    int max_age() const noexcept { return max_age_; }
    int age_count() const noexcept { return max_age_ + 1; }
    int first_year() const noexcept { return first_year_; }
    int last_year() const noexcept { return first_year_ + year_count_ - 1; }
    int year_count() const noexcept { return year_count_; }
    YearInterval years() const noexcept { return {first_year(), last_year()}; }
    const std::string &source_id() const noexcept { return source_id_; }

    double q(int age, int year) const;
    /// Age profile (ages 0..max_age) for one calendar year.
    std::span<const double> year_column(int year) const;

    /// Sub-table restricted to `range`, which must lie inside years().
    LifeTable slice_years(YearInterval range) const;

private:
    int max_age_;
    int first_year_;
    int year_count_;
    std::vector<double> q_;
    std::string source_id_;
};

enum class TableFormat { LongCsv };

struct LoadOptions {
    int max_age = kActuarialInfinity;
    /// When set, values are clipped into [eps, 1 - eps] instead of rejected.
    std::optional<double> clip_epsilon;
};

/// Reads a long CSV with header `age,year,qx`, one row per (age, year) cell.
LifeTable load_life_table(const std::filesystem::path &path, TableFormat format = TableFormat::LongCsv,
                          const LoadOptions &options = {});
LifeTable parse_life_table(std::istream &in, const LoadOptions &options = {},
                           const std::string &source_id = {});
/// Writes the table in the same long-CSV layout the loader accepts.
void write_life_table(std::ostream &out, const LifeTable &table);

/// Death rates for ages outside the modeled range.
///
/// Above the actuarial infinity a constant rate applies. Below age zero the
/// rate is a fixed linear combination of q_0 and q_1 of the same year, unless a
/// constant `below_zero_rate` is configured.
struct BoundaryRule {
    double above_infinity_rate = 0.385;
    std::array<double, 2> below_zero_weights{0.75, 0.25};
    std::optional<double> below_zero_rate;

    void validate() const;
    double below_zero(double q0, double q1) const noexcept {
        return below_zero_rate ? *below_zero_rate
                               : below_zero_weights[0] * q0 + below_zero_weights[1] * q1;
    }
    /// Exterior rate at `age` given the same-year interior profile.
    double at(int age, std::span<const double> profile) const;
};

/// g_age for a year covered by `table`; throws NotExterior for interior ages.
double exterior_rate(const LifeTable &table, const BoundaryRule &rule, int age, int year);

struct PeriodSplit {
    YearInterval fit;
    YearInterval validation;
};

PeriodSplit split_periods(const LifeTable &table, int last_fit_year);

} // namespace nlsd
