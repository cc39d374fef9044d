#include "nlsd/indicators.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace nlsd {

std::vector<std::span<const double>> ensemble_samples(const EnsembleForecast &ensemble, int year) {
    const int k = ensemble.record_for_year(year);
    std::vector<std::span<const double>> out;
    out.reserve(ensemble.trajectories.size());
    for (const auto &t : ensemble.trajectories) {
        out.push_back(t.record(k));
    }
    return out;
}

namespace {

void check_samples(std::span<const std::span<const double>> samples) {
    if (samples.empty()) {
        throw Error(ErrorCode::DegenerateStd, "no trajectories");
    }
    for (const auto &s : samples) {
        if (s.size() != samples.front().size()) {
            throw Error(ErrorCode::BadAge, "trajectories disagree on the number of ages");
        }
    }
}

std::vector<double> mean_of(std::span<const std::span<const double>> samples) {
    check_samples(samples);
    std::vector<double> mean(samples.front().size(), 0.0);
    for (const auto &s : samples) {
        for (std::size_t x = 0; x < s.size(); ++x) {
            mean[x] += s[x];
        }
    }
    for (auto &m : mean) {
        m /= static_cast<double>(samples.size());
    }
    return mean;
}

void check_same_size(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error(ErrorCode::BadAge, "age vectors must be nonempty and of equal length");
    }
}

} // namespace

EnsembleStats sample_stats(std::span<const std::span<const double>> samples) {
    EnsembleStats st;
    st.mean = mean_of(samples);
    if (samples.size() < 2) {
        throw Error(ErrorCode::DegenerateStd, "standard deviation needs at least two trajectories");
    }
    st.sd.assign(st.mean.size(), 0.0);
    for (const auto &s : samples) {
        for (std::size_t x = 0; x < s.size(); ++x) {
            const double e = s[x] - st.mean[x];
            st.sd[x] += e * e;
        }
    }
    for (auto &v : st.sd) {
        v = std::sqrt(v / static_cast<double>(samples.size() - 1));
    }
    return st;
}

EnsembleStats ensemble_stats(const EnsembleForecast &ensemble, int year) {
    return sample_stats(ensemble_samples(ensemble, year));
}

std::vector<double> ensemble_mean(const EnsembleForecast &ensemble, int year) {
    return mean_of(ensemble_samples(ensemble, year));
}

double empirical_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw Error(ErrorCode::DegenerateStd, "quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::BadLevel, "quantile probability must lie in [0, 1]");
    }
    const double pos = p * static_cast<double>(sorted.size() - 1); // 0-based
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

CiResult sample_ci(std::span<const std::span<const double>> samples, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorCode::BadLevel, "confidence level must lie in (0, 1), got " + io::format_double(level));
    }
    check_samples(samples);
    const double alpha = 1.0 - level;
    CiResult ci;
    ci.level = level;
    if (static_cast<double>(samples.size()) < 2.0 / alpha) {
        ci.warnings.push_back("level " + io::format_double(level) + " with " + std::to_string(samples.size()) +
                              " trajectories: tails rest on fewer than one sample each");
    }
    std::vector<double> column(samples.size());
    for (std::size_t x = 0; x < samples.front().size(); ++x) {
        for (std::size_t k = 0; k < samples.size(); ++k) {
            column[k] = samples[k][x];
        }
        std::sort(column.begin(), column.end());
        ci.intervals.push_back({empirical_quantile(column, alpha / 2.0), empirical_quantile(column, 1.0 - alpha / 2.0)});
    }
    return ci;
}

CiResult empirical_ci(const EnsembleForecast &ensemble, int year, double level) {
    return sample_ci(ensemble_samples(ensemble, year), level);
}

ErrorIndicators error_indicators(std::span<const double> observed, std::span<const double> mean) {
    check_same_size(observed, mean);
    ErrorIndicators e;
    std::vector<std::size_t> bad;
    for (std::size_t x = 0; x < observed.size(); ++x) {
        const double d2 = (observed[x] - mean[x]) * (observed[x] - mean[x]);
        e.mqd += d2;
        if (mean[x] == 0.0) {
            bad.push_back(x);
        } else {
            e.mrqd += d2 / mean[x];
        }
    }
    if (!bad.empty()) {
        throw Error(ErrorCode::DivisionGuard, "zero ensemble mean at age " + std::to_string(bad.front()));
    }
    const auto n = static_cast<double>(observed.size());
    e.mqd /= n;
    e.mrqd /= n;
    return e;
}

int count_indicator(std::span<const double> observed, std::span<const Interval> intervals) {
    if (observed.size() != intervals.size()) {
        throw Error(ErrorCode::BadAge, "one interval per age is required");
    }
    int count = 0;
    for (std::size_t x = 0; x < observed.size(); ++x) {
        if (observed[x] < intervals[x].lo || observed[x] > intervals[x].hi) {
            ++count;
        }
    }
    return count;
}

double central_indicator(std::span<const double> observed, std::span<const double> mean,
                         std::span<const double> sd, int power) {
    check_same_size(observed, mean);
    check_same_size(observed, sd);
    if (power != 1 && power != 2) {
        throw Error(ErrorCode::BadConfig, "central indicator power must be 1 or 2");
    }
    std::string zero_ages;
    double sum = 0.0;
    for (std::size_t x = 0; x < observed.size(); ++x) {
        if (!(sd[x] > 0.0)) {
            zero_ages += (zero_ages.empty() ? "" : " ") + std::to_string(x);
            continue;
        }
        const double d2 = (observed[x] - mean[x]) * (observed[x] - mean[x]);
        sum += d2 / (power == 1 ? sd[x] : sd[x] * sd[x]);
    }
    if (!zero_ages.empty()) {
        throw Error(ErrorCode::DivisionGuard, "zero ensemble spread at ages " + zero_ages);
    }
    return sum;
}

IndicatorReport evaluate_indicators(const EnsembleForecast &ensemble, std::span<const int> observed_years,
                                    const std::function<std::span<const double>(int)> &observed,
                                    std::span<const double> ci_levels) {
    IndicatorReport report;
    report.ci_levels.assign(ci_levels.begin(), ci_levels.end());
    for (int year : observed_years) {
        const auto samples = ensemble_samples(ensemble, year);
        const auto obs = observed(year);
        YearIndicators yi;
        yi.year = year;
        const auto mean = mean_of(samples);
        yi.errors = error_indicators(obs, mean);
        for (double level : ci_levels) {
            auto ci = sample_ci(samples, level);
            yi.counts.emplace_back(level, count_indicator(obs, ci.intervals));
            for (auto &w : ci.warnings) {
                if (std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end()) {
                    report.warnings.push_back(std::move(w));
                }
            }
        }
        if (samples.size() >= 2) {
            const auto st = sample_stats(samples);
            for (int power : {1, 2}) {
                try {
                    yi.central.emplace_back(power, central_indicator(obs, st.mean, st.sd, power));
                } catch (const Error &e) {
                    if (e.code() != ErrorCode::DivisionGuard) {
                        throw;
                    }
                    report.warnings.push_back(std::to_string(year) + ": " + e.what());
                    break;
                }
            }
        }
        report.years.push_back(std::move(yi));
    }
    return report;
}

void write_indicator_csv(std::ostream &out, const IndicatorReport &report) {
    out << "year,indicator,level_or_power,value\n";
    for (const auto &y : report.years) {
        out << y.year << ",I_MqD,," << io::format_double(y.errors.mqd) << '\n';
        out << y.year << ",I_MRqD,," << io::format_double(y.errors.mrqd) << '\n';
        for (const auto &[level, count] : y.counts) {
            out << y.year << ",I_c," << io::format_double(level) << ',' << count << '\n';
        }
        for (const auto &[power, value] : y.central) {
            out << y.year << ",I_CT," << power << ',' << io::format_double(value) << '\n';
        }
    }
}

void write_ci_csv(std::ostream &out, int year, const CiResult &ci, std::span<const double> observed) {
    for (std::size_t x = 0; x < ci.intervals.size(); ++x) {
        const auto &iv = ci.intervals[x];
        out << year << ',' << x << ',' << io::format_double(ci.level) << ',' << io::format_double(iv.lo) << ','
            << io::format_double(iv.hi) << ',';
        if (x < observed.size()) {
            const bool inside = !(observed[x] < iv.lo || observed[x] > iv.hi);
            out << io::format_double(observed[x]) << ',' << (inside ? 1 : 0);
        } else {
            out << ',';
        }
        out << '\n';
    }
}

} // namespace nlsd
