#include "nlsd/delay_profile.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

namespace nlsd {

void SphericConfig::validate() const {
    if (!(range_a > 0.0) || !(range_b >= range_a)) {
        throw Error(ErrorCode::BadConfig, "spheric ranges must satisfy 0 < a <= b");
    }
    if (!(sill > 0.0)) {
        throw Error(ErrorCode::BadConfig, "spheric sill must be positive");
    }
}

double spheric_weight(double s, const SphericConfig &cfg) {
    const double a = cfg.range_a;
    const double b = cfg.range_b;
    if (s < b - a) {
        return cfg.sill;
    }
    if (s > b) {
        return 0.0;
    }
    const double r = (b - s) / a; // in [0, 1]
    return 0.5 * cfg.sill * (3.0 * r - r * r * r);
}

double global_improvement_rate(std::span<const double> base, std::span<const double> target) {
    if (base.size() != target.size() || base.empty()) {
        throw Error(ErrorCode::DegenerateFit, "age profiles must be nonempty and of equal length");
    }
    double cross = 0.0;
    double square = 0.0;
    for (std::size_t x = 0; x < base.size(); ++x) {
        cross += base[x] * target[x];
        square += base[x] * base[x];
    }
    if (!(square > 0.0)) {
        throw Error(ErrorCode::DegenerateFit, "base profile is identically zero");
    }
    return cross / square;
}

ImprovementRateTable::ImprovementRateTable(int first_year, int year_count,
                                           std::vector<std::vector<double>> by_delay)
    : first_year_{first_year}, year_count_{year_count}, by_delay_{std::move(by_delay)} {
    if (year_count_ < 2 || by_delay_.size() != static_cast<std::size_t>(year_count_ - 1)) {
        throw Error(ErrorCode::InsufficientHistory, "rate table needs at least two years");
    }
    for (std::size_t k = 0; k < by_delay_.size(); ++k) {
        if (by_delay_[k].size() != static_cast<std::size_t>(year_count_) - (k + 1)) {
            throw Error(ErrorCode::InsufficientHistory, "rate table is not triangular");
        }
    }
}

std::span<const double> ImprovementRateTable::at_delay(int d) const {
    if (d < 1 || d > max_delay()) {
        throw Error(ErrorCode::InsufficientHistory,
                    "no improvement rates at delay " + std::to_string(d) + " (max " +
                        std::to_string(max_delay()) + ")");
    }
    return by_delay_[static_cast<std::size_t>(d - 1)];
}

double ImprovementRateTable::rate(int base_year, int d) const {
    const auto rates = at_delay(d);
    const int i = base_year - first_year_;
    if (i < 0 || static_cast<std::size_t>(i) >= rates.size()) {
        throw Error(ErrorCode::InsufficientHistory, "no rate for base year " + std::to_string(base_year) +
                                                        " at delay " + std::to_string(d));
    }
    return rates[static_cast<std::size_t>(i)];
}

std::size_t ImprovementRateTable::cell_count() const noexcept {
    std::size_t n = 0;
    for (const auto &v : by_delay_) {
        n += v.size();
    }
    return n;
}

ImprovementRateTable build_rate_table(const LifeTable &fit) {
    const int n = fit.year_count();
    if (n < 2) {
        throw Error(ErrorCode::InsufficientHistory, "fit period has a single year");
    }
    std::vector<std::vector<double>> by_delay(static_cast<std::size_t>(n - 1));
    for (int d = 1; d < n; ++d) {
        auto &rates = by_delay[static_cast<std::size_t>(d - 1)];
        rates.reserve(static_cast<std::size_t>(n - d));
        for (int t0 = fit.first_year(); t0 + d <= fit.last_year(); ++t0) {
            rates.push_back(global_improvement_rate(fit.year_column(t0), fit.year_column(t0 + d)));
        }
    }
    return ImprovementRateTable(fit.first_year(), n, std::move(by_delay));
}

double global_rate_by_delay(const ImprovementRateTable &table, int d, const SphericConfig &cfg) {
    const auto rates = table.at_delay(d);
    double norm = 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        const double v = spheric_weight(static_cast<double>(k + 1), cfg);
        norm += v;
        sum += v * rates[k];
    }
    if (!(norm > 0.0)) {
        throw Error(ErrorCode::DegenerateFit, "spheric weights vanish at delay " + std::to_string(d));
    }
    return sum / norm;
}

double fit_beta(std::span<const double> rates) {
    if (rates.size() < 2) {
        throw Error(ErrorCode::InsufficientHistory, "slope fit needs at least two delays");
    }
    const auto n = static_cast<double>(rates.size());
    const double mean_d = (n + 1.0) / 2.0;
    const double mean_r = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        const double dx = static_cast<double>(k + 1) - mean_d;
        sxy += dx * (rates[k] - mean_r);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

std::vector<double> discretized_exponential(double lambda, int dmax) {
    if (!(lambda > 0.0) || dmax < 0) {
        throw Error(ErrorCode::BadConfig, "delay density needs lambda > 0 and dmax >= 0");
    }
    std::vector<double> f(static_cast<std::size_t>(dmax + 1));
    double norm = 0.0;
    for (int d = 0; d <= dmax; ++d) {
        f[static_cast<std::size_t>(d)] = std::exp(-lambda * d);
        norm += f[static_cast<std::size_t>(d)];
    }
    for (auto &v : f) {
        v /= norm;
    }
    return f;
}

double DelayProfile::mean_delay() const {
    double m = 0.0;
    for (std::size_t d = 0; d < fstar.size(); ++d) {
        m += static_cast<double>(d) * fstar[d];
    }
    return m;
}

DelayProfile make_profile(double beta, std::vector<double> fstar, double lambda) {
    if (fstar.empty()) {
        throw Error(ErrorCode::BadConfig, "delay density is empty");
    }
    DelayProfile p;
    p.max_delay = static_cast<int>(fstar.size()) - 1;
    p.exp_lambda = lambda;
    p.beta = beta;
    p.fstar = std::move(fstar);
    p.alpha_values.resize(p.fstar.size());
    bool clamped = false;
    for (int d = 0; d <= p.max_delay; ++d) {
        double a = 1.0 + beta * d;
        if (a < 0.0) {
            a = 0.0;
            clamped = true;
        }
        p.alpha_values[static_cast<std::size_t>(d)] = a;
    }
    if (clamped) {
        p.warnings.push_back("alpha(-d) = 1 + beta*d turns negative before d = h; clamped at 0");
    }
    p.alpha_bar = 0.0;
    for (int d = 0; d <= p.max_delay; ++d) {
        p.alpha_bar += p.delay_weight(d);
    }
    return p;
}

DelayProfile build_profile(const LifeTable &fit, int h, double lambda, const SphericConfig &cfg) {
    cfg.validate();
    if (h < 2) {
        throw Error(ErrorCode::InsufficientHistory, "maximum delay h must be at least 2");
    }
    const auto table = build_rate_table(fit);
    if (h > table.max_delay()) {
        throw Error(ErrorCode::InsufficientHistory,
                    "maximum delay " + std::to_string(h) + " exceeds the fit period (max " +
                        std::to_string(table.max_delay()) + ")");
    }
    std::vector<double> rates(static_cast<std::size_t>(h));
    for (int d = 1; d <= h; ++d) {
        rates[static_cast<std::size_t>(d - 1)] = global_rate_by_delay(table, d, cfg);
    }
    auto profile = make_profile(fit_beta(rates), discretized_exponential(lambda, h), lambda);
    profile.global_rates = std::move(rates);
    profile.weighted_rates.resize(profile.global_rates.size());
    for (int d = 1; d <= h; ++d) {
        profile.weighted_rates[static_cast<std::size_t>(d - 1)] =
            profile.global_rates[static_cast<std::size_t>(d - 1)] * profile.fstar[static_cast<std::size_t>(d)];
    }
    return profile;
}

void write_rate_table_csv(std::ostream &out, const ImprovementRateTable &table) {
    out << "base_year,delay,rate\n";
    for (int d = 1; d <= table.max_delay(); ++d) {
        const auto rates = table.at_delay(d);
        for (std::size_t i = 0; i < rates.size(); ++i) {
            out << table.first_year() + static_cast<int>(i) << ',' << d << ',' << io::format_double(rates[i]) << '\n';
        }
    }
}

void write_profile_csv(std::ostream &out, const DelayProfile &profile) {
    out << "delay,global_rate,fstar,alpha,weighted_rate\n";
    for (int d = 0; d <= profile.max_delay; ++d) {
        const auto k = static_cast<std::size_t>(d);
        out << d << ',';
        if (d >= 1 && k - 1 < profile.global_rates.size()) {
            out << io::format_double(profile.global_rates[k - 1]);
        }
        out << ',' << io::format_double(profile.fstar[k]) << ',' << io::format_double(profile.alpha_values[k])
            << ',';
        if (d >= 1 && k - 1 < profile.weighted_rates.size()) {
            out << io::format_double(profile.weighted_rates[k - 1]);
        }
        out << '\n';
    }
}

} // namespace nlsd
