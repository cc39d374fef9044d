#include "nlsd/life_table.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace nlsd {

namespace {

std::string cell_name(int age, int year) {
    return "(age=" + std::to_string(age) + ", year=" + std::to_string(year) + ")";
}

} // namespace

LifeTable::LifeTable(int max_age, int first_year, std::vector<double> q, std::string source_id)
    : max_age_{max_age}, first_year_{first_year}, year_count_{0}, q_{std::move(q)},
      source_id_{std::move(source_id)} {
    if (max_age_ < 0) {
        throw Error(ErrorCode::GridError, "max_age must be nonnegative");
    }
    const auto ages = static_cast<std::size_t>(age_count());
    if (q_.empty() || q_.size() % ages != 0) {
        throw Error(ErrorCode::GridError, "value count is not a whole number of age profiles");
    }
    year_count_ = static_cast<int>(q_.size() / ages);
    for (int t = 0; t < year_count_; ++t) {
        for (int x = 0; x <= max_age_; ++x) {
            const double v = q_[static_cast<std::size_t>(t) * ages + static_cast<std::size_t>(x)];
            if (!(v > 0.0 && v < 1.0)) {
                throw Error(ErrorCode::OutOfRange,
                            "q=" + io::format_double(v) + " at " + cell_name(x, first_year_ + t) +
                                " is outside (0,1)");
            }
        }
    }
}

double LifeTable::q(int age, int year) const {
    if (age < 0 || age > max_age_ || year < first_year() || year > last_year()) {
        throw Error(ErrorCode::GridError, "cell " + cell_name(age, year) + " outside the table");
    }
    return q_[static_cast<std::size_t>(year - first_year_) * static_cast<std::size_t>(age_count()) +
              static_cast<std::size_t>(age)];
}

std::span<const double> LifeTable::year_column(int year) const {
    if (year < first_year() || year > last_year()) {
        throw Error(ErrorCode::GridError, "year " + std::to_string(year) + " outside the table");
    }
    const auto ages = static_cast<std::size_t>(age_count());
    return std::span<const double>(q_).subspan(static_cast<std::size_t>(year - first_year_) * ages, ages);
}

LifeTable LifeTable::slice_years(YearInterval range) const {
    if (range.empty() || range.first < first_year() || range.last > last_year()) {
        throw Error(ErrorCode::GridError, "year slice [" + std::to_string(range.first) + ", " +
                                              std::to_string(range.last) + "] outside the table");
    }
    const auto ages = static_cast<std::ptrdiff_t>(age_count());
    auto begin = q_.begin() + (range.first - first_year_) * ages;
    auto end = begin + range.size() * ages;
    return LifeTable(max_age_, range.first, std::vector<double>(begin, end), source_id_);
}

LifeTable parse_life_table(std::istream &in, const LoadOptions &options, const std::string &source_id) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::map<std::pair<int, int>, double> cells; // (year, age) -> q

    while (std::getline(in, line)) {
        ++line_no;
        const auto text = io::trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto fields = io::split_csv(text);
        if (!have_header) {
            if (fields.size() != 3 || fields[0] != "age" || fields[1] != "year" || fields[2] != "qx") {
                throw Error(ErrorCode::GridError, source_id + ": expected header 'age,year,qx'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 3) {
            throw Error(ErrorCode::GridError,
                        source_id + ":" + std::to_string(line_no) + ": expected 3 fields");
        }
        const auto age = io::parse_int(fields[0]);
        const auto year = io::parse_int(fields[1]);
        auto q = io::parse_double(fields[2]);
        if (!age || !year || !q) {
            throw Error(ErrorCode::GridError,
                        source_id + ":" + std::to_string(line_no) + ": unparsable row");
        }
        if (*age < 0 || *age > options.max_age) {
            throw Error(ErrorCode::GridError, source_id + ":" + std::to_string(line_no) + ": age " +
                                                  std::to_string(*age) + " outside 0.." +
                                                  std::to_string(options.max_age));
        }
        if (options.clip_epsilon) {
            const double eps = *options.clip_epsilon;
            q = std::clamp(*q, eps, 1.0 - eps);
        }
        if (!(*q > 0.0 && *q < 1.0)) {
            throw Error(ErrorCode::OutOfRange,
                        source_id + ": q=" + std::string(fields[2]) + " at " +
                            cell_name(static_cast<int>(*age), static_cast<int>(*year)) +
                            " is outside (0,1)");
        }
        const auto key = std::make_pair(static_cast<int>(*year), static_cast<int>(*age));
        if (!cells.emplace(key, *q).second) {
            throw Error(ErrorCode::GridError,
                        source_id + ": duplicate cell " + cell_name(key.second, key.first));
        }
    }
    if (!have_header) {
        throw Error(ErrorCode::GridError, source_id + ": empty file");
    }
    if (cells.empty()) {
        throw Error(ErrorCode::MissingData, source_id + ": no data rows");
    }

    const int first_year = cells.begin()->first.first;
    const int last_year = cells.rbegin()->first.first;
    // Every year in [first, last] must appear at least once; a hole is a grid
    // error rather than a missing cell.
    for (int year = first_year; year <= last_year; ++year) {
        auto it = cells.lower_bound({year, 0});
        if (it == cells.end() || it->first.first != year) {
            throw Error(ErrorCode::GridError,
                        source_id + ": year axis is not contiguous (no rows for " + std::to_string(year) + ")");
        }
    }

    std::vector<double> q;
    q.reserve(static_cast<std::size_t>(last_year - first_year + 1) *
              static_cast<std::size_t>(options.max_age + 1));
    for (int year = first_year; year <= last_year; ++year) {
        for (int age = 0; age <= options.max_age; ++age) {
            auto it = cells.find({year, age});
            if (it == cells.end()) {
                throw Error(ErrorCode::MissingData, source_id + ": missing cell " + cell_name(age, year));
            }
            q.push_back(it->second);
        }
    }
    return LifeTable(options.max_age, first_year, std::move(q), source_id);
}

LifeTable load_life_table(const std::filesystem::path &path, TableFormat format, const LoadOptions &options) {
    (void)format; // LongCsv is the only layout
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open data file '" + path.string() + "'");
    }
    return parse_life_table(in, options, path.string());
}

void write_life_table(std::ostream &out, const LifeTable &table) {
    out << "age,year,qx\n";
    for (int year = table.first_year(); year <= table.last_year(); ++year) {
        const auto column = table.year_column(year);
        for (int age = 0; age <= table.max_age(); ++age) {
            out << age << ',' << year << ',' << io::format_double(column[static_cast<std::size_t>(age)])
                << '\n';
        }
    }
}

void BoundaryRule::validate() const {
    if (!(above_infinity_rate > 0.0 && above_infinity_rate < 1.0)) {
        throw Error(ErrorCode::BadConfig, "boundary.above_rate must lie in (0,1)");
    }
    if (below_zero_weights[0] < 0.0 || below_zero_weights[1] < 0.0 ||
        std::abs(below_zero_weights[0] + below_zero_weights[1] - 1.0) > 1e-12) {
        throw Error(ErrorCode::BadConfig, "boundary.below_weights must be nonnegative and sum to 1");
    }
    if (below_zero_rate && !(*below_zero_rate >= 0.0 && *below_zero_rate < 1.0)) {
        throw Error(ErrorCode::BadConfig, "boundary.below_rate must lie in [0,1)");
    }
}

double BoundaryRule::at(int age, std::span<const double> profile) const {
    const int max_age = static_cast<int>(profile.size()) - 1;
    if (age > max_age) {
        return above_infinity_rate;
    }
    if (age < 0) {
        const double q0 = profile[0];
        const double q1 = max_age >= 1 ? profile[1] : profile[0];
        return below_zero(q0, q1);
    }
    throw Error(ErrorCode::NotExterior, "age " + std::to_string(age) + " is inside the modeled range");
}

double exterior_rate(const LifeTable &table, const BoundaryRule &rule, int age, int year) {
    if (age >= 0 && age <= table.max_age()) {
        throw Error(ErrorCode::NotExterior, "age " + std::to_string(age) + " is inside 0.." +
                                                std::to_string(table.max_age()));
    }
    return rule.at(age, table.year_column(year));
}

PeriodSplit split_periods(const LifeTable &table, int last_fit_year) {
    if (last_fit_year >= table.last_year()) {
        throw Error(ErrorCode::EmptyValidation, "last_fit_year " + std::to_string(last_fit_year) +
                                                    " leaves no validation years (table ends " +
                                                    std::to_string(table.last_year()) + ")");
    }
    if (last_fit_year < table.first_year()) {
        throw Error(ErrorCode::GridError, "last_fit_year " + std::to_string(last_fit_year) +
                                              " precedes the first year of the table");
    }
    return {{table.first_year(), last_fit_year}, {last_fit_year + 1, table.last_year()}};
}

} // namespace nlsd
