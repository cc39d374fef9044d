#include "nlsd/cli/config.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

namespace nlsd::cli {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
    throw Error(ErrorCode::BadConfig,
                std::string(key) + ": expected " + std::string(want) + ", got '" + std::string(value) + "'");
}

double as_double(std::string_view key, std::string_view value) {
    const auto v = io::parse_double(value);
    if (!v || !std::isfinite(*v)) {
        bad_value(key, value, "a number");
    }
    return *v;
}

int as_int(std::string_view key, std::string_view value) {
    const auto v = io::parse_int(value);
    if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
        bad_value(key, value, "an integer");
    }
    return static_cast<int>(*v);
}

std::uint64_t as_seed(std::string_view key, std::string_view value) {
    const auto v = io::parse_int(value);
    if (!v || *v < 0) {
        bad_value(key, value, "a nonnegative integer");
    }
    return static_cast<std::uint64_t>(*v);
}

std::vector<double> as_doubles(std::string_view key, std::string_view value) {
    std::vector<double> out;
    for (auto part : io::split_csv(value)) {
        out.push_back(as_double(key, part));
    }
    return out;
}

std::vector<int> as_ints(std::string_view key, std::string_view value) {
    std::vector<int> out;
    for (auto part : io::split_csv(value)) {
        out.push_back(as_int(key, part));
    }
    return out;
}

template <class T> std::string join(const std::vector<T> &values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_floating_point_v<T>) {
            s += io::format_double(values[i]);
        } else {
            s += std::to_string(values[i]);
        }
    }
    return s;
}

struct Entry {
    std::string_view key;
    std::function<void(RunConfig &, std::string_view)> set;
    std::function<std::string(const RunConfig &)> get;
};

std::string fmt(double v) { return io::format_double(v); }

// An empty value clears an optional setting.
std::optional<int> as_optional_int(std::string_view key, std::string_view value) {
    if (value.empty()) return std::nullopt;
    return as_int(key, value);
}

std::optional<double> as_optional_double(std::string_view key, std::string_view value) {
    if (value.empty()) return std::nullopt;
    return as_double(key, value);
}

const std::vector<Entry> &entries() {
    static const std::vector<Entry> table = {
        {"data_path", [](RunConfig &c, std::string_view v) { c.data_path = std::string(v); },
         [](const RunConfig &c) { return c.data_path.string(); }},
        {"last_fit_year", [](RunConfig &c, std::string_view v) { c.last_fit_year = as_optional_int("last_fit_year", v); },
         [](const RunConfig &c) { return c.last_fit_year ? std::to_string(*c.last_fit_year) : std::string(); }},
        {"output_dir", [](RunConfig &c, std::string_view v) { c.output_dir = std::string(v); },
         [](const RunConfig &c) { return c.output_dir.string(); }},
        {"model.max_age",
         [](RunConfig &c, std::string_view v) {
             c.max_age = as_int("model.max_age", v);
             c.kernel.max_age = c.max_age;
         },
         [](const RunConfig &c) { return std::to_string(c.max_age); }},
        {"ingest.clip_epsilon", [](RunConfig &c, std::string_view v) { c.clip_epsilon = as_optional_double("ingest.clip_epsilon", v); },
         [](const RunConfig &c) { return c.clip_epsilon ? fmt(*c.clip_epsilon) : std::string(); }},
        {"delay.h", [](RunConfig &c, std::string_view v) { c.h = as_int("delay.h", v); },
         [](const RunConfig &c) { return std::to_string(c.h); }},
        {"delay.lambda", [](RunConfig &c, std::string_view v) { c.lambda = as_double("delay.lambda", v); },
         [](const RunConfig &c) { return fmt(c.lambda); }},
        {"spheric.a", [](RunConfig &c, std::string_view v) { c.spheric.range_a = as_double("spheric.a", v); },
         [](const RunConfig &c) { return fmt(c.spheric.range_a); }},
        {"spheric.b", [](RunConfig &c, std::string_view v) { c.spheric.range_b = as_double("spheric.b", v); },
         [](const RunConfig &c) { return fmt(c.spheric.range_b); }},
        {"spheric.T", [](RunConfig &c, std::string_view v) { c.spheric.sill = as_double("spheric.T", v); },
         [](const RunConfig &c) { return fmt(c.spheric.sill); }},
        {"kernel.bandwidth", [](RunConfig &c, std::string_view v) { c.kernel.bandwidth = as_double("kernel.bandwidth", v); },
         [](const RunConfig &c) { return fmt(c.kernel.bandwidth); }},
        {"kernel.lower_extension",
         [](RunConfig &c, std::string_view v) { c.kernel.lower_extension = as_int("kernel.lower_extension", v); },
         [](const RunConfig &c) { return std::to_string(c.kernel.lower_extension); }},
        {"kernel.upper_extension",
         [](RunConfig &c, std::string_view v) { c.kernel.upper_extension = as_int("kernel.upper_extension", v); },
         [](const RunConfig &c) { return std::to_string(c.kernel.upper_extension); }},
        {"boundary.above_rate",
         [](RunConfig &c, std::string_view v) { c.boundary.above_infinity_rate = as_double("boundary.above_rate", v); },
         [](const RunConfig &c) { return fmt(c.boundary.above_infinity_rate); }},
        {"boundary.below_weights",
         [](RunConfig &c, std::string_view v) {
             const auto w = as_doubles("boundary.below_weights", v);
             if (w.size() != 2) {
                 bad_value("boundary.below_weights", v, "two comma-separated weights");
             }
             c.boundary.below_zero_weights = {w[0], w[1]};
         },
         [](const RunConfig &c) {
             return fmt(c.boundary.below_zero_weights[0]) + "," + fmt(c.boundary.below_zero_weights[1]);
         }},
        {"boundary.below_rate",
         [](RunConfig &c, std::string_view v) { c.boundary.below_zero_rate = as_optional_double("boundary.below_rate", v); },
         [](const RunConfig &c) { return c.boundary.below_zero_rate ? fmt(*c.boundary.below_zero_rate) : std::string(); }},
        {"noise.kind",
         [](RunConfig &c, std::string_view v) {
             const auto k = parse_noise_kind(io::trim(v));
             if (!k) {
                 bad_value("noise.kind", v, "none, linear or logistic");
             }
             c.noise.kind = *k;
         },
         [](const RunConfig &c) { return std::string(to_string(c.noise.kind)); }},
        {"noise.b", [](RunConfig &c, std::string_view v) { c.noise.intensity_b = as_double("noise.b", v); },
         [](const RunConfig &c) { return fmt(c.noise.intensity_b); }},
        {"sim.tau", [](RunConfig &c, std::string_view v) { c.sim.time_step_tau = as_double("sim.tau", v); },
         [](const RunConfig &c) { return fmt(c.sim.time_step_tau); }},
        {"sim.horizon", [](RunConfig &c, std::string_view v) { c.sim.horizon_years = as_int("sim.horizon", v); },
         [](const RunConfig &c) { return std::to_string(c.sim.horizon_years); }},
        {"sim.n_trajectories",
         [](RunConfig &c, std::string_view v) { c.sim.n_trajectories = as_int("sim.n_trajectories", v); },
         [](const RunConfig &c) { return std::to_string(c.sim.n_trajectories); }},
        {"sim.base_seed", [](RunConfig &c, std::string_view v) { c.sim.base_seed = as_seed("sim.base_seed", v); },
         [](const RunConfig &c) { return std::to_string(c.sim.base_seed); }},
        {"sim.clamp_epsilon",
         [](RunConfig &c, std::string_view v) { c.sim.clamp_epsilon = as_double("sim.clamp_epsilon", v); },
         [](const RunConfig &c) { return fmt(c.sim.clamp_epsilon); }},
        {"sim.threads", [](RunConfig &c, std::string_view v) { c.sim.threads = as_int("sim.threads", v); },
         [](const RunConfig &c) { return std::to_string(c.sim.threads); }},
        {"sim.record_every_steps",
         [](RunConfig &c, std::string_view v) { c.sim.record_every_steps = as_int("sim.record_every_steps", v); },
         [](const RunConfig &c) { return std::to_string(c.sim.record_every_steps); }},
        {"ci.levels", [](RunConfig &c, std::string_view v) { c.ci_levels = as_doubles("ci.levels", v); },
         [](const RunConfig &c) { return join(c.ci_levels); }},
        {"validate.b_values",
         [](RunConfig &c, std::string_view v) { c.validate_b_values = as_doubles("validate.b_values", v); },
         [](const RunConfig &c) { return join(c.validate_b_values); }},
        {"equilibrium.T_end", [](RunConfig &c, std::string_view v) { c.T_end = as_double("equilibrium.T_end", v); },
         [](const RunConfig &c) { return fmt(c.T_end); }},
        {"report.density_ages", [](RunConfig &c, std::string_view v) { c.density_ages = as_ints("report.density_ages", v); },
         [](const RunConfig &c) { return join(c.density_ages); }},
    };
    return table;
}

} // namespace

void apply_setting(RunConfig &cfg, std::string_view key, std::string_view value) {
    key = io::trim(key);
    value = io::trim(value);
    for (const auto &e : entries()) {
        if (e.key == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw Error(ErrorCode::BadConfig, "unknown configuration key '" + std::string(key) + "'");
}

RunConfig parse_config(std::istream &in, RunConfig cfg) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) {
            text = text.substr(0, hash);
        }
        text = io::trim(text);
        if (text.empty()) {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": expected key = value");
        }
        try {
            apply_setting(cfg, text.substr(0, eq), text.substr(eq + 1));
        } catch (const Error &e) {
            throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": " +
                                                  std::string(e.what()).substr(std::string("BadConfig: ").size()));
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path &path, RunConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open config file " + path.string());
    }
    return parse_config(in, std::move(base));
}

void RunConfig::validate() const {
    if (max_age < 0) {
        throw Error(ErrorCode::BadConfig, "model.max_age must be nonnegative");
    }
    if (kernel.max_age != max_age) {
        throw Error(ErrorCode::BadConfig, "kernel and model disagree on max_age");
    }
    if (clip_epsilon && !(*clip_epsilon > 0.0 && *clip_epsilon < 0.5)) {
        throw Error(ErrorCode::BadConfig, "ingest.clip_epsilon must lie in (0, 0.5)");
    }
    if (h < 2) {
        throw Error(ErrorCode::BadConfig, "delay.h must be at least 2");
    }
    if (!(lambda > 0.0)) {
        throw Error(ErrorCode::BadConfig, "delay.lambda must be positive");
    }
    spheric.validate();
    kernel.validate();
    boundary.validate();
    noise.validate();
    sim.validate();
    if (ci_levels.empty()) {
        throw Error(ErrorCode::BadConfig, "ci.levels is empty");
    }
    for (double level : ci_levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw Error(ErrorCode::BadLevel, "ci.levels entries must lie in (0, 1), got " + io::format_double(level));
        }
    }
    for (double b : validate_b_values) {
        if (!(b >= 0.0)) {
            throw Error(ErrorCode::BadConfig, "validate.b_values entries must be nonnegative");
        }
    }
    if (!(T_end >= 0.0)) {
        throw Error(ErrorCode::BadConfig, "equilibrium.T_end must be nonnegative");
    }
    for (int a : density_ages) {
        if (a < 0) {
            throw Error(ErrorCode::BadConfig, "report.density_ages entries must be nonnegative");
        }
    }
}

void write_config(std::ostream &out, const RunConfig &cfg) {
    for (const auto &e : entries()) {
        out << e.key << " = " << e.get(cfg) << '\n';
    }
}

} // namespace nlsd::cli
