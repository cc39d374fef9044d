#include "nlsd/cli/commands.hpp"

#include "nlsd/equilibrium.hpp"
#include "nlsd/error.hpp"
#include "nlsd/indicators.hpp"
#include "nlsd/io.hpp"
#include "svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace nlsd::cli {

namespace fs = std::filesystem;

namespace {

struct Prepared {
    LifeTable table;
    LifeTable fit;
    ImprovementRateTable rates;
    DelayProfile profile;
    KernelWeights kernel;
};

Prepared prepare(const RunConfig &cfg, std::ostream &log) {
    cfg.validate();
    if (cfg.data_path.empty()) {
        throw Error(ErrorCode::BadConfig, "data_path is required");
    }
    if (!cfg.last_fit_year) {
        throw Error(ErrorCode::BadConfig, "last_fit_year is required");
    }
    LoadOptions opts;
    opts.max_age = cfg.max_age;
    opts.clip_epsilon = cfg.clip_epsilon;
    auto table = load_life_table(cfg.data_path, TableFormat::LongCsv, opts);
    if (!table.years().contains(*cfg.last_fit_year)) {
        throw Error(ErrorCode::GridError, "last_fit_year " + std::to_string(*cfg.last_fit_year) +
                                              " outside the data years " + std::to_string(table.first_year()) +
                                              ".." + std::to_string(table.last_year()));
    }
    auto fit = table.slice_years({table.first_year(), *cfg.last_fit_year});
    auto rates = build_rate_table(fit);
    auto profile = build_profile(fit, cfg.h, cfg.lambda, cfg.spheric);
    for (const auto &w : profile.warnings) {
        log << "warning: " << w << '\n';
    }
    auto kernel = build_kernel(cfg.kernel);
    log << "loaded " << cfg.data_path.string() << ": ages 0.." << table.max_age() << ", years "
        << table.first_year() << ".." << table.last_year() << '\n';
    return Prepared{std::move(table), std::move(fit), std::move(rates), std::move(profile), std::move(kernel)};
}

std::ofstream open_output(const RunConfig &cfg, const std::string &name) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const auto path = cfg.output_dir / name;
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    return out;
}

template <class Fn> void write_file(const RunConfig &cfg, const std::string &name, Fn &&fn) {
    auto out = open_output(cfg, name);
    fn(out);
    if (!out) {
        throw Error(ErrorCode::Io, "write failed for " + (cfg.output_dir / name).string());
    }
}

std::string label(double v) { return io::format_double(v); }

EnsembleForecast run_ensemble(const RunConfig &cfg, const Prepared &p, const NoiseSpec &noise, SimConfig sim) {
    const auto history = History::from_table(p.table, *cfg.last_fit_year, p.profile.max_delay);
    return simulate_ensemble(history, p.profile, p.kernel, cfg.boundary, noise, sim);
}

void log_clamps(std::ostream &log, const EnsembleForecast &ens) {
    const auto t = ens.totals();
    log << "clamp events " << t.clamp_events << " of " << t.updates << " updates (raw <= 0: " << t.raw_nonpositive
        << ", raw >= 1: " << t.raw_at_or_above_one << ")\n";
}

std::vector<int> forecast_years(const EnsembleForecast &ens) {
    std::vector<int> years;
    const int horizon = static_cast<int>(std::floor(ens.record_count() * ens.record_dt() + 1e-9));
    for (int y = ens.launch_year() + 1; y <= ens.launch_year() + horizon; ++y) {
        try {
            ens.record_for_year(y);
            years.push_back(y);
        } catch (const Error &) {
        }
    }
    return years;
}

void write_profile_summary(std::ostream &out, const RunConfig &cfg, const Prepared &p) {
    out << "fit_years = " << p.fit.first_year() << ".." << p.fit.last_year() << '\n'
        << "h = " << p.profile.max_delay << '\n'
        << "lambda = " << label(p.profile.exp_lambda) << '\n'
        << "spheric = " << label(cfg.spheric.range_a) << "," << label(cfg.spheric.range_b) << ","
        << label(cfg.spheric.sill) << '\n'
        << "beta = " << label(p.profile.beta) << '\n'
        << "alpha_bar = " << label(p.profile.alpha_bar) << '\n'
        << "mean_delay = " << label(p.profile.mean_delay()) << '\n'
        << "rate_cells = " << p.rates.cell_count() << '\n';
    for (const auto &w : p.profile.warnings) {
        out << "warning = " << w << '\n';
    }
}

} // namespace

void cmd_profile(const RunConfig &cfg, std::ostream &log) {
    const auto p = prepare(cfg, log);
    write_file(cfg, "rate_table.csv", [&](std::ostream &o) { write_rate_table_csv(o, p.rates); });
    write_file(cfg, "delay_profile.csv", [&](std::ostream &o) { write_profile_csv(o, p.profile); });
    write_file(cfg, "kernel.csv", [&](std::ostream &o) { write_kernel_csv(o, p.kernel); });
    write_file(cfg, "profile_summary.txt", [&](std::ostream &o) { write_profile_summary(o, cfg, p); });
    log << "beta = " << label(p.profile.beta) << ", alpha_bar = " << label(p.profile.alpha_bar) << '\n';
}

void cmd_forecast(const RunConfig &cfg, std::ostream &log) {
    const auto p = prepare(cfg, log);
    const auto ens = run_ensemble(cfg, p, cfg.noise, cfg.sim);
    log_clamps(log, ens);
    const auto years = forecast_years(ens);

    write_file(cfg, "profile_summary.txt", [&](std::ostream &o) { write_profile_summary(o, cfg, p); });
    write_file(cfg, "ensemble.csv", [&](std::ostream &o) { write_ensemble_csv(o, ens); });
    write_file(cfg, "ensemble_meta.json", [&](std::ostream &o) { write_ensemble_metadata(o, ens); });
    write_file(cfg, "stats.csv", [&](std::ostream &o) {
        o << "year,age,mean,sd\n";
        for (int y : years) {
            const auto samples = ensemble_samples(ens, y);
            std::vector<double> mean;
            std::vector<double> sd;
            if (samples.size() >= 2) {
                auto st = sample_stats(samples);
                mean = std::move(st.mean);
                sd = std::move(st.sd);
            } else {
                mean = ensemble_mean(ens, y);
            }
            for (std::size_t x = 0; x < mean.size(); ++x) {
                o << y << ',' << x << ',' << label(mean[x]) << ',' << (sd.empty() ? "" : label(sd[x])) << '\n';
            }
        }
    });
    std::vector<std::string> warnings;
    write_file(cfg, "ci.csv", [&](std::ostream &o) {
        o << "year,age,level,lo,hi,observed,inside\n";
        for (int y : years) {
            const std::span<const double> observed =
                p.table.years().contains(y) ? p.table.year_column(y) : std::span<const double>{};
            for (double level : cfg.ci_levels) {
                const auto ci = empirical_ci(ens, y, level);
                for (const auto &w : ci.warnings) {
                    if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
                }
                write_ci_csv(o, y, ci, observed);
            }
        }
    });
    for (const auto &w : warnings) {
        log << "warning: " << w << '\n';
    }
    log << "forecast " << ens.trajectories.size() << " trajectories, years " << ens.launch_year() + 1 << ".."
        << (years.empty() ? ens.launch_year() : years.back()) << '\n';
}

void cmd_validate(const RunConfig &cfg, std::ostream &log) {
    cfg.validate();
    if (cfg.validate_b_values.empty()) {
        throw Error(ErrorCode::BadConfig, "validate.b_values is empty");
    }
    const auto p = prepare(cfg, log);
    const auto split = split_periods(p.table, *cfg.last_fit_year);
    std::vector<int> years;
    for (int y = split.validation.first; y <= split.validation.last; ++y) {
        if (y - *cfg.last_fit_year <= cfg.sim.horizon_years) years.push_back(y);
    }

    std::vector<std::pair<std::string, IndicatorReport>> reports;
    for (double b : cfg.validate_b_values) {
        NoiseSpec noise = cfg.noise;
        noise.intensity_b = b;
        const auto ens = run_ensemble(cfg, p, noise, cfg.sim);
        log << "b = " << label(b) << ": ";
        log_clamps(log, ens);
        auto report = evaluate_indicators(ens, years, [&](int y) { return p.table.year_column(y); }, cfg.ci_levels);
        for (const auto &w : report.warnings) {
            log << "warning: " << w << '\n';
        }
        write_file(cfg, "indicators_b" + label(b) + ".csv", [&](std::ostream &o) { write_indicator_csv(o, report); });
        write_file(cfg, "ci_b" + label(b) + ".csv", [&](std::ostream &o) {
            o << "year,age,level,lo,hi,observed,inside\n";
            for (int y : years) {
                for (double level : cfg.ci_levels) {
                    write_ci_csv(o, y, empirical_ci(ens, y, level), p.table.year_column(y));
                }
            }
        });
        reports.emplace_back("NLSD " + label(b), std::move(report));
    }

    auto header = [&](std::ostream &o) {
        o << "method";
        for (int y : years) o << ',' << y;
        o << '\n';
    };
    int table_no = 1;
    for (std::size_t li = 0; li < cfg.ci_levels.size(); ++li, ++table_no) {
        write_file(cfg, "table" + std::to_string(table_no) + "_count_" + label(cfg.ci_levels[li]) + ".csv",
                   [&](std::ostream &o) {
                       header(o);
                       for (const auto &[method, r] : reports) {
                           o << method;
                           for (const auto &yi : r.years) o << ',' << yi.counts[li].second;
                           o << '\n';
                       }
                   });
    }
    for (const bool relative : {false, true}) {
        write_file(cfg, "table" + std::to_string(table_no++) + (relative ? "_mrqd.csv" : "_mqd.csv"),
                   [&](std::ostream &o) {
                       header(o);
                       for (const auto &[method, r] : reports) {
                           o << method;
                           for (const auto &yi : r.years) o << ',' << label(relative ? yi.errors.mrqd : yi.errors.mqd);
                           o << '\n';
                       }
                   });
    }
    write_file(cfg, "table" + std::to_string(table_no) + "_central.csv", [&](std::ostream &o) {
        const int last = years.empty() ? 0 : years.back();
        o << "method,I_CT1_" << last << ",I_CT2_" << last << '\n';
        for (const auto &[method, r] : reports) {
            o << method;
            if (!r.years.empty()) {
                const auto &c = r.years.back().central;
                for (int power : {1, 2}) {
                    const auto it = std::find_if(c.begin(), c.end(), [&](const auto &e) { return e.first == power; });
                    o << ',' << (it == c.end() ? "" : label(it->second));
                }
            }
            o << '\n';
        }
    });
    log << "validated years " << (years.empty() ? 0 : years.front()) << ".." << (years.empty() ? 0 : years.back())
        << " for " << reports.size() << " noise levels\n";
}

void cmd_equilibrium(const RunConfig &cfg, std::ostream &log) {
    const auto p = prepare(cfg, log);
    const auto launch = p.table.year_column(*cfg.last_fit_year);
    const BoundaryRule rule = cfg.boundary;
    const ExteriorProfile g = [&](int age) { return rule.at(age, launch); };
    const double b = cfg.noise.active() ? cfg.noise.intensity_b : 0.0;
    auto report = analyze_equilibrium(p.kernel, p.profile, g, b);
    if (cfg.T_end > 0.0) {
        SimConfig sim = cfg.sim;
        sim.horizon_years = std::max(sim.horizon_years, static_cast<int>(std::ceil(cfg.T_end)) + p.profile.max_delay);
        const auto ens = run_ensemble(cfg, p, cfg.noise, sim);
        log_clamps(log, ens);
        report.empirical_time_average = empirical_time_average(ens, report.u_bar, p.profile.max_delay, cfg.T_end);
        report.T_end = cfg.T_end;
    }
    write_file(cfg, "equilibrium_report.txt", [&](std::ostream &o) { write_equilibrium_report(o, report); });
    write_file(cfg, "u_bar.csv", [&](std::ostream &o) { write_u_bar_csv(o, report); });
    log << "M1 = " << label(report.M1) << ", delta_h = " << label(report.delta_h)
        << ", cond_m1_ok = " << report.cond_m1_ok << ", cond_h_ok = " << report.cond_h_ok << '\n';
    if (report.theoretical_bound) {
        log << "bound = " << label(*report.theoretical_bound);
        if (report.empirical_time_average) log << ", empirical = " << label(*report.empirical_time_average);
        log << '\n';
    }
}

double silverman_bandwidth(std::span<const double> samples) {
    const auto n = samples.size();
    if (n < 2) {
        return 0.0;
    }
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n - 1));
    const double iqr = empirical_quantile(s, 0.75) - empirical_quantile(s, 0.25);
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> kde_silverman(std::span<const double> samples, std::span<const double> grid) {
    std::vector<double> density(grid.size(), 0.0);
    const double bw = silverman_bandwidth(samples);
    if (!(bw > 0.0)) {
        return density;
    }
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = 0.0;
        for (double v : samples) {
            const double u = (grid[i] - v) / bw;
            sum += std::exp(-0.5 * u * u);
        }
        density[i] = sum * norm;
    }
    return density;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " (run forecast first)");
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        for (auto f : io::split_csv(line)) row.emplace_back(f);
        rows.push_back(std::move(row));
    }
    return rows;
}

double field(const std::vector<std::string> &row, std::size_t i) {
    if (i >= row.size()) return std::nan("");
    return io::parse_double(row[i]).value_or(std::nan(""));
}

const char *palette(std::size_t i) {
    static const char *colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

void copy_markdown_table(std::ostream &md, const fs::path &path) {
    std::ifstream in(path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = io::split_csv(line);
        md << '|';
        for (auto c : cells) md << ' ' << c << " |";
        md << '\n';
        if (first) {
            md << '|';
            for (std::size_t i = 0; i < cells.size(); ++i) md << "---|";
            md << '\n';
            first = false;
        }
    }
    md << '\n';
}

} // namespace

void cmd_report(const RunConfig &cfg, std::ostream &log) {
    cfg.validate();
    const auto dir = cfg.output_dir;
    const auto stats = read_csv(dir / "stats.csv");

    // year -> (ages, means)
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> means;
    for (const auto &r : stats) {
        auto &[ages, m] = means[static_cast<int>(field(r, 0))];
        ages.push_back(field(r, 1));
        m.push_back(field(r, 2));
    }
    if (means.empty()) {
        throw Error(ErrorCode::MissingData, "stats.csv holds no forecast years");
    }

    Chart mean_chart{"Mean forecast by age", "age", "q (log scale)", true, {}};
    std::size_t k = 0;
    for (const auto &[year, series] : means) {
        mean_chart.series.push_back({std::to_string(year), series.first, series.second, palette(k++), false, false});
    }
    write_file(cfg, "fig_mean.svg", [&](std::ostream &o) { write_svg(o, mean_chart); });

    const int last_year = means.rbegin()->first;
    std::vector<std::string> figures{"fig_mean.svg"};
    if (fs::exists(dir / "ci.csv")) {
        const auto ci = read_csv(dir / "ci.csv");
        std::map<double, std::array<std::vector<double>, 3>> bands; // level -> ages, lo, hi
        std::vector<double> obs_age, obs_q;
        for (const auto &r : ci) {
            if (static_cast<int>(field(r, 0)) != last_year) continue;
            auto &b = bands[field(r, 2)];
            b[0].push_back(field(r, 1));
            b[1].push_back(field(r, 3));
            b[2].push_back(field(r, 4));
            if (bands.size() == 1 && r.size() > 5 && !r[5].empty()) {
                obs_age.push_back(field(r, 1));
                obs_q.push_back(field(r, 5));
            }
        }
        Chart ci_chart{"Confidence intervals, " + std::to_string(last_year), "age", "q (log scale)", true, {}};
        k = 1;
        for (const auto &[level, b] : bands) {
            ci_chart.series.push_back({"lo " + label(level), b[0], b[1], palette(k), true, false});
            ci_chart.series.push_back({"hi " + label(level), b[0], b[2], palette(k), true, false});
            ++k;
        }
        ci_chart.series.push_back({"mean", means[last_year].first, means[last_year].second, palette(0), false, false});
        if (!obs_q.empty()) {
            ci_chart.series.push_back({"observed", obs_age, obs_q, "#000000", false, true});
        }
        write_file(cfg, "fig_ci.svg", [&](std::ostream &o) { write_svg(o, ci_chart); });
        figures.push_back("fig_ci.svg");
    }

    if (fs::exists(dir / "ensemble.csv")) {
        std::map<int, std::vector<double>> samples;
        for (const auto &r : read_csv(dir / "ensemble.csv")) {
            if (static_cast<int>(std::lround(field(r, 1))) != last_year || std::abs(field(r, 1) - last_year) > 1e-9) continue;
            const int age = static_cast<int>(field(r, 2));
            if (std::find(cfg.density_ages.begin(), cfg.density_ages.end(), age) != cfg.density_ages.end()) {
                samples[age].push_back(field(r, 3));
            }
        }
        Chart dens_chart{"Density of forecast values, " + std::to_string(last_year), "q", "density", false, {}};
        write_file(cfg, "density.csv", [&](std::ostream &o) {
            o << "year,age,q,density\n";
            k = 0;
            for (const auto &[age, v] : samples) {
                const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
                const double pad = 3.0 * silverman_bandwidth(v);
                std::vector<double> grid(128);
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    grid[i] = *lo - pad + (*hi - *lo + 2 * pad) * static_cast<double>(i) / 127.0;
                }
                const auto d = kde_silverman(v, grid);
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    o << last_year << ',' << age << ',' << label(grid[i]) << ',' << label(d[i]) << '\n';
                }
            }
        });
        figures.push_back("density.csv");
    }

    write_file(cfg, "report.md", [&](std::ostream &md) {
        md << "# Forecast report\n\n";
        if (fs::exists(dir / "profile_summary.txt")) {
            md << "## Delay profile\n\n```\n" << std::ifstream(dir / "profile_summary.txt").rdbuf() << "```\n\n";
        }
        if (fs::exists(dir / "ensemble_meta.json")) {
            std::ifstream in(dir / "ensemble_meta.json");
            const auto meta = nlohmann::json::parse(in, nullptr, false);
            if (!meta.is_discarded()) {
                md << "## Ensemble\n\n"
                   << "- launch year: " << meta.value("launch_year", 0) << '\n'
                   << "- trajectories: " << meta["sim"].value("n_trajectories", 0) << '\n'
                   << "- noise: " << meta["noise"].value("kind", std::string()) << ", b = "
                   << label(meta["noise"].value("b", 0.0)) << '\n'
                   << "- clamp events: " << meta["clamp_totals"].value("clamp_events", 0ULL) << " of "
                   << meta["clamp_totals"].value("updates", 0ULL) << " updates\n\n";
            }
        }
        if (fs::exists(dir / "equilibrium_report.txt")) {
            md << "## Equilibrium\n\n```\n" << std::ifstream(dir / "equilibrium_report.txt").rdbuf() << "```\n\n";
        }
        std::vector<fs::path> tables;
        for (const auto &e : fs::directory_iterator(dir)) {
            const auto name = e.path().filename().string();
            if (name.rfind("table", 0) == 0 && e.path().extension() == ".csv") tables.push_back(e.path());
        }
        std::sort(tables.begin(), tables.end());
        if (!tables.empty()) {
            md << "## Validation tables\n\n";
            for (const auto &t : tables) {
                md << "### " << t.stem().string() << "\n\n";
                copy_markdown_table(md, t);
            }
        }
        md << "## Figures\n\n";
        for (const auto &f : figures) {
            if (f.ends_with(".svg")) {
                md << "![" << f << "](" << f << ")\n\n";
            } else {
                md << "- [" << f << "](" << f << ")\n";
            }
        }
    });
    log << "report written to " << (dir / "report.md").string() << '\n';
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Delayed nonlocal stochastic mortality forecasting"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    bool dump_config = false;
    app.add_option("-c,--config", config_path, "key = value configuration file");
    app.add_option("-s,--set", overrides, "override a setting, e.g. --set sim.n_trajectories=100");
    app.add_option("-o,--output-dir", output_dir, "output directory (overrides output_dir)");
    app.add_flag("--print-config", dump_config, "print the effective configuration before running");
    app.add_subcommand("profile", "improvement rates, delay profile and kernel");
    app.add_subcommand("forecast", "ensemble forecast with statistics and confidence intervals");
    app.add_subcommand("validate", "indicators over the validation years for each noise level");
    app.add_subcommand("equilibrium", "fixed point, stability conditions and asymptotic bound");
    app.add_subcommand("report", "markdown summary and plots from earlier outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError &e) {
        err << e.what() << '\n' << app.help();
        return 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        }
        for (const auto &o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) {
                throw Error(ErrorCode::BadConfig, "--set expects key=value, got '" + o + "'");
            }
            apply_setting(cfg, std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
        }
        if (!output_dir.empty()) {
            cfg.output_dir = output_dir;
        }
        cfg.validate();
        if (dump_config) {
            write_config(out, cfg);
        }
        const auto *sub = app.get_subcommands().front();
        const auto &name = sub->get_name();
        if (name == "profile") cmd_profile(cfg, err);
        else if (name == "forecast") cmd_forecast(cfg, err);
        else if (name == "validate") cmd_validate(cfg, err);
        else if (name == "equilibrium") cmd_equilibrium(cfg, err);
        else cmd_report(cfg, err);
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return is_input_error(e.code()) ? 2 : 1;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace nlsd::cli
