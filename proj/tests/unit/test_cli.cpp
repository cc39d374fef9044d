#include <doctest.h>

#include "desk.hpp"
#include "nlsd/cli/commands.hpp"
#include "nlsd/cli/config.hpp"
#include "nlsd/error.hpp"
#include "nlsd/io.hpp"
#include "nlsd/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace nlsd;
using namespace nlsd::cli;

namespace {

int run_args(std::vector<std::string> args, std::string *out_text = nullptr, std::string *err_text = nullptr) {
    args.insert(args.begin(), "nlsd");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

int count_lines(const std::string &text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

void write_table(const std::string &path, const LifeTable &table) {
    std::ofstream out(path);
    write_life_table(out, table);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
    std::istringstream in("# comment\n\ndata_path = data.csv\nlast_fit_year=2000\nmodel.max_age = 10\n"
                          "noise.kind = linear\nnoise.b = 0.05\nci.levels = 0.9, 0.5\nsim.base_seed = 99\n");
    const auto cfg = parse_config(in);
    CHECK(cfg.data_path == "data.csv");
    CHECK(cfg.last_fit_year == 2000);
    CHECK(cfg.max_age == 10);
    CHECK(cfg.kernel.max_age == 10);
    CHECK(cfg.noise.kind == NoiseKind::Linear);
    CHECK(cfg.noise.intensity_b == 0.05);
    CHECK(cfg.ci_levels == std::vector<double>{0.9, 0.5});
    CHECK(cfg.sim.base_seed == 99);
    CHECK_NOTHROW(cfg.validate());

    std::ostringstream dumped;
    write_config(dumped, cfg);
    std::istringstream again(dumped.str());
    const auto round = parse_config(again);
    std::ostringstream dumped2;
    write_config(dumped2, round);
    CHECK(dumped.str() == dumped2.str());
}

TEST_CASE("config errors") {
    auto code_of = [](const std::string &text) {
        std::istringstream in(text);
        try {
            parse_config(in);
        } catch (const Error &e) {
            return std::make_pair(e.code(), std::string(e.what()));
        }
        return std::make_pair(ErrorCode::Io, std::string());
    };
    auto [c1, m1] = code_of("\nsim.horizonn = 3\n");
    CHECK(c1 == ErrorCode::BadConfig);
    CHECK(m1.find("line 2") != std::string::npos);
    CHECK(code_of("sim.horizon = three\n").first == ErrorCode::BadConfig);
    CHECK(code_of("noise.kind = cubic\n").first == ErrorCode::BadConfig);
    CHECK(code_of("no equals sign\n").first == ErrorCode::BadConfig);

    RunConfig cfg;
    cfg.sim.time_step_tau = 0.3;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig{};
    cfg.ci_levels = {1.2};
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("exit codes") {
    std::string out, err;
    CHECK(run_args({"--help"}, &out) == 0);
    CHECK(out.find("forecast") != std::string::npos);
    CHECK(run_args({}) == 2);
    CHECK(run_args({"bogus"}) == 2);
    CHECK(run_args({"profile", "--set", "data_path=/nonexistent/q.csv", "--set", "last_fit_year=2000"}, nullptr,
                   &err) == 2);
    CHECK(err.find("/nonexistent/q.csv") != std::string::npos);
    desk::TempDir dir;
    CHECK(run_args({"profile", "--set", "sim.unknown=1", "-o", dir.file("out")}) == 2);
    CHECK_FALSE(std::filesystem::exists(dir.file("out")));
    CHECK(run_args({"profile", "--set", "missing_equals"}) == 2);
}

TEST_CASE("toy table: three years, two delays") {
    desk::TempDir dir;
    synth::SynthConfig sc;
    sc.first_year = 2000;
    sc.last_year = 2002;
    sc.max_age = 2;
    write_table(dir.file("toy.csv"), synth::make_table(sc));
    std::string err;
    const int code = run_args({"profile", "-o", dir.file("out"), "--set", "data_path=" + dir.file("toy.csv"), "--set",
                               "last_fit_year=2002", "--set", "model.max_age=2", "--set", "delay.h=2"},
                              nullptr, &err);
    INFO(err);
    REQUIRE(code == 0);
    const auto rates = desk::read_file(dir.file("out/rate_table.csv"));
    CHECK(count_lines(rates) == 1 + 3);
    CHECK(count_lines(desk::read_file(dir.file("out/delay_profile.csv"))) == 1 + 3);
    CHECK(desk::read_file(dir.file("out/profile_summary.txt")).find("beta") != std::string::npos);
}

TEST_CASE("insufficient history is an input error") {
    desk::TempDir dir;
    synth::SynthConfig sc;
    sc.first_year = 2000;
    sc.last_year = 2002;
    sc.max_age = 2;
    write_table(dir.file("toy.csv"), synth::make_table(sc));
    CHECK(run_args({"profile", "-o", dir.file("out"), "--set", "data_path=" + dir.file("toy.csv"), "--set",
                    "last_fit_year=2002", "--set", "model.max_age=2", "--set", "delay.h=5"}) == 2);
}

TEST_CASE("validation against the model's own noiseless path scores zero error") {
    desk::TempDir dir;
    synth::SynthConfig sc;
    sc.first_year = 2000;
    sc.last_year = 2014;
    sc.max_age = 10;
    sc.noise = 0.0;
    const auto fit = synth::make_table(sc);

    RunConfig cfg;
    apply_setting(cfg, "model.max_age", "10");
    apply_setting(cfg, "delay.h", "5");
    const auto profile = build_profile(fit, cfg.h, cfg.lambda, cfg.spheric);
    const auto kernel = build_kernel(cfg.kernel);
    SimConfig sim;
    sim.horizon_years = 5;
    sim.n_trajectories = 1;
    const auto ens = simulate_ensemble(History::from_table(fit, 2014, 5), profile, kernel, cfg.boundary,
                                       NoiseSpec{NoiseKind::None, 0.0}, sim);
    std::vector<double> q(fit.year_count() * 11);
    for (int y = 2000; y <= 2014; ++y) {
        const auto col = fit.year_column(y);
        std::copy(col.begin(), col.end(), q.begin() + (y - 2000) * 11);
    }
    for (int k = 0; k < 5; ++k) {
        const auto r = ens.trajectories[0].record(k);
        q.insert(q.end(), r.begin(), r.end());
    }
    write_table(dir.file("full.csv"), LifeTable(10, 2000, q));

    std::string err;
    const int code = run_args({"validate", "-o", dir.file("out"), "--set", "data_path=" + dir.file("full.csv"),
                               "--set", "last_fit_year=2014", "--set", "model.max_age=10", "--set", "delay.h=5",
                               "--set", "sim.horizon=5", "--set", "sim.n_trajectories=4", "--set",
                               "validate.b_values=0"},
                              nullptr, &err);
    INFO(err);
    REQUIRE(code == 0);
    const auto csv = desk::read_file(dir.file("out/indicators_b0.csv"));
    std::istringstream in(csv);
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.find("I_MqD") != std::string::npos || line.find("I_MRqD") != std::string::npos ||
            line.find("I_c") != std::string::npos) {
            CHECK(line.substr(line.rfind(',') + 1) == "0");
            ++checked;
        }
    }
    CHECK(checked == 5 * 5);
    CHECK(std::filesystem::exists(dir.file("out/table1_count_0.98.csv")));
    CHECK(std::filesystem::exists(dir.file("out/table4_mqd.csv")));
    CHECK(std::filesystem::exists(dir.file("out/table5_mrqd.csv")));
    CHECK(std::filesystem::exists(dir.file("out/table6_central.csv")));
}

TEST_CASE("forecast, equilibrium and report on a small synthetic table") {
    desk::TempDir dir;
    synth::SynthConfig sc;
    sc.first_year = 1990;
    sc.last_year = 2010;
    sc.max_age = 20;
    write_table(dir.file("t.csv"), synth::make_table(sc));
    const std::vector<std::string> common{"-o", dir.file("out"), "--set", "data_path=" + dir.file("t.csv"),
                                          "--set", "last_fit_year=2005", "--set", "model.max_age=20",
                                          "--set", "delay.h=8", "--set", "sim.n_trajectories=40",
                                          "--set", "sim.horizon=5", "--set", "report.density_ages=0,20"};
    auto with = [&](const std::string &cmd) {
        std::vector<std::string> a{cmd};
        a.insert(a.end(), common.begin(), common.end());
        std::string err;
        const int code = run_args(a, nullptr, &err);
        INFO(cmd << ": " << err);
        CHECK(code == 0);
    };
    with("forecast");
    with("equilibrium");
    with("report");
    for (const char *f : {"ensemble.csv", "ensemble_meta.json", "stats.csv", "ci.csv", "equilibrium_report.txt",
                          "u_bar.csv", "fig_mean.svg", "fig_ci.svg", "density.csv", "report.md"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir.file(std::string("out/") + f)), f);
    }
    CHECK(count_lines(desk::read_file(dir.file("out/stats.csv"))) == 1 + 5 * 21);
    CHECK(count_lines(desk::read_file(dir.file("out/ensemble.csv"))) == 1 + 40 * 5 * 21);
}

TEST_CASE("kernel density estimate") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.01, 0.002);
    std::vector<double> s(500);
    for (auto &v : s) v = n(rng);
    const double bw = silverman_bandwidth(s);
    CHECK(bw > 0.0);
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(-0.01 + 0.04 * i / 2000.0);
    const auto d = kde_silverman(s, grid);
    double mass = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) mass += 0.5 * (d[i] + d[i - 1]) * (grid[i] - grid[i - 1]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    for (double v : d) CHECK(v >= 0.0);
}

}
