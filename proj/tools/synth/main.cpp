// Writes a synthetic long-format life table for demos and benchmarks.
#include "nlsd/error.hpp"
#include "nlsd/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char **argv) {
    nlsd::synth::SynthConfig cfg;
    std::string out_path;
    CLI::App app{"Synthetic life-table generator"};
    app.add_option("-o,--output", out_path, "output CSV (stdout when omitted)");
    app.add_option("--first-year", cfg.first_year);
    app.add_option("--last-year", cfg.last_year);
    app.add_option("--max-age", cfg.max_age);
    app.add_option("--noise", cfg.noise, "log-odds noise standard deviation");
    app.add_option("--seed", cfg.seed);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto table = nlsd::synth::make_table(cfg);
        if (out_path.empty()) {
            nlsd::write_life_table(std::cout, table);
        } else {
            std::ofstream out(out_path);
            if (!out) {
                std::cerr << "cannot write " << out_path << '\n';
                return 2;
            }
            nlsd::write_life_table(out, table);
        }
    } catch (const nlsd::Error &e) {
        std::cerr << e.what() << '\n';
        return nlsd::is_input_error(e.code()) ? 2 : 1;
    }
    return 0;
}
