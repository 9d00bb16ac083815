// Command-line front end: quantize | solve | spreads | simulate, each driven
// by a JSON config. Exit codes: 0 success, 2 invalid arguments or inputs,
// 3 numerical failure, 4 I/O failure.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optex/io.hpp"

namespace {

using Driver = std::vector<std::string> (*)(const optex::RunConfig&, std::string&);

int dispatch(Driver driver, const std::string& config_path) {
    const optex::RunConfig config = optex::load_config(config_path);
    std::string log;
    const std::vector<std::string> files = driver(config, log);
    std::cout << log;
    for (const std::string& f : files) std::cout << "wrote " << f << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strike-grid quantization and incentive-contract toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    const char* names[4] = {"quantize", "solve", "spreads", "simulate"};
    const char* blurbs[4] = {
        "select strike grids from a trade report",
        "solve the incentive PDE and export value/incentive tables",
        "export the time-zero spread table",
        "simulate market trajectories under the solved incentives"};
    Driver drivers[4] = {optex::run_quantize, optex::run_solve, optex::run_spreads,
                         optex::run_simulate};
    for (int i = 0; i < 4; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--config", config_path, "JSON run configuration")
            ->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (int i = 0; i < 4; ++i)
            if (app.get_subcommand(names[i])->parsed())
                return dispatch(drivers[i], config_path);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const optex::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const optex::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const optex::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
