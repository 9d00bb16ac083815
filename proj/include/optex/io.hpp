#pragma once

// Configuration, data ingestion and file emission for the command-line
// pipeline: quantize strikes -> solve contract -> simulate -> tables.
//
// Formats: trade reports are CSV with header `strike_pct,maturity_days,count`;
// the options book is a JSON array of {strike, maturity, delta?, fee, weight,
// spread_threshold} (delta computed from the underlying model when absent);
// run configuration is a JSON document with sections paths / quantizer /
// model / solver / simulation, every key validated and unknown keys rejected.
// Emitted numbers carry 17 significant digits so emit-then-parse round-trips
// exactly; no output embeds timestamps or environment state.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "optex/contract.hpp"
#include "optex/market.hpp"
#include "optex/quantizer.hpp"
#include "optex/simulate.hpp"

namespace optex {

struct TradeRow {
    double strike = 0.0;         // percent of spot
    double maturity_days = 0.0;  // calendar days to expiry
    double count = 0.0;          // traded contracts
};

// Strict CSV reader for the trade-report format. Malformed content reports
// the offending line number; a missing file is an I/O failure.
std::vector<TradeRow> parse_trade_report(const std::string& path);

struct QuantizerConfig {
    int n = 10;
    int p = 2;
    double epsilon = 1e-8;
    int seeds = 20;
    std::vector<double> maturity_buckets{30.0, 90.0, 180.0};  // day thresholds
};

struct SolverConfig {
    GridConfig grid{2e-3, 0.1, 101, true};
    std::size_t n_paths = 0;  // Monte Carlo cross-check paths per probe (0: none)
    std::uint64_t seed = 1;
    std::vector<ValueProbe> probes;
};

struct SimulationConfig {
    SimConfig sim{1, 1000, 0.0, 0.0};
    bool zero_trade_incentives = false;
};

struct RunConfig {
    std::string trades_path;
    std::string options_path;
    std::string output_dir = ".";
    QuantizerConfig quantizer;
    ModelParams model;
    SolverConfig solver;
    SimulationConfig simulation;
};

// Parse + validate a config file; unknown keys anywhere are rejected and every
// numeric field is checked against its type's invariants.
RunConfig load_config(const std::string& path);

// Options book: from file when configured, else the built-in three-option
// reference book (deltas 0.5/0.8/0.2, fees 0.5/0.8/0.8, thresholds 2/3/3).
// Missing deltas are filled via the arithmetic-model call delta at S0.
std::vector<OptionSpec> load_options(const RunConfig& config);
std::vector<OptionSpec> default_reference_book(const ModelParams& params);

// Maturity bucket label for a configured ascending threshold list, e.g.
// thresholds {30, 90, 180} yield le30d / le90d / le180d / gt180d.
std::string bucket_label(double maturity_days, const std::vector<double>& thresholds);

// Subcommand drivers. Each returns the list of files written (for reporting);
// informational text goes to `log`.
std::vector<std::string> run_quantize(const RunConfig& config, std::string& log);
std::vector<std::string> run_solve(const RunConfig& config, std::string& log);
std::vector<std::string> run_spreads(const RunConfig& config, std::string& log);
std::vector<std::string> run_simulate(const RunConfig& config, std::string& log);

// 17-significant-digit decimal form whose parse returns the same double.
std::string format_double(double v);

}  // namespace optex
