// Timing harness for the parallel kernels against their serial reference
// implementations. Each kernel is run with both execution policies on a
// fixed workload; results are checked for bit-identity while timing.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "optex/contract.hpp"
#include "optex/io.hpp"
#include "optex/quantizer.hpp"
#include "optex/simulate.hpp"

using namespace optex;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-22s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   %s\n",
                name, serial_s, parallel_s, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    ModelParams params;
    const std::vector<OptionSpec> book = default_reference_book(params);

    {
        GridConfig cfg;
        cfg.dt = 2e-3;
        cfg.h_Q = 0.05;
        auto t0 = std::chrono::steady_clock::now();
        const SolveReport a = solve_value_grid(params, book, cfg, {}, exec_policy::serial);
        const double ts = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        const SolveReport b =
            solve_value_grid(params, book, cfg, {}, exec_policy::parallel);
        const double tp = seconds_since(t0);
        report("pde sweep", ts, tp, a.grid.values == b.grid.values);
    }

    {
        auto t0 = std::chrono::steady_clock::now();
        const McEstimate a =
            value_monte_carlo(params, book, 0.0, 0.0, 40000, 7, 0.0, exec_policy::serial);
        const double ts = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        const McEstimate b =
            value_monte_carlo(params, book, 0.0, 0.0, 40000, 7, 0.0, exec_policy::parallel);
        const double tp = seconds_since(t0);
        report("value monte carlo", ts, tp,
               a.mean == b.mean && a.std_error == b.std_error);
    }

    {
        std::mt19937_64 rng(11);
        std::vector<StrikeCount> rows;
        std::uniform_real_distribution<double> unif(50.0, 180.0);
        for (int i = 0; i < 400; ++i)
            rows.push_back({unif(rng), 1.0 + static_cast<double>(rng() % 1000)});
        const DemandDistribution dist = build_empirical_distribution(rows);
        auto t0 = std::chrono::steady_clock::now();
        const StrikeSet a = lloyd_best_of(dist, 12, 4, {}, 200, exec_policy::serial);
        const double ts = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        const StrikeSet b = lloyd_best_of(dist, 12, 4, {}, 200, exec_policy::parallel);
        const double tp = seconds_since(t0);
        report("strike quantizer", ts, tp,
               a.strikes == b.strikes && a.regret == b.regret);
    }

    {
        GridConfig cfg;
        cfg.dt = 0.01;
        cfg.h_Q = 0.1;
        const IncentiveSurface surface = make_incentive_surface(params, book, cfg);
        SimConfig sim;
        sim.n_paths = 200;
        sim.seed = 3;
        auto t0 = std::chrono::steady_clock::now();
        const auto a =
            simulate_batch(params, book, surface, sim, exec_policy::serial);
        const double ts = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        const auto b =
            simulate_batch(params, book, surface, sim, exec_policy::parallel);
        const double tp = seconds_since(t0);
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i)
            same = a[i].y_T == b[i].y_T && a[i].pl_T == b[i].pl_T &&
                   a[i].n_events == b[i].n_events;
        report("market simulation", ts, tp, same);
    }
    return 0;
}
