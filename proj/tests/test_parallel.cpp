#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "optex/contract.hpp"
#include "optex/io.hpp"
#include "optex/quantizer.hpp"
#include "optex/simulate.hpp"

using namespace optex;

// Every parallel kernel must be bit-identical to its serial reference: work
// is independent per index and reductions run in a fixed order, so OpenMP
// scheduling cannot change results.

TEST_CASE("pde sweep: serial and parallel slices match bitwise") {
    ModelParams params;
    params.T = 5.0;
    params.q_bar = 5.0;
    const auto book = default_reference_book(params);
    GridConfig cfg;
    cfg.dt = 5e-3;
    cfg.h_Q = 0.1;
    cfg.max_stored_slices = 21;
    const std::vector<ValueProbe> probes{{0.0, 0.0}, {2.5, -3.2}};

    const SolveReport serial = solve_value_grid(params, book, cfg, probes,
                                                exec_policy::serial);
    const SolveReport parallel = solve_value_grid(params, book, cfg, probes,
                                                  exec_policy::parallel);
    CHECK(serial.grid.values == parallel.grid.values);
    CHECK(serial.grid.times == parallel.grid.times);
    CHECK(serial.grid.nodes == parallel.grid.nodes);
    CHECK(serial.probe_values == parallel.probe_values);
}

TEST_CASE("value monte carlo: fixed-order reduction matches bitwise") {
    ModelParams params;
    params.T = 5.0;
    params.q_bar = 5.0;
    const auto book = default_reference_book(params);
    const McEstimate serial =
        value_monte_carlo(params, book, 1.0, 2.0, 5000, 17, 0.0, exec_policy::serial);
    const McEstimate parallel =
        value_monte_carlo(params, book, 1.0, 2.0, 5000, 17, 0.0, exec_policy::parallel);
    CHECK(serial.mean == parallel.mean);
    CHECK(serial.std_error == parallel.std_error);
    CHECK(serial.n_paths == parallel.n_paths);
}

TEST_CASE("strike quantizer: per-seed streams match bitwise") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unif(40.0, 190.0);
    std::vector<StrikeCount> rows;
    for (int i = 0; i < 120; ++i)
        rows.push_back({unif(rng), 1.0 + static_cast<double>(rng() % 500)});
    const DemandDistribution dist = build_empirical_distribution(rows);

    for (double p : {2.0, 5.0}) {
        const StrikeSet serial =
            lloyd_best_of(dist, 7, p, {}, 40, exec_policy::serial);
        const StrikeSet parallel =
            lloyd_best_of(dist, 7, p, {}, 40, exec_policy::parallel);
        CHECK(serial.strikes == parallel.strikes);
        CHECK(serial.regret == parallel.regret);
        CHECK(serial.iterations == parallel.iterations);
        CHECK(serial.converged == parallel.converged);
    }
}

TEST_CASE("market simulation: per-path streams match bitwise") {
    ModelParams params;
    params.T = 10.0;
    params.q_bar = 3.0;
    const auto book = default_reference_book(params);
    GridConfig cfg;
    cfg.dt = 0.01;
    cfg.h_Q = 0.25;
    const IncentiveSurface surface = make_incentive_surface(params, book, cfg);
    SimConfig sim;
    sim.n_paths = 64;
    sim.seed = 4;
    sim.micro_dt = 0.05;

    const auto serial = simulate_batch(params, book, surface, sim, exec_policy::serial);
    const auto parallel =
        simulate_batch(params, book, surface, sim, exec_policy::parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].y_T == parallel[i].y_T);
        CHECK(serial[i].pl_T == parallel[i].pl_T);
        CHECK(serial[i].flow_value == parallel[i].flow_value);
        CHECK(serial[i].penalty == parallel[i].penalty);
        CHECK(serial[i].max_abs_agg == parallel[i].max_abs_agg);
        CHECK(serial[i].n_events == parallel[i].n_events);
        CHECK(serial[i].counts == parallel[i].counts);
    }

    const UtilityEstimate us = estimate_mm_utility(serial, params);
    const UtilityEstimate up = estimate_mm_utility(parallel, params);
    CHECK(us.mean == up.mean);
    CHECK(us.std_error == up.std_error);
}
