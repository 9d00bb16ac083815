#pragma once

// Full market simulation under the solved contract: point-process order flow
// at the maker's induced spreads (exact thinning against per-side dominating
// intensities), an arithmetic underlying, and the contract accrual
//
//   dY = sum_i Z*_i dN_i + sum_k Z^C_k sigma delta_k dW
//        + (1/2 gamma sigma^2 G^2 - H(Z*, Q)) dt,   G = sum_k delta_k (Z^C_k + q_k),
//
// with Y_0 = -log(-R). The maker quotes its closed-form best response to the
// piecewise-frozen incentives (optionally perturbed), so the simulated maker
// utility -exp(-gamma (Y_T + PL_T)) has expectation -exp(-gamma Y_0) exactly;
// the exchange's realized objective is -exp(-eta (N_T - L_T - Y_T)).
//
// Incentives are frozen between refresh points (every trade candidate and a
// fixed micro step). All randomness is consumed in a micro-step-independent
// order — candidate waits and one pick/accept uniform from one stream, one
// Gaussian per inter-candidate segment from another — so runs with different
// micro steps stay coupled under a common seed.

#include <array>
#include <cstdint>
#include <vector>

#include "optex/contract.hpp"

namespace optex {

// A solved incentive surface: everything needed to evaluate Z*(t, Q) per
// (option, side), plus the audited spread statistics that the simulator's
// thinning bounds are built from.
struct IncentiveSurface {
    DerivedConstants consts;
    ValueGrid grid;
    SpreadStats stats;
    bool zero_trade_incentives = false;  // contract variant with Z* == 0
};

// Solve the contract and package it for simulation. With zero_trade_incentives
// the field is still solved (for the audit) but the per-trade incentive is
// replaced by zero, i.e. the maker is paid the inventory legs only.
IncentiveSurface make_incentive_surface(const ModelParams& params,
                                        const std::vector<OptionSpec>& specs,
                                        const GridConfig& cfg = {},
                                        bool zero_trade_incentives = false,
                                        exec_policy policy = exec_policy::parallel);

struct SimConfig {
    std::uint64_t seed = 1;
    std::size_t n_paths = 1;
    double micro_dt = 0.0;      // quote refresh step; 0 selects T / 10^4
    double spread_shift = 0.0;  // additive quote perturbation (maker suboptimality)
};

struct TradeEvent {
    double t = 0.0;
    std::size_t option = 0;
    Side side = Side::ask;
    double incentive = 0.0;  // frozen Z* paid on this trade
    double spread = 0.0;     // executed half-spread (including any shift)
    double option_inventory_after = 0.0;
    double agg_inventory_after = 0.0;
};

// One simulated path. Component sums decompose Y_T and PL_T so the accrual
// can be reconstructed independently from the event log and the sampled
// underlying path (boundary times are path_times; candidates included).
struct Trajectory {
    std::vector<TradeEvent> events;
    std::vector<std::array<std::size_t, 2>> counts;  // [option][ask, bid]
    std::vector<double> path_times;  // segment boundaries: 0, candidates, T
    std::vector<double> path_S;      // underlying sampled at path_times

    double y0 = 0.0;
    double y_T = 0.0;
    double pl_T = 0.0;
    double flow_value = 0.0;  // N_T = sum_k weight_k * trades_k
    double penalty = 0.0;     // L_T = sum omega (spread - threshold) per trade
    double max_abs_agg = 0.0;
    double micro_dt = 0.0;    // resolved refresh step actually used

    // Accrual components: y_T = y0 + trade_sum + noise_sum + drift_sum,
    // pl_T = pl_spread_sum + pl_inventory_sum.
    double trade_sum = 0.0;
    double noise_sum = 0.0;
    double drift_sum = 0.0;
    double drift_sum_simplified = 0.0;  // same integral via G = eta/(gamma+eta) * aggQ
    double pl_spread_sum = 0.0;
    double pl_inventory_sum = 0.0;
};

struct TrajectorySummary {
    double y_T = 0.0;
    double pl_T = 0.0;
    double flow_value = 0.0;
    double penalty = 0.0;
    double max_abs_agg = 0.0;
    std::size_t n_events = 0;
    std::vector<std::array<std::size_t, 2>> counts;
};

TrajectorySummary summarize(const Trajectory& t);

// Simulate one path. Deterministic given (config.seed, path_index); the batch
// runner reproduces exactly these paths for indices 0..n_paths-1.
Trajectory simulate_trajectory(const ModelParams& params,
                               const std::vector<OptionSpec>& specs,
                               const IncentiveSurface& surface, const SimConfig& config,
                               std::uint64_t path_index = 0);

std::vector<TrajectorySummary> simulate_batch(const ModelParams& params,
                                              const std::vector<OptionSpec>& specs,
                                              const IncentiveSurface& surface,
                                              const SimConfig& config,
                                              exec_policy policy = exec_policy::parallel);

struct UtilityEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

// Maker side: sample mean of -exp(-gamma (Y_T + PL_T)). Equals -exp(-gamma Y_0)
// in expectation when the maker's quotes are unperturbed.
UtilityEstimate estimate_mm_utility(const std::vector<TrajectorySummary>& summaries,
                                    const ModelParams& params);

// Exchange side: sample mean of -exp(-eta (N_T - L_T - Y_T)).
UtilityEstimate estimate_exchange_utility(const std::vector<TrajectorySummary>& summaries,
                                          const ModelParams& params);

}  // namespace optex
