#pragma once

// Strike-grid selection by p-power quantization of an empirical demand
// distribution on moneyness. The grid is chosen to minimize the average
// p-power distance between traded strikes and the nearest listed strike;
// the minimizer is searched with Lloyd-style fixed-point iteration from
// random starts, and can be cross-checked against an exhaustive oracle on
// small inputs.

#include <cstdint>
#include <vector>

#include "optex/common.hpp"

namespace optex {

// Discrete demand distribution on [0, k_bar]: strictly increasing atoms
// (strike moneyness, in percent of spot) with probabilities summing to 1.
struct DemandDistribution {
    std::vector<double> atoms;
    std::vector<double> probs;
    double k_bar = 0.0;

    void validate() const;
};

// One row of a trade report: (strike, count) pairs, already bucketed by
// maturity elsewhere.
struct StrikeCount {
    double strike = 0.0;
    double count = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// A candidate or final strike grid together with its quantization diagnostics.
struct StrikeSet {
    std::vector<double> strikes;        // non-decreasing
    std::vector<Interval> cells;        // partition of [0, k_bar]
    double regret = 0.0;                // average p-power distance
    double p = 2.0;
    int iterations = 0;
    bool converged = false;
    bool support_smaller_than_n = false;  // n exceeded distinct atoms; duplicates possible
};

struct LloydOptions {
    double epsilon = 1e-8;   // L1 movement threshold for convergence
    int max_iter = 10000;
    std::uint64_t seed = 1;  // stream id for the random initialization
};

// Builds the distribution from raw (strike, count) rows: deduplicates,
// sorts, drops zero-count strikes and normalizes counts to probabilities.
// If spot > 0, strikes are first converted to percent moneyness
// (100 * strike / spot). k_bar = 0 selects max(200, largest atom).
DemandDistribution build_empirical_distribution(const std::vector<StrikeCount>& rows,
                                                double k_bar = 0.0, double spot = 0.0);

// Smallest atom whose cumulative probability reaches q (0 <= q <= 1).
double weighted_percentile(const DemandDistribution& dist, double q);

// Nearest-strike cells: interior boundaries at strike midpoints, outer cells
// clipped to [0, k_bar]. Strikes must be strictly increasing inside [0, k_bar].
std::vector<Interval> voronoi_cells(const std::vector<double>& strikes, double k_bar);

// Average p-power distance to the nearest strike, p >= 2.
double average_regret(const DemandDistribution& dist, const std::vector<double>& strikes,
                      double p);

// One Lloyd update: assign atoms to the nearest strike (ties to the lower
// index), replace each strike by its cell's exact p-power centroid — the
// conditional mean for p = 2, otherwise the unique root of the cell's
// strictly increasing regret derivative (which is exactly the fixed-point
// ratio identity K = E[K |K-K_i|^{p-2}] / E[|K-K_i|^{p-2}] on the cell) —
// and re-sort. A cell with zero mass is reseeded to the highest-regret atom
// not currently a strike; if no such atom exists the strike stays in place.
std::vector<double> lloyd_step(const DemandDistribution& dist,
                               const std::vector<double>& strikes, double p);

// Full Lloyd run from a random D^p-weighted initialization (first strike an
// atom drawn by probability, subsequent strikes drawn proportionally to their
// regret contribution), iterating until the L1 strike movement drops below
// epsilon or max_iter is hit.
StrikeSet lloyd_run(const DemandDistribution& dist, int n, double p,
                    const LloydOptions& opts = {});

// Best-of-n_seeds Lloyd: runs seeds base_seed..base_seed+n_seeds-1 and keeps
// the lowest regret (ties to the lowest seed). Seeds are independent streams,
// so the result is identical under either execution policy.
StrikeSet lloyd_best_of(const DemandDistribution& dist, int n, double p,
                        const LloydOptions& opts = {}, int n_seeds = 20,
                        exec_policy policy = exec_policy::parallel);

// Exhaustive oracle: the regret-minimizing n-subset of candidate_grid, ties
// broken by lexicographic order of the strike tuple. Intended for small inputs.
StrikeSet brute_force_quantizer(const DemandDistribution& dist, int n, double p,
                                const std::vector<double>& candidate_grid);

// Candidate grid that provably contains the p = 2 optimum: the atoms plus the
// conditional means of every contiguous atom range.
std::vector<double> contiguous_mean_grid(const DemandDistribution& dist);

}  // namespace optex
