#pragma once

// Exchange-side contract solver. The exchange's indirect utility reduces to a
// single scalar field Utilde(t, Q) on the aggregate-inventory line, obeying a
// linear backward PDE with per-option shift couplings:
//
//   0 = d/dt Utilde - kappa * Q^2 * Utilde
//       + sum_{option, side} C_hat * Utilde(t, Q - delta * sign) * 1{active}
//
// with terminal condition Utilde(T, .) = 1. The optimal per-trade incentives
// and the quoted spreads are read off the solved field. A jump-process Monte
// Carlo representation of the same field serves as an independent oracle.

#include <array>
#include <cstdint>
#include <vector>

#include "optex/common.hpp"
#include "optex/market.hpp"

namespace optex {

// Constants derived from (params, specs) that parameterize the reduced PDE
// and the incentive formulas.
struct DerivedConstants {
    double a = 0.0;         // eta*(1-omega) + C/sigma
    double b = 0.0;         // C/sigma
    double x2 = 0.0;        // 1 + eta*(1 - (1+sigma*gamma/C)^{-1})/gamma
    double kappa = 0.0;     // inventory risk decay rate
    double exponent = 0.0;  // s = sigma*eta*(1-omega)/C;  U = -Utilde^{-s}
    std::vector<double> x1;      // per option
    std::vector<double> big_o;   // per option: (1+sigma*gamma/C)^{-C/(gamma sigma)} e^{-(C/sigma) fee}
    std::vector<double> c_tilde; // per option jump coefficient (scaled by A)
    std::vector<double> c_hat;   // per option PDE source coefficient

    double c_hat_total() const;
};

DerivedConstants derived_constants(const ModelParams& params,
                                   const std::vector<OptionSpec>& specs);

struct GridConfig {
    double dt = 2e-3;       // requested time step (clamped to the stability bound)
    double h_Q = 0.025;     // requested inventory step (refined to fit the domain)
    int max_stored_slices = 1001;  // time slices kept for interpolation/export
    bool clamp_dt = true;   // false: error out when dt exceeds the stability bound
    // Uniform extra decay: the sweep stores w(t,Q) = U(t,Q) * exp(-shift*(T-t))
    // instead of U itself. Incentives and spreads depend only on log-differences
    // of the field across Q at fixed t, which the rescaling leaves unchanged, so
    // a positive shift extends the solvable range when U overflows double.
    double decay_shift = 0.0;
};

// The solved field on [0, T] x [-q_dom, q_dom], q_dom = q_bar + max delta.
// Time slices are stored on a uniform subgrid of the integration steps;
// values are strictly positive. With a nonzero decay shift the stored field
// is the exponentially normalized w, not the raw U.
struct ValueGrid {
    std::vector<double> times;   // stored slice times, ascending, includes 0 and T
    std::vector<double> nodes;   // inventory nodes, symmetric around 0
    std::vector<double> values;  // times.size() x nodes.size(), row-major
    double q_dom = 0.0;
    double h_Q = 0.0;
    double dt = 0.0;             // integration step actually used
    int time_steps = 0;          // integration step count
    double stability_bound = 0.0;
    double decay_shift = 0.0;    // normalization actually applied

    double value(std::size_t slice, std::size_t node) const {
        return values[slice * nodes.size() + node];
    }
    // Bilinear interpolation; t and Q must lie inside the grid.
    double value_at(double t, double Q) const;
};

struct ValueProbe {
    double t = 0.0;
    double Q = 0.0;
};

struct SolveReport {
    ValueGrid grid;
    std::vector<double> probe_values;  // exact slice values at the probes
};

// Explicit two-stage (Heun) backward integration of the reduced PDE.
// Shifted evaluations interpolate linearly between nodes; nodes with a side's
// inventory indicator off drop that side's source term. Probe times snap to
// the nearest integration slice.
SolveReport solve_value_grid(const ModelParams& params,
                             const std::vector<OptionSpec>& specs,
                             const GridConfig& cfg = {},
                             const std::vector<ValueProbe>& probes = {},
                             exec_policy policy = exec_policy::parallel);

// Jump-process Monte Carlo representation of the same field: the expectation
// of exp of the integrated source along the exactly simulated inventory jump
// process. Independent oracle for solve_value_grid; a nonzero decay_shift
// estimates the same normalized field w the sweep stores under that shift.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

McEstimate value_monte_carlo(const ModelParams& params,
                             const std::vector<OptionSpec>& specs, double t, double q,
                             std::size_t n_paths, std::uint64_t seed,
                             double decay_shift = 0.0,
                             exec_policy policy = exec_policy::parallel);

// Optimal per-trade incentive for one (option, side) at (t, Q). Requires the
// side's inventory indicator on at Q; the shifted evaluation point must stay
// inside the padded domain.
double trade_incentive(const ValueGrid& grid, const DerivedConstants& consts,
                       const std::vector<OptionSpec>& specs, const ModelParams& params,
                       std::size_t option, Side side, double t, double Q);

// Optimal per-option inventory incentive rate: -gamma/(gamma+eta) * q.
double inventory_incentive(const ModelParams& params, double option_inventory);

// Maker's quoted half-spread under the optimal incentive.
double quoted_spread(const ValueGrid& grid, const DerivedConstants& consts,
                     const std::vector<OptionSpec>& specs, const ModelParams& params,
                     std::size_t option, Side side, double t, double Q);

// Spread-response statistics over every stored slice, node, option and active
// side: the largest |response before clamping| (admissibility audit) and the
// per-(option, side) smallest clamped quote (dominating-intensity bounds for
// the trajectory simulator's thinning scheme).
struct SpreadStats {
    double max_abs_response = 0.0;
    std::vector<std::array<double, 2>> min_spread;  // [option][ask, bid]
};

SpreadStats sweep_spread_stats(const ValueGrid& grid, const DerivedConstants& consts,
                               const std::vector<OptionSpec>& specs,
                               const ModelParams& params);

// Largest |spread response before clamping|: must stay below delta_max for
// the closed-form maker response (and hence the whole contract construction)
// to be admissible.
double audit_spread_bound(const ValueGrid& grid, const DerivedConstants& consts,
                          const std::vector<OptionSpec>& specs,
                          const ModelParams& params);

// Solve + audit. Throws numeric_error if the audited bound reaches delta_max.
struct ContractSolution {
    DerivedConstants consts;
    ValueGrid grid;
    std::vector<double> probe_values;
    double bound_audit_max = 0.0;
};

ContractSolution solve_contract(const ModelParams& params,
                                const std::vector<OptionSpec>& specs,
                                const GridConfig& cfg = {},
                                const std::vector<ValueProbe>& probes = {},
                                exec_policy policy = exec_policy::parallel);

// Materialized incentive/spread table at a fixed time, for exports and the
// comparative-statics checks. Sides with the indicator off are flagged invalid.
struct IncentiveRow {
    double Q = 0.0;
    std::size_t option = 0;
    std::array<double, 2> z{};        // [ask, bid]
    std::array<double, 2> spread{};   // [ask, bid]
    std::array<bool, 2> valid{};      // indicator state per side
};

std::vector<IncentiveRow> incentive_table(const ValueGrid& grid,
                                          const DerivedConstants& consts,
                                          const std::vector<OptionSpec>& specs,
                                          const ModelParams& params, double t);

}  // namespace optex
