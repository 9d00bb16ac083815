#pragma once

// Market primitives: the listed option set, global model parameters, order
// arrival intensities, the market maker's closed-form optimal spread response
// to a per-trade incentive, and the market maker's Hamiltonian.

#include <array>
#include <vector>

#include "optex/common.hpp"

namespace optex {

enum class Side : int { ask = 0, bid = 1 };

// Inventory sign convention: an executed ask decreases the maker's inventory,
// an executed bid increases it.
inline constexpr double side_sign(Side s) { return s == Side::ask ? 1.0 : -1.0; }

inline constexpr const char* side_name(Side s) { return s == Side::ask ? "ask" : "bid"; }

// One listed option: contract terms plus the per-option constants entering
// the exchange's objective.
struct OptionSpec {
    double strike = 100.0;
    double maturity = 1.0;          // same time units as ModelParams::T
    double delta = 0.5;             // hedge ratio in (0, 1]
    double fee = 0.0;               // per-trade exchange fee passed to takers
    double weight = 0.0;            // exchange's per-trade revenue weight
    double spread_threshold = 0.0;  // spread level above which the exchange is penalized

    void validate() const;
};

struct ModelParams {
    double A = 1.5;          // order flow scale (trades per unit time at zero cost)
    double C = 0.3;          // order flow decay per unit of all-in cost
    double sigma = 0.3;      // underlying volatility (arithmetic)
    double gamma = 0.01;     // market maker risk aversion
    double eta = 1.0;        // exchange risk aversion
    double omega = 0.0;      // weight of the wide-spread penalty, in [0, 1)
    double q_bar = 40.0;     // inventory risk cap (aggregate units)
    double T = 100.0;        // horizon
    double delta_max = 50.0; // admissible quote bound
    double R = -1.0;         // market maker reservation utility (negative)
    double S0 = 100.0;       // initial underlying level

    void validate() const;

    // gamma^{-1} * log(1 + sigma*gamma/C): the constant offset between the
    // maker's optimal half-spread and the negated incentive.
    double spread_offset() const;
};

// Call delta under an arithmetic (normal) underlying model.
double bachelier_delta(double S, double strike, double tau, double sigma);

// Arrival intensity for one option side given the quoted half-spread delta_q
// and the maker's aggregate inventory before the trade:
//   A * exp(-(C/sigma) * (delta_q + fee)) while side_sign * Q > -q_bar, else 0.
double arrival_intensity(const ModelParams& params, const OptionSpec& spec, Side side,
                         double delta_q, double agg_inventory);

// The maker's optimal half-spread response to a per-trade incentive z:
//   clamp(-z + spread_offset, [-delta_max, delta_max]).
double mm_optimal_spread(double z, const ModelParams& params);

// Per-trade incentives for every (option, side): [option][ask, bid].
using IncentiveVector = std::vector<std::array<double, 2>>;

struct HamiltonianResult {
    double value = 0.0;
    IncentiveVector spreads;  // the maximizing half-spreads, same shape as z
};

// Maker's Hamiltonian: sum over active (option, side) of
//   gamma^{-1} * (1 - exp(-gamma*(z + delta))) * intensity(delta),
// evaluated at the clamped maximizer delta = mm_optimal_spread(z). Sides with
// the inventory indicator off at agg_inventory are dropped.
HamiltonianResult hamiltonian(const IncentiveVector& z, double agg_inventory,
                              const ModelParams& params,
                              const std::vector<OptionSpec>& specs);

}  // namespace optex
