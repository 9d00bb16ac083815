#include "optex/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace optex {

void OptionSpec::validate() const {
    if (!(strike > 0.0)) throw validation_error("option strike must be positive");
    if (!(maturity > 0.0)) throw validation_error("option maturity must be positive");
    if (!(delta > 0.0) || delta > 1.0)
        throw validation_error("option delta must lie in (0, 1]");
    if (fee < 0.0) throw validation_error("option fee must be non-negative");
    if (weight < 0.0) throw validation_error("option weight must be non-negative");
    if (spread_threshold < 0.0)
        throw validation_error("option spread threshold must be non-negative");
}

void ModelParams::validate() const {
    if (A < 0.0) throw validation_error("A must be non-negative");
    if (!(C > 0.0)) throw validation_error("C must be positive");
    if (!(sigma > 0.0)) throw validation_error("sigma must be positive");
    if (!(gamma > 0.0)) throw validation_error("gamma must be positive");
    if (!(eta > 0.0)) throw validation_error("eta must be positive");
    if (omega < 0.0 || omega >= 1.0) throw validation_error("omega must lie in [0, 1)");
    if (!(q_bar > 0.0)) throw validation_error("q_bar must be positive");
    if (!(T > 0.0)) throw validation_error("T must be positive");
    if (!(delta_max > 0.0)) throw validation_error("delta_max must be positive");
    if (!(R < 0.0)) throw validation_error("R must be negative");
}

double ModelParams::spread_offset() const {
    return std::log1p(sigma * gamma / C) / gamma;
}

double bachelier_delta(double S, double strike, double tau, double sigma) {
    if (!(tau > 0.0)) throw validation_error("bachelier_delta: maturity must be positive");
    if (!(sigma > 0.0)) throw validation_error("bachelier_delta: sigma must be positive");
    return normal_cdf((S - strike) / (sigma * std::sqrt(tau)));
}

double arrival_intensity(const ModelParams& params, const OptionSpec& spec, Side side,
                         double delta_q, double agg_inventory) {
    if (side_sign(side) * agg_inventory <= -params.q_bar) return 0.0;
    return params.A *
           std::exp(-(params.C / params.sigma) * (delta_q + spec.fee));
}

double mm_optimal_spread(double z, const ModelParams& params) {
    return std::clamp(-z + params.spread_offset(), -params.delta_max, params.delta_max);
}

HamiltonianResult hamiltonian(const IncentiveVector& z, double agg_inventory,
                              const ModelParams& params,
                              const std::vector<OptionSpec>& specs) {
    params.validate();
    if (z.size() != specs.size())
        throw validation_error("hamiltonian: incentive vector and specs size mismatch");

    HamiltonianResult result;
    result.spreads.resize(z.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        for (Side side : {Side::ask, Side::bid}) {
            const auto i = static_cast<std::size_t>(side);
            const double zi = z[k][i];
            const double quote = mm_optimal_spread(zi, params);
            result.spreads[k][i] = quote;
            if (side_sign(side) * agg_inventory <= -params.q_bar) continue;
            const double lambda =
                arrival_intensity(params, specs[k], side, quote, agg_inventory);
            result.value +=
                -std::expm1(-params.gamma * (zi + quote)) / params.gamma * lambda;
        }
    }
    return result;
}

}  // namespace optex
