#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "optex/market.hpp"

using namespace optex;

namespace {

// The reference parameter set used throughout: A=1.5, C=sigma=0.3, gamma=0.01,
// eta=1, T=100, q_bar=40.
ModelParams reference_params() { return ModelParams{}; }

OptionSpec option(double delta, double fee, double threshold, double weight = 0.0) {
    OptionSpec s;
    s.delta = delta;
    s.fee = fee;
    s.spread_threshold = threshold;
    s.weight = weight;
    return s;
}

}  // namespace

TEST_CASE("bachelier delta: ATM is one half, one-sigma is N(1)") {
    CHECK(bachelier_delta(100, 100, 1.0, 0.3) == doctest::Approx(0.5).epsilon(1e-15));
    // (S - k) / (sigma sqrt(tau)) = 1.
    CHECK(bachelier_delta(100, 99.7, 1.0, 0.3) ==
          doctest::Approx(0.8413447460685429).epsilon(1e-14));
    // Symmetry: delta(S, k) + delta(k, S) = 1.
    CHECK(bachelier_delta(100, 90, 0.5, 0.3) + bachelier_delta(90, 100, 0.5, 0.3) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(bachelier_delta(100, 100, 0.0, 0.3), validation_error);
    CHECK_THROWS_AS(bachelier_delta(100, 100, 1.0, -0.1), validation_error);
}

TEST_CASE("arrival intensity: frozen value and inventory gate") {
    auto params = reference_params();
    auto spec = option(0.5, 0.5, 2.0);
    // A exp(-(C/sigma)(delta+f)) = 1.5 e^{-1}.
    CHECK(arrival_intensity(params, spec, Side::ask, 0.5, 0.0) ==
          doctest::Approx(1.5 * std::exp(-1.0)).epsilon(1e-15));
    // The gate is strict: at Q = -q_bar the ask side is already off.
    CHECK(arrival_intensity(params, spec, Side::ask, 0.5, -params.q_bar) == 0.0);
    CHECK(arrival_intensity(params, spec, Side::bid, 0.5, params.q_bar) == 0.0);
    CHECK(arrival_intensity(params, spec, Side::ask, 0.5, -params.q_bar + 1e-9) > 0.0);
    // Negative half-spreads are admissible and raise the intensity.
    CHECK(arrival_intensity(params, spec, Side::bid, -1.0, 0.0) >
          arrival_intensity(params, spec, Side::bid, 0.0, 0.0));
}

TEST_CASE("arrival intensity strictly decreasing in quote and fee") {
    auto params = reference_params();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        auto spec = option(0.5, unif(rng), 2.0);
        const double d1 = -2.0 + 4.0 * unif(rng);
        const double d2 = d1 + 1e-3 + unif(rng);
        CHECK(arrival_intensity(params, spec, Side::ask, d2, 0.0) <
              arrival_intensity(params, spec, Side::ask, d1, 0.0));
        auto spec_higher_fee = spec;
        spec_higher_fee.fee += 0.25;
        CHECK(arrival_intensity(params, spec_higher_fee, Side::ask, d1, 0.0) <
              arrival_intensity(params, spec, Side::ask, d1, 0.0));
    }
}

TEST_CASE("optimal spread: frozen zero-incentive value and clamping") {
    auto params = reference_params();
    // -0 + log(1 + 0.01)/0.01 = 100 ln(1.01).
    CHECK(mm_optimal_spread(0.0, params) ==
          doctest::Approx(100.0 * std::log(1.01)).epsilon(1e-15));
    CHECK(mm_optimal_spread(100.0, params) == -params.delta_max);
    CHECK(mm_optimal_spread(-100.0, params) == params.delta_max);
    // Linear with slope -1 in the interior.
    CHECK(mm_optimal_spread(1.0, params) ==
          doctest::Approx(mm_optimal_spread(0.0, params) - 1.0).epsilon(1e-12));
}

TEST_CASE("hamiltonian: frozen single-option value at zero incentive") {
    auto params = reference_params();
    std::vector<OptionSpec> specs = {option(0.5, 0.5, 2.0)};
    IncentiveVector z = {{0.0, 0.0}};
    auto H = hamiltonian(z, 0.0, params, specs);

    const double r = params.sigma * params.gamma / params.C;  // = 0.01
    const double per_side = (1.0 / params.gamma) * (r / (1.0 + r)) * params.A *
                            std::exp(-(params.C / params.sigma) * specs[0].fee) *
                            std::pow(1.0 + r, -params.C / (params.sigma * params.gamma));
    CHECK(H.value == doctest::Approx(2.0 * per_side).epsilon(1e-12));
    CHECK(H.spreads[0][0] == doctest::Approx(100.0 * std::log(1.01)).epsilon(1e-15));
    CHECK(H.spreads[0][1] == H.spreads[0][0]);

    // At the inventory cap the ask side drops and the value halves.
    auto H_capped = hamiltonian(z, -params.q_bar, params, specs);
    CHECK(H_capped.value == doctest::Approx(per_side).epsilon(1e-12));
}

TEST_CASE("hamiltonian: clamped maximizer dominates an admissible spread grid") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        ModelParams params;
        params.A = 0.1 + 5.0 * unif(rng);
        params.C = 0.05 + 0.95 * unif(rng);
        params.sigma = 0.05 + 0.95 * unif(rng);
        params.gamma = 1e-3 + 0.5 * unif(rng);
        params.delta_max = 0.5 + 4.5 * unif(rng);
        std::vector<OptionSpec> specs = {option(0.5, unif(rng), 2.0)};
        const double z_val = -3.0 + 6.0 * unif(rng);
        IncentiveVector z = {{z_val, z_val}};
        auto H = hamiltonian(z, 0.0, params, specs);

        auto h_at = [&](double quote) {
            double value = 0.0;
            for (Side side : {Side::ask, Side::bid})
                value += -std::expm1(-params.gamma * (z_val + quote)) / params.gamma *
                         arrival_intensity(params, specs[0], side, quote, 0.0);
            return value;
        };
        // Coarse sweep plus the exact argmax; the acceptance suite runs the
        // fine 1e-3 grid.
        for (int g = 0; g <= 400; ++g) {
            const double quote = -params.delta_max + 2.0 * params.delta_max * g / 400.0;
            CHECK(h_at(quote) <= H.value + 1e-9);
        }
        CHECK(h_at(H.spreads[0][0]) == doctest::Approx(H.value).epsilon(1e-12));
    }
}

TEST_CASE("parameter validation") {
    ModelParams params;
    params.A = 0.0;  // degenerate no-flow market is allowed
    CHECK_NOTHROW(params.validate());
    params.omega = 1.0;
    CHECK_THROWS_AS(params.validate(), validation_error);
    params.omega = 0.0;
    params.R = 0.0;
    CHECK_THROWS_AS(params.validate(), validation_error);

    OptionSpec spec;
    spec.delta = 0.0;
    CHECK_THROWS_AS(spec.validate(), validation_error);
}
