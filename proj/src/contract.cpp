#include "optex/contract.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace optex {

namespace {

void validate_inputs(const ModelParams& params, const std::vector<OptionSpec>& specs) {
    params.validate();
    if (specs.empty()) throw validation_error("no options listed");
    for (const auto& s : specs) s.validate();
}

double max_delta(const std::vector<OptionSpec>& specs) {
    double m = 0.0;
    for (const auto& s : specs) m = std::max(m, s.delta);
    return m;
}

// Precomputed linear-interpolation stencil for one (option, side): shifted
// evaluation at node j reads i0 = j + index_offset with weights (w_lo, w_hi).
// The offset is j-independent because the grid is uniform.
struct ShiftStencil {
    long index_offset = 0;
    double w_lo = 1.0;
    double w_hi = 0.0;
};

ShiftStencil make_stencil(double delta, double h, Side side) {
    const double ratio = delta / h;
    const double base = std::floor(ratio);
    const double frac = ratio - base;
    ShiftStencil s;
    if (side == Side::ask) {  // shift to Q - delta
        if (frac > 0.0) {
            s.index_offset = -static_cast<long>(base) - 1;
            s.w_hi = 1.0 - frac;
        } else {
            s.index_offset = -static_cast<long>(base);
            s.w_hi = 0.0;
        }
    } else {  // shift to Q + delta
        s.index_offset = static_cast<long>(base);
        s.w_hi = frac;
    }
    s.w_lo = 1.0 - s.w_hi;
    return s;
}

}  // namespace

double DerivedConstants::c_hat_total() const {
    double total = 0.0;
    for (double c : c_hat) total += c;
    return total;
}

DerivedConstants derived_constants(const ModelParams& params,
                                   const std::vector<OptionSpec>& specs) {
    validate_inputs(params, specs);
    const double ratio = params.C / params.sigma;
    const double r = params.sigma * params.gamma / params.C;
    const double one_minus_omega = 1.0 - params.omega;

    DerivedConstants k;
    k.b = ratio;
    k.a = params.eta * one_minus_omega + ratio;
    k.x2 = 1.0 + params.eta * (1.0 - 1.0 / (1.0 + r)) / params.gamma;
    k.kappa = (params.C * params.gamma * params.eta / (params.gamma + params.eta)) *
              params.sigma / (2.0 * one_minus_omega);
    k.exponent = params.sigma * params.eta * one_minus_omega / params.C;

    const double ab = k.a - k.b;  // = eta*(1-omega) > 0
    const double ba = k.b / k.a;
    const double shape = std::pow(ba, k.b / ab) - std::pow(ba, k.a / ab);
    const double offset = params.spread_offset();

    for (const auto& spec : specs) {
        const double x1 = std::exp(
            -params.eta * (spec.weight + params.omega * (spec.spread_threshold - offset)));
        const double big_o = std::pow(1.0 + r, -params.C / (params.gamma * params.sigma)) *
                             std::exp(-ratio * spec.fee);
        // The jump coefficient inherits the order-flow scale A: with A = 0
        // there are no arrivals and the source must vanish.
        const double c_tilde =
            params.A * k.x2 * std::pow(k.x2 / x1, k.a / ab) * big_o * shape;
        const double c_hat = c_tilde * params.C / (params.sigma * params.eta * one_minus_omega);
        k.x1.push_back(x1);
        k.big_o.push_back(big_o);
        k.c_tilde.push_back(c_tilde);
        k.c_hat.push_back(c_hat);
    }
    return k;
}

double ValueGrid::value_at(double t, double Q) const {
    const double eps = 1e-9;
    if (t < times.front() - eps || t > times.back() + eps)
        throw validation_error("value_at: time outside grid");
    if (Q < nodes.front() - eps || Q > nodes.back() + eps)
        throw numeric_error("value_at: inventory outside padded domain");
    t = std::clamp(t, times.front(), times.back());
    Q = std::clamp(Q, nodes.front(), nodes.back());

    const auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times.begin());
    hi = std::min(std::max<std::size_t>(hi, 1), times.size() - 1);
    const std::size_t lo = hi - 1;
    const double span = times[hi] - times[lo];
    const double wt = span > 0.0 ? (t - times[lo]) / span : 0.0;

    const double u = (Q - nodes.front()) / h_Q;
    std::size_t j0 = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))),
                              nodes.size() - 2);
    const double wq = std::clamp(u - static_cast<double>(j0), 0.0, 1.0);

    const double v_lo = (1.0 - wq) * value(lo, j0) + wq * value(lo, j0 + 1);
    const double v_hi = (1.0 - wq) * value(hi, j0) + wq * value(hi, j0 + 1);
    return (1.0 - wt) * v_lo + wt * v_hi;
}

SolveReport solve_value_grid(const ModelParams& params,
                             const std::vector<OptionSpec>& specs, const GridConfig& cfg,
                             const std::vector<ValueProbe>& probes, exec_policy policy) {
    validate_inputs(params, specs);
    if (!(cfg.dt > 0.0)) throw validation_error("dt must be positive");
    if (!(cfg.h_Q > 0.0)) throw validation_error("h_Q must be positive");
    if (cfg.max_stored_slices < 2)
        throw validation_error("need at least two stored slices");
    if (!(cfg.decay_shift >= 0.0) || !std::isfinite(cfg.decay_shift))
        throw validation_error("decay shift must be finite and non-negative");

    const DerivedConstants consts = derived_constants(params, specs);
    const double q_dom = params.q_bar + max_delta(specs);

    // Positivity/stability bound for the explicit scheme.
    const double bound =
        0.5 / (consts.kappa * q_dom * q_dom + cfg.decay_shift +
               2.0 * consts.c_hat_total());
    double dt = cfg.dt;
    if (dt > bound) {
        if (!cfg.clamp_dt)
            throw validation_error("dt " + std::to_string(dt) +
                                   " exceeds the stability bound " +
                                   std::to_string(bound));
        dt = bound;
    }

    // Step count: a multiple of 2 * stride so that t = 0, T/2 and T all land
    // exactly on stored slices.
    long steps = static_cast<long>(std::ceil(params.T / dt));
    const long stride =
        std::max(1L, static_cast<long>(std::ceil(
                         static_cast<double>(steps) / (cfg.max_stored_slices - 1))));
    steps = 2 * stride * ((steps + 2 * stride - 1) / (2 * stride));
    dt = params.T / static_cast<double>(steps);

    // Symmetric inventory grid with an even node-interval count (0 included).
    const long half_intervals =
        std::max(1L, static_cast<long>(std::ceil(q_dom / cfg.h_Q)));
    const long J = 2 * half_intervals;
    const double h = 2.0 * q_dom / static_cast<double>(J);

    ValueGrid grid;
    grid.q_dom = q_dom;
    grid.h_Q = h;
    grid.dt = dt;
    grid.time_steps = static_cast<int>(steps);
    grid.stability_bound = bound;
    grid.decay_shift = cfg.decay_shift;
    grid.nodes.resize(static_cast<std::size_t>(J) + 1);
    for (long j = 0; j <= J; ++j)
        grid.nodes[static_cast<std::size_t>(j)] =
            h * static_cast<double>(j - J / 2);

    const std::size_t n_nodes = grid.nodes.size();
    const std::size_t n_slices = static_cast<std::size_t>(steps / stride) + 1;
    grid.times.resize(n_slices);
    for (std::size_t s = 0; s < n_slices; ++s)
        grid.times[s] = dt * static_cast<double>(stride) * static_cast<double>(s);
    grid.times.back() = params.T;
    grid.values.assign(n_slices * n_nodes, 0.0);

    // Per-(option, side) stencils and active index ranges (strict indicator).
    struct SideTerm {
        double c_hat;
        ShiftStencil stencil;
        long j_min, j_max;  // inclusive active range
    };
    std::vector<SideTerm> terms;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        for (Side side : {Side::ask, Side::bid}) {
            SideTerm term;
            term.c_hat = consts.c_hat[k];
            term.stencil = make_stencil(specs[k].delta, h, side);
            term.j_min = 0;
            term.j_max = J;
            if (side == Side::ask) {
                while (term.j_min <= J &&
                       !(grid.nodes[static_cast<std::size_t>(term.j_min)] > -params.q_bar))
                    ++term.j_min;
            } else {
                while (term.j_max >= 0 &&
                       !(grid.nodes[static_cast<std::size_t>(term.j_max)] < params.q_bar))
                    --term.j_max;
            }
            terms.push_back(term);
        }
    }

    std::vector<double> decay(n_nodes);  // kappa * Q_j^2 plus the normalization
    for (std::size_t j = 0; j < n_nodes; ++j)
        decay[j] = consts.kappa * grid.nodes[j] * grid.nodes[j] + cfg.decay_shift;

    // Right-hand side of the backward evolution dU/d(T-t) = G(U).
    const long Jl = static_cast<long>(J);
    auto eval_rhs = [&](const std::vector<double>& u, std::vector<double>& out,
                        bool parallel) {
        auto node_rhs = [&](long j) {
            const std::size_t js = static_cast<std::size_t>(j);
            double src = 0.0;
            for (const auto& term : terms) {
                if (j < term.j_min || j > term.j_max) continue;
                long i0 = j + term.stencil.index_offset;
                i0 = std::clamp(i0, 0L, Jl - 1);
                src += term.c_hat * (term.stencil.w_lo * u[static_cast<std::size_t>(i0)] +
                                     term.stencil.w_hi * u[static_cast<std::size_t>(i0) + 1]);
            }
            out[js] = -decay[js] * u[js] + src;
        };
        if (parallel) {
#pragma omp parallel for schedule(static)
            for (long j = 0; j <= Jl; ++j) node_rhs(j);
        } else {
            for (long j = 0; j <= Jl; ++j) node_rhs(j);
        }
    };

    // Probe bookkeeping: snap each probe time to an integration step.
    SolveReport report;
    report.probe_values.assign(probes.size(), 0.0);
    std::vector<long> probe_step(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        if (std::abs(probes[p].Q) > q_dom)
            throw validation_error("probe inventory outside domain");
        if (probes[p].t < 0.0 || probes[p].t > params.T)
            throw validation_error("probe time outside [0, T]");
        probe_step[p] = std::lround(probes[p].t / dt);
    }
    auto capture = [&](long step_index, const std::vector<double>& u) {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            if (probe_step[p] != step_index) continue;
            const double pos = (probes[p].Q + q_dom) / h;
            std::size_t j0 = std::min(
                static_cast<std::size_t>(std::max(0.0, std::floor(pos))), n_nodes - 2);
            const double w = std::clamp(pos - static_cast<double>(j0), 0.0, 1.0);
            report.probe_values[p] = (1.0 - w) * u[j0] + w * u[j0 + 1];
        }
    };

    const bool parallel = policy == exec_policy::parallel;
    std::vector<double> u(n_nodes, 1.0), stage(n_nodes), g0(n_nodes), g1(n_nodes);

    // Terminal slice.
    std::copy(u.begin(), u.end(),
              grid.values.begin() + (n_slices - 1) * n_nodes);
    capture(steps, u);

    for (long m = steps - 1; m >= 0; --m) {
        eval_rhs(u, g0, parallel);
        for (std::size_t j = 0; j < n_nodes; ++j) stage[j] = u[j] + dt * g0[j];
        eval_rhs(stage, g1, parallel);
        for (std::size_t j = 0; j < n_nodes; ++j) {
            u[j] += 0.5 * dt * (g0[j] + g1[j]);
            if (!(u[j] > 0.0) || !std::isfinite(u[j]))
                throw numeric_error("scheme instability: non-positive value at t=" +
                                    std::to_string(dt * static_cast<double>(m)));
        }
        if (m % stride == 0)
            std::copy(u.begin(), u.end(),
                      grid.values.begin() +
                          static_cast<std::size_t>(m / stride) * n_nodes);
        capture(m, u);
    }

    report.grid = std::move(grid);
    return report;
}

McEstimate value_monte_carlo(const ModelParams& params,
                             const std::vector<OptionSpec>& specs, double t, double q,
                             std::size_t n_paths, std::uint64_t seed,
                             double decay_shift, exec_policy policy) {
    validate_inputs(params, specs);
    if (n_paths < 2) throw validation_error("need at least two paths");
    if (t < 0.0 || t > params.T) throw validation_error("start time outside [0, T]");
    if (!(decay_shift >= 0.0) || !std::isfinite(decay_shift))
        throw validation_error("decay shift must be finite and non-negative");

    const DerivedConstants consts = derived_constants(params, specs);
    const std::size_t n_opts = specs.size();

    auto run_path = [&](std::uint64_t path_id) {
        auto rng = make_engine(seed, path_id);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::exponential_distribution<double> expo(1.0);

        double x = q;
        double clock = t;
        double integral = 0.0;
        std::vector<double> rates(2 * n_opts);
        while (true) {
            double total = 0.0;
            for (std::size_t k = 0; k < n_opts; ++k) {
                rates[2 * k] = (x > -params.q_bar) ? consts.c_hat[k] : 0.0;      // ask
                rates[2 * k + 1] = (x < params.q_bar) ? consts.c_hat[k] : 0.0;   // bid
                total += rates[2 * k] + rates[2 * k + 1];
            }
            const double drift = -consts.kappa * x * x - decay_shift + total;
            if (total <= 0.0) {
                integral += drift * (params.T - clock);
                break;
            }
            const double wait = expo(rng) / total;
            if (clock + wait >= params.T) {
                integral += drift * (params.T - clock);
                break;
            }
            integral += drift * wait;
            clock += wait;
            double pick = unif(rng) * total;
            std::size_t choice = 0;
            for (std::size_t i = 0; i < rates.size(); ++i) {
                pick -= rates[i];
                if (pick <= 0.0) {
                    choice = i;
                    break;
                }
            }
            const std::size_t k = choice / 2;
            x += (choice % 2 == 0) ? -specs[k].delta : specs[k].delta;
        }
        return std::exp(integral);
    };

    std::vector<double> values(n_paths);
    if (policy == exec_policy::parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n_paths); ++i)
            values[static_cast<std::size_t>(i)] =
                run_path(static_cast<std::uint64_t>(i));
    } else {
        for (std::size_t i = 0; i < n_paths; ++i) values[i] = run_path(i);
    }

    // Fixed-order reduction: identical result for any thread count.
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw numeric_error("Monte Carlo path overflow");
        sum += v;
    }
    const double mean = sum / static_cast<double>(n_paths);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);

    McEstimate est;
    est.mean = mean;
    est.std_error =
        std::sqrt(ss / (static_cast<double>(n_paths) * (static_cast<double>(n_paths) - 1.0)));
    est.n_paths = n_paths;
    return est;
}

double trade_incentive(const ValueGrid& grid, const DerivedConstants& consts,
                       const std::vector<OptionSpec>& specs, const ModelParams& params,
                       std::size_t option, Side side, double t, double Q) {
    if (option >= specs.size()) throw validation_error("option index out of range");
    if (!(side_sign(side) * Q > -params.q_bar))
        throw validation_error("trade incentive queried with the inventory gate closed");
    const double shifted = Q - specs[option].delta * side_sign(side);
    const double u_here = grid.value_at(t, Q);
    const double u_there = grid.value_at(t, shifted);  // throws on domain underrun
    const double ab = consts.a - consts.b;
    return (std::log(consts.b * consts.x2 / (consts.a * consts.x1[option])) -
            consts.exponent * (std::log(u_here) - std::log(u_there))) /
           ab;
}

double inventory_incentive(const ModelParams& params, double option_inventory) {
    return -params.gamma / (params.gamma + params.eta) * option_inventory;
}

double quoted_spread(const ValueGrid& grid, const DerivedConstants& consts,
                     const std::vector<OptionSpec>& specs, const ModelParams& params,
                     std::size_t option, Side side, double t, double Q) {
    return mm_optimal_spread(
        trade_incentive(grid, consts, specs, params, option, side, t, Q), params);
}

SpreadStats sweep_spread_stats(const ValueGrid& grid, const DerivedConstants& consts,
                               const std::vector<OptionSpec>& specs,
                               const ModelParams& params) {
    const double offset = params.spread_offset();
    const double ab = consts.a - consts.b;
    const long J = static_cast<long>(grid.nodes.size()) - 1;
    SpreadStats stats;
    stats.min_spread.assign(specs.size(),
                            {params.delta_max, params.delta_max});
    for (std::size_t s = 0; s < grid.times.size(); ++s) {
        const double* row = grid.values.data() + s * grid.nodes.size();
        for (std::size_t k = 0; k < specs.size(); ++k) {
            const double log_gain = std::log(consts.b * consts.x2 / (consts.a * consts.x1[k]));
            for (Side side : {Side::ask, Side::bid}) {
                const ShiftStencil st = make_stencil(specs[k].delta, grid.h_Q, side);
                double& min_quote = stats.min_spread[k][static_cast<std::size_t>(side)];
                for (long j = 0; j <= J; ++j) {
                    if (!(side_sign(side) * grid.nodes[static_cast<std::size_t>(j)] >
                          -params.q_bar))
                        continue;
                    const long i0 = std::clamp(j + st.index_offset, 0L, J - 1);
                    const double shifted =
                        st.w_lo * row[i0] + st.w_hi * row[i0 + 1];
                    const double z =
                        (log_gain - consts.exponent *
                                        (std::log(row[j]) - std::log(shifted))) /
                        ab;
                    stats.max_abs_response = std::max(stats.max_abs_response,
                                                      std::abs(-z + offset));
                    min_quote = std::min(min_quote, mm_optimal_spread(z, params));
                }
            }
        }
    }
    return stats;
}

double audit_spread_bound(const ValueGrid& grid, const DerivedConstants& consts,
                          const std::vector<OptionSpec>& specs,
                          const ModelParams& params) {
    return sweep_spread_stats(grid, consts, specs, params).max_abs_response;
}

ContractSolution solve_contract(const ModelParams& params,
                                const std::vector<OptionSpec>& specs,
                                const GridConfig& cfg,
                                const std::vector<ValueProbe>& probes,
                                exec_policy policy) {
    ContractSolution sol;
    sol.consts = derived_constants(params, specs);
    SolveReport report = solve_value_grid(params, specs, cfg, probes, policy);
    sol.grid = std::move(report.grid);
    sol.probe_values = std::move(report.probe_values);
    sol.bound_audit_max = audit_spread_bound(sol.grid, sol.consts, specs, params);
    if (sol.bound_audit_max >= params.delta_max)
        throw numeric_error(
            "spread response " + std::to_string(sol.bound_audit_max) +
            " violates the admissible bound delta_max = " + std::to_string(params.delta_max));
    return sol;
}

std::vector<IncentiveRow> incentive_table(const ValueGrid& grid,
                                          const DerivedConstants& consts,
                                          const std::vector<OptionSpec>& specs,
                                          const ModelParams& params, double t) {
    std::vector<IncentiveRow> rows;
    rows.reserve(grid.nodes.size() * specs.size());
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
        const double Q = grid.nodes[j];
        for (std::size_t k = 0; k < specs.size(); ++k) {
            IncentiveRow row;
            row.Q = Q;
            row.option = k;
            for (Side side : {Side::ask, Side::bid}) {
                const auto i = static_cast<std::size_t>(side);
                const bool on = side_sign(side) * Q > -params.q_bar;
                // The shifted point must also stay inside the padded domain.
                const double shifted = Q - specs[k].delta * side_sign(side);
                row.valid[i] = on && std::abs(shifted) <= grid.q_dom;
                if (row.valid[i]) {
                    row.z[i] = trade_incentive(grid, consts, specs, params, k, side, t, Q);
                    row.spread[i] = mm_optimal_spread(row.z[i], params);
                }
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace optex
