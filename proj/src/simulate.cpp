#include "optex/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace optex {

namespace {

double max_delta(const std::vector<OptionSpec>& specs) {
    double m = 0.0;
    for (const auto& s : specs) m = std::max(m, s.delta);
    return m;
}

// Evaluates the frozen quote state at one refresh time: incentives, quotes,
// intensities and the contract's Hamiltonian coupon. Stored-slice times are
// uniform, so slice lookup is arithmetic (no search).
class QuoteEngine {
  public:
    QuoteEngine(const ModelParams& params, const std::vector<OptionSpec>& specs,
                const IncentiveSurface& surface, double spread_shift)
        : params_(params),
          specs_(specs),
          surface_(surface),
          grid_(surface.grid),
          shift_(spread_shift),
          inv_ab_(1.0 / (surface.consts.a - surface.consts.b)),
          slice_dt_(grid_.times.size() > 1 ? grid_.times[1] - grid_.times[0] : 1.0) {
        for (std::size_t k = 0; k < specs.size(); ++k)
            log_gain_.push_back(std::log(surface.consts.b * surface.consts.x2 /
                                         (surface.consts.a * surface.consts.x1[k])));
        z.assign(specs.size(), {0.0, 0.0});
        quote.assign(specs.size(), {0.0, 0.0});
        lambda.assign(specs.size(), {0.0, 0.0});
    }

    // Frozen state after the last refresh.
    std::vector<std::array<double, 2>> z, quote, lambda;
    double hamiltonian_coupon = 0.0;
    double lambda_total = 0.0;

    void refresh(double t, double agg, const std::vector<std::array<double, 2>>& bound) {
        bind_time(t);
        const double log_here = std::log(field(agg));
        hamiltonian_coupon = 0.0;
        lambda_total = 0.0;
        for (std::size_t k = 0; k < specs_.size(); ++k) {
            for (Side side : {Side::ask, Side::bid}) {
                const auto i = static_cast<std::size_t>(side);
                if (!(side_sign(side) * agg > -params_.q_bar)) {
                    z[k][i] = 0.0;
                    quote[k][i] = 0.0;
                    lambda[k][i] = 0.0;
                    continue;
                }
                double zi = 0.0;
                if (!surface_.zero_trade_incentives) {
                    const double shifted = agg - specs_[k].delta * side_sign(side);
                    zi = (log_gain_[k] -
                          surface_.consts.exponent * (log_here - std::log(field(shifted)))) *
                         inv_ab_;
                }
                const double best = mm_optimal_spread(zi, params_);
                const double quoted = best + shift_;
                const double lam =
                    arrival_intensity(params_, specs_[k], side, quoted, agg);
                if (lam > bound[k][i])
                    throw numeric_error("arrival intensity exceeds its thinning bound");
                z[k][i] = zi;
                quote[k][i] = quoted;
                lambda[k][i] = lam;
                lambda_total += lam;
                // The contract's coupon always uses the maker's *optimal*
                // response: the contract is fixed even when quotes are shifted.
                hamiltonian_coupon +=
                    -std::expm1(-params_.gamma * (zi + best)) / params_.gamma *
                    arrival_intensity(params_, specs_[k], side, best, agg);
            }
        }
    }

  private:
    void bind_time(double t) {
        const auto n = grid_.times.size();
        std::size_t hi = static_cast<std::size_t>(t / slice_dt_) + 1;
        hi = std::min(std::max<std::size_t>(hi, 1), n - 1);
        lo_ = hi - 1;
        const double span = grid_.times[hi] - grid_.times[lo_];
        wt_ = std::clamp((t - grid_.times[lo_]) / span, 0.0, 1.0);
    }

    double field(double Q) const {
        const double u = (Q - grid_.nodes.front()) / grid_.h_Q;
        const std::size_t j0 = std::min(
            static_cast<std::size_t>(std::max(0.0, std::floor(u))), grid_.nodes.size() - 2);
        const double wq = std::clamp(u - static_cast<double>(j0), 0.0, 1.0);
        const double v_lo =
            (1.0 - wq) * grid_.value(lo_, j0) + wq * grid_.value(lo_, j0 + 1);
        const double v_hi =
            (1.0 - wq) * grid_.value(lo_ + 1, j0) + wq * grid_.value(lo_ + 1, j0 + 1);
        return (1.0 - wt_) * v_lo + wt_ * v_hi;
    }

    const ModelParams& params_;
    const std::vector<OptionSpec>& specs_;
    const IncentiveSurface& surface_;
    const ValueGrid& grid_;
    double shift_;
    double inv_ab_;
    double slice_dt_;
    std::vector<double> log_gain_;
    std::size_t lo_ = 0;
    double wt_ = 0.0;
};

UtilityEstimate reduce_utility(const std::vector<TrajectorySummary>& summaries,
                               const std::vector<double>& samples) {
    if (summaries.size() < 2)
        throw validation_error("need at least two trajectories to estimate a utility");
    double sum = 0.0;
    for (double v : samples) {
        if (!std::isfinite(v)) throw numeric_error("utility sample overflow");
        sum += v;
    }
    const double n = static_cast<double>(samples.size());
    UtilityEstimate est;
    est.mean = sum / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (n * (n - 1.0)));
    est.n_paths = samples.size();
    return est;
}

}  // namespace

IncentiveSurface make_incentive_surface(const ModelParams& params,
                                        const std::vector<OptionSpec>& specs,
                                        const GridConfig& cfg, bool zero_trade_incentives,
                                        exec_policy policy) {
    ContractSolution sol = solve_contract(params, specs, cfg, {}, policy);
    IncentiveSurface surface;
    surface.consts = std::move(sol.consts);
    surface.grid = std::move(sol.grid);
    surface.stats = sweep_spread_stats(surface.grid, surface.consts, specs, params);
    surface.zero_trade_incentives = zero_trade_incentives;
    return surface;
}

TrajectorySummary summarize(const Trajectory& t) {
    TrajectorySummary s;
    s.y_T = t.y_T;
    s.pl_T = t.pl_T;
    s.flow_value = t.flow_value;
    s.penalty = t.penalty;
    s.max_abs_agg = t.max_abs_agg;
    s.n_events = t.events.size();
    s.counts = t.counts;
    return s;
}

Trajectory simulate_trajectory(const ModelParams& params,
                               const std::vector<OptionSpec>& specs,
                               const IncentiveSurface& surface, const SimConfig& config,
                               std::uint64_t path_index) {
    params.validate();
    if (specs.empty()) throw validation_error("no options listed");
    for (const auto& s : specs) s.validate();
    if (surface.consts.c_hat.size() != specs.size() ||
        surface.stats.min_spread.size() != specs.size())
        throw validation_error("surface was solved for a different option set");
    if (surface.grid.times.back() < params.T - 1e-9)
        throw validation_error("surface does not cover the simulation horizon");
    if (surface.grid.q_dom < params.q_bar + max_delta(specs) - 1e-12)
        throw validation_error("surface does not cover the inventory domain");
    if (config.micro_dt < 0.0) throw validation_error("micro_dt must be non-negative");

    const double micro = config.micro_dt > 0.0 ? config.micro_dt : params.T / 1e4;
    const std::size_t n_opts = specs.size();
    const double offset = params.spread_offset();
    const double risk_share = -params.gamma / (params.gamma + params.eta);

    // Dominating intensities for exact thinning, one per (option, side): the
    // surface's smallest quote (a constant `offset` when incentives are
    // zeroed), lowered further by any negative quote shift, with headroom for
    // interpolation between audited grid points.
    std::vector<std::array<double, 2>> bound(n_opts);
    double bound_total = 0.0;
    for (std::size_t k = 0; k < n_opts; ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            const double floor_quote =
                (surface.zero_trade_incentives ? offset : surface.stats.min_spread[k][i]) +
                std::min(0.0, config.spread_shift);
            bound[k][i] = 1.1 * params.A *
                          std::exp(-(params.C / params.sigma) * (floor_quote + specs[k].fee));
            bound_total += bound[k][i];
        }
    }

    // Two streams per path: candidate times + pick/accept decisions consume
    // J; one Gaussian per inter-candidate segment consumes W. Neither stream's
    // consumption depends on micro_dt, so refining the refresh grid keeps a
    // common-seed pair of runs coupled.
    auto jrng = make_engine(config.seed, 2 * path_index);
    auto wrng = make_engine(config.seed, 2 * path_index + 1);
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    QuoteEngine quotes(params, specs, surface, config.spread_shift);

    Trajectory traj;
    traj.micro_dt = micro;
    traj.y0 = -std::log(-params.R);
    traj.counts.assign(n_opts, {0, 0});
    traj.path_times.push_back(0.0);
    traj.path_S.push_back(params.S0);

    std::vector<double> q(n_opts, 0.0);  // per-option inventories (contracts)
    double agg = 0.0;                    // sum_k delta_k q_k
    double S = params.S0;

    auto coupon_terms = [&](double& g_noise, double& g_sq, double& g_sq_simpl) {
        // G_noise = sum delta_k Z^C_k feeds the dW leg; G = sum delta_k (Z^C_k + q_k)
        // feeds the quadratic coupon, with the eta/(gamma+eta) shortcut kept as
        // an independently accumulated cross-check.
        g_noise = 0.0;
        double g = 0.0;
        for (std::size_t k = 0; k < n_opts; ++k) {
            const double zc = risk_share * q[k];
            g_noise += specs[k].delta * zc;
            g += specs[k].delta * (zc + q[k]);
        }
        g_sq = g * g;
        const double g_simpl = params.eta / (params.gamma + params.eta) * agg;
        g_sq_simpl = g_simpl * g_simpl;
    };

    double t_cur = 0.0;       // drift integral frontier
    double seg_start = 0.0;   // current Brownian segment start
    long next_micro = 1;      // index of the next micro refresh
    double g_noise, g_sq, g_sq_simpl;
    coupon_terms(g_noise, g_sq, g_sq_simpl);
    quotes.refresh(0.0, agg, bound);

    const double half_var = 0.5 * params.gamma * params.sigma * params.sigma;
    bool done = false;
    while (!done) {
        double t_cand = std::numeric_limits<double>::infinity();
        if (bound_total > 0.0) t_cand = seg_start + expo(jrng) / bound_total;
        const double seg_end = std::min(t_cand, params.T);
        done = t_cand >= params.T;

        // Drift integral over [t_cur, seg_end), refreshing quotes at each
        // crossed micro-grid point. Only the Hamiltonian coupon changes at a
        // refresh: inventories (hence G) move at accepted events only.
        while (static_cast<double>(next_micro) * micro < seg_end) {
            const double tm = static_cast<double>(next_micro) * micro;
            if (tm > t_cur) {
                const double piece = tm - t_cur;
                traj.drift_sum += (half_var * g_sq - quotes.hamiltonian_coupon) * piece;
                traj.drift_sum_simplified +=
                    (half_var * g_sq_simpl - quotes.hamiltonian_coupon) * piece;
                t_cur = tm;
            }
            quotes.refresh(tm, agg, bound);
            ++next_micro;
        }
        const double piece = seg_end - t_cur;
        traj.drift_sum += (half_var * g_sq - quotes.hamiltonian_coupon) * piece;
        traj.drift_sum_simplified +=
            (half_var * g_sq_simpl - quotes.hamiltonian_coupon) * piece;
        t_cur = seg_end;

        // One Gaussian for the whole segment: every dW integrand is constant
        // on it.
        const double dW = gauss(wrng) * std::sqrt(seg_end - seg_start);
        traj.noise_sum += g_noise * params.sigma * dW;
        traj.pl_inventory_sum += agg * params.sigma * dW;
        S += params.sigma * dW;
        traj.path_times.push_back(seg_end);
        traj.path_S.push_back(S);
        seg_start = seg_end;

        if (done) break;

        // Thinning: refresh at the candidate time (pre-event state) and let a
        // single uniform both pick the side and decide acceptance.
        quotes.refresh(t_cand, agg, bound);
        double x = unif(jrng) * bound_total;
        std::size_t pick_k = n_opts;
        Side pick_side = Side::ask;
        for (std::size_t k = 0; k < n_opts && pick_k == n_opts; ++k)
            for (Side side : {Side::ask, Side::bid}) {
                x -= quotes.lambda[k][static_cast<std::size_t>(side)];
                if (x < 0.0) {
                    pick_k = k;
                    pick_side = side;
                    break;
                }
            }
        if (pick_k == n_opts) continue;  // rejected candidate

        const auto i = static_cast<std::size_t>(pick_side);
        const double zi = quotes.z[pick_k][i];
        const double quoted = quotes.quote[pick_k][i];
        traj.trade_sum += zi;
        traj.pl_spread_sum += quoted;
        traj.flow_value += specs[pick_k].weight;
        traj.penalty +=
            params.omega * (quoted - specs[pick_k].spread_threshold);
        q[pick_k] += pick_side == Side::ask ? -1.0 : 1.0;
        agg = 0.0;
        for (std::size_t k = 0; k < n_opts; ++k) agg += specs[k].delta * q[k];
        traj.max_abs_agg = std::max(traj.max_abs_agg, std::abs(agg));
        ++traj.counts[pick_k][i];
        traj.events.push_back(
            {t_cand, pick_k, pick_side, zi, quoted, q[pick_k], agg});
        coupon_terms(g_noise, g_sq, g_sq_simpl);
        quotes.refresh(t_cand, agg, bound);  // post-event state
    }

    traj.y_T = traj.y0 + traj.trade_sum + traj.noise_sum + traj.drift_sum;
    traj.pl_T = traj.pl_spread_sum + traj.pl_inventory_sum;
    return traj;
}

std::vector<TrajectorySummary> simulate_batch(const ModelParams& params,
                                              const std::vector<OptionSpec>& specs,
                                              const IncentiveSurface& surface,
                                              const SimConfig& config,
                                              exec_policy policy) {
    if (config.n_paths == 0) throw validation_error("n_paths must be positive");
    std::vector<TrajectorySummary> out(config.n_paths);
    if (policy == exec_policy::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (long i = 0; i < static_cast<long>(config.n_paths); ++i)
            out[static_cast<std::size_t>(i)] = summarize(simulate_trajectory(
                params, specs, surface, config, static_cast<std::uint64_t>(i)));
    } else {
        for (std::size_t i = 0; i < config.n_paths; ++i)
            out[i] = summarize(simulate_trajectory(params, specs, surface, config, i));
    }
    return out;
}

UtilityEstimate estimate_mm_utility(const std::vector<TrajectorySummary>& summaries,
                                    const ModelParams& params) {
    std::vector<double> samples;
    samples.reserve(summaries.size());
    for (const auto& s : summaries)
        samples.push_back(-std::exp(-params.gamma * (s.y_T + s.pl_T)));
    return reduce_utility(summaries, samples);
}

UtilityEstimate estimate_exchange_utility(const std::vector<TrajectorySummary>& summaries,
                                          const ModelParams& params) {
    std::vector<double> samples;
    samples.reserve(summaries.size());
    for (const auto& s : summaries)
        samples.push_back(
            -std::exp(-params.eta * (s.flow_value - s.penalty - s.y_T)));
    return reduce_utility(summaries, samples);
}

}  // namespace optex
