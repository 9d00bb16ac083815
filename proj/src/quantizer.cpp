#include "optex/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace optex {

namespace {

double power_distance(double x, double p) {
    const double a = std::abs(x);
    if (p == 2.0) return a * a;
    return std::pow(a, p);
}

// Index of the nearest strike, ties resolved to the lower index.
std::size_t nearest_strike(const std::vector<double>& strikes, double atom) {
    std::size_t best = 0;
    double best_d = std::abs(atom - strikes[0]);
    for (std::size_t i = 1; i < strikes.size(); ++i) {
        const double d = std::abs(atom - strikes[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// Exact p-power centroid of a weighted atom set: the unique minimizer of
// sum_a w_a |x - a|^p over the atom hull. Closed form (weighted mean) for
// p = 2; bisection on the strictly increasing derivative otherwise.
double power_centroid(const std::vector<double>& atoms, const std::vector<double>& weights,
                      double p) {
    if (atoms.size() == 1) return atoms[0];
    if (p == 2.0) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            num += weights[i] * atoms[i];
            den += weights[i];
        }
        return num / den;
    }
    auto derivative = [&](double x) {
        double d = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double diff = x - atoms[i];
            d += weights[i] * std::copysign(std::pow(std::abs(diff), p - 1.0), diff);
        }
        return d;
    };
    double lo = *std::min_element(atoms.begin(), atoms.end());
    double hi = *std::max_element(atoms.begin(), atoms.end());
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (derivative(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Midpoint cells; tolerates duplicate strikes (zero-width cells).
std::vector<Interval> cells_unchecked(const std::vector<double>& strikes, double k_bar) {
    const std::size_t n = strikes.size();
    std::vector<Interval> cells(n);
    double lo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double hi = (i + 1 < n) ? 0.5 * (strikes[i] + strikes[i + 1]) : k_bar;
        cells[i] = {lo, hi};
        lo = hi;
    }
    return cells;
}

void validate_common(const DemandDistribution& dist, double p) {
    dist.validate();
    if (p < 2.0) throw validation_error("regret exponent p must be >= 2");
}

}  // namespace

void DemandDistribution::validate() const {
    if (atoms.empty()) throw validation_error("empty distribution");
    if (atoms.size() != probs.size())
        throw validation_error("atoms/probs size mismatch");
    if (k_bar <= 0.0) throw validation_error("k_bar must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i] >= 0.0) || atoms[i] > k_bar)
            throw validation_error("atom outside [0, k_bar]");
        if (i > 0 && !(atoms[i] > atoms[i - 1]))
            throw validation_error("atoms must be strictly increasing");
        if (!(probs[i] >= 0.0)) throw validation_error("negative probability");
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw validation_error("probabilities do not sum to 1");
}

DemandDistribution build_empirical_distribution(const std::vector<StrikeCount>& rows,
                                                double k_bar, double spot) {
    std::map<double, double> counts;
    double total = 0.0;
    for (const auto& row : rows) {
        if (row.count < 0.0) throw validation_error("negative count in trade rows");
        double strike = row.strike;
        if (spot > 0.0) strike = 100.0 * strike / spot;
        if (strike < 0.0) throw validation_error("negative strike in trade rows");
        counts[strike] += row.count;
        total += row.count;
    }
    if (total <= 0.0) throw validation_error("empty distribution");

    DemandDistribution dist;
    for (const auto& [strike, count] : counts) {
        if (count <= 0.0) continue;  // zero-demand strikes carry no information
        dist.atoms.push_back(strike);
        dist.probs.push_back(count / total);
    }
    dist.k_bar = (k_bar > 0.0) ? k_bar : std::max(200.0, dist.atoms.back());
    dist.validate();
    return dist;
}

double weighted_percentile(const DemandDistribution& dist, double q) {
    dist.validate();
    if (q < 0.0 || q > 1.0) throw validation_error("percentile level outside [0, 1]");
    double cum = 0.0;
    for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
        cum += dist.probs[i];
        if (cum >= q) return dist.atoms[i];
    }
    return dist.atoms.back();
}

std::vector<Interval> voronoi_cells(const std::vector<double>& strikes, double k_bar) {
    if (strikes.empty()) throw validation_error("no strikes");
    if (k_bar <= 0.0) throw validation_error("k_bar must be positive");
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        if (strikes[i] < 0.0 || strikes[i] > k_bar)
            throw validation_error("strike outside [0, k_bar]");
        if (i > 0 && !(strikes[i] > strikes[i - 1]))
            throw validation_error("strikes must be strictly increasing");
    }
    return cells_unchecked(strikes, k_bar);
}

double average_regret(const DemandDistribution& dist, const std::vector<double>& strikes,
                      double p) {
    validate_common(dist, p);
    if (strikes.empty()) throw validation_error("no strikes");
    double regret = 0.0;
    for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
        const std::size_t j = nearest_strike(strikes, dist.atoms[i]);
        regret += dist.probs[i] * power_distance(dist.atoms[i] - strikes[j], p);
    }
    return regret;
}

std::vector<double> lloyd_step(const DemandDistribution& dist,
                               const std::vector<double>& strikes, double p) {
    validate_common(dist, p);
    if (strikes.empty()) throw validation_error("no strikes");
    const std::size_t n = strikes.size();
    const std::size_t m = dist.atoms.size();

    // Assignment pass: collect each cell's atoms, then move every strike to
    // its cell's exact p-power centroid (conditional mean for p = 2).
    std::vector<std::vector<double>> cell_atoms(n), cell_weights(n);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = nearest_strike(strikes, dist.atoms[i]);
        cell_atoms[j].push_back(dist.atoms[i]);
        cell_weights[j].push_back(dist.probs[i]);
    }

    std::vector<double> updated(strikes);
    std::vector<std::size_t> empty_cells;
    for (std::size_t j = 0; j < n; ++j) {
        if (cell_atoms[j].empty())
            empty_cells.push_back(j);
        else
            updated[j] = power_centroid(cell_atoms[j], cell_weights[j], p);
    }

    if (!empty_cells.empty()) {
        // Reseed dead cells to the highest-regret atoms not already used as
        // strikes (each reseed takes a distinct atom).
        std::vector<std::pair<double, double>> candidates;  // (contribution, atom)
        for (std::size_t i = 0; i < m; ++i) {
            const double a = dist.atoms[i];
            if (std::find(updated.begin(), updated.end(), a) != updated.end()) continue;
            const std::size_t j = nearest_strike(strikes, a);
            const double contrib =
                dist.probs[i] * power_distance(a - strikes[j], p);
            candidates.emplace_back(contrib, a);
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const auto& x, const auto& y) { return x.first > y.first; });
        std::size_t next = 0;
        for (const std::size_t j : empty_cells) {
            if (next < candidates.size()) updated[j] = candidates[next++].second;
            // else: no free atom left, the duplicate strike stays.
        }
    }

    std::sort(updated.begin(), updated.end());
    return updated;
}

StrikeSet lloyd_run(const DemandDistribution& dist, int n, double p,
                    const LloydOptions& opts) {
    validate_common(dist, p);
    if (n < 1) throw validation_error("need at least one strike");
    if (opts.epsilon <= 0.0) throw validation_error("epsilon must be positive");
    if (opts.max_iter < 1) throw validation_error("max_iter must be positive");

    auto rng = make_engine(opts.seed, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Weighted draw from a cumulative scan: deterministic given the engine.
    auto sample_index = [&](const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = unif(rng) * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u <= 0.0) return i;
        }
        return weights.size() - 1;
    };

    // D^p-weighted seeding: the first strike is an atom drawn by probability,
    // each further strike an atom drawn proportionally to its current
    // contribution to the regret. Covers separated basins far more reliably
    // than a fixed percentile window.
    std::vector<double> strikes;
    strikes.push_back(dist.atoms[sample_index(dist.probs)]);
    while (strikes.size() < static_cast<std::size_t>(n)) {
        std::vector<double> d2(dist.atoms.size());
        double total = 0.0;
        for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
            const std::size_t j = nearest_strike(strikes, dist.atoms[i]);
            d2[i] = dist.probs[i] * power_distance(dist.atoms[i] - strikes[j], p);
            total += d2[i];
        }
        if (total > 0.0)
            strikes.push_back(dist.atoms[sample_index(d2)]);
        else  // every atom already covered: duplicates are unavoidable
            strikes.push_back(dist.atoms[sample_index(dist.probs)]);
    }
    std::sort(strikes.begin(), strikes.end());

    StrikeSet result;
    result.p = p;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        std::vector<double> next = lloyd_step(dist, strikes, p);
        double movement = 0.0;
        for (std::size_t i = 0; i < strikes.size(); ++i)
            movement += std::abs(next[i] - strikes[i]);
        strikes = std::move(next);
        result.iterations = iter;
        if (movement < opts.epsilon) {
            result.converged = true;
            break;
        }
    }

    result.strikes = strikes;
    result.cells = cells_unchecked(strikes, dist.k_bar);
    result.regret = average_regret(dist, strikes, p);
    result.support_smaller_than_n =
        static_cast<std::size_t>(n) > dist.atoms.size();
    return result;
}

StrikeSet lloyd_best_of(const DemandDistribution& dist, int n, double p,
                        const LloydOptions& opts, int n_seeds, exec_policy policy) {
    if (n_seeds < 1) throw validation_error("need at least one seed");
    std::vector<StrikeSet> runs(static_cast<std::size_t>(n_seeds));

    if (policy == exec_policy::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int s = 0; s < n_seeds; ++s) {
            LloydOptions o = opts;
            o.seed = opts.seed + static_cast<std::uint64_t>(s);
            runs[static_cast<std::size_t>(s)] = lloyd_run(dist, n, p, o);
        }
    } else {
        for (int s = 0; s < n_seeds; ++s) {
            LloydOptions o = opts;
            o.seed = opts.seed + static_cast<std::uint64_t>(s);
            runs[static_cast<std::size_t>(s)] = lloyd_run(dist, n, p, o);
        }
    }

    // Fixed-order scan: ties go to the lowest seed regardless of scheduling.
    std::size_t best = 0;
    for (std::size_t s = 1; s < runs.size(); ++s)
        if (runs[s].regret < runs[best].regret) best = s;
    return runs[best];
}

std::vector<double> contiguous_mean_grid(const DemandDistribution& dist) {
    dist.validate();
    std::vector<double> grid(dist.atoms);
    const std::size_t m = dist.atoms.size();
    for (std::size_t i = 0; i < m; ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = i; j < m; ++j) {
            num += dist.probs[j] * dist.atoms[j];
            den += dist.probs[j];
            if (j > i && den > 0.0) grid.push_back(num / den);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

StrikeSet brute_force_quantizer(const DemandDistribution& dist, int n, double p,
                                const std::vector<double>& candidate_grid) {
    validate_common(dist, p);
    if (n < 1) throw validation_error("need at least one strike");
    std::vector<double> grid(candidate_grid);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t g = grid.size();
    if (g < static_cast<std::size_t>(n))
        throw validation_error("candidate grid smaller than n");

    // Enumerate n-subsets in lexicographic index order; strict improvement
    // keeps the lexicographically smallest tuple among regret ties.
    const std::size_t k = static_cast<std::size_t>(n);
    auto next_combination = [g, k](std::vector<std::size_t>& idx) {
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (idx[i] != i + g - k) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                return true;
            }
        }
        return false;
    };

    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> strikes(k);
    std::vector<double> best_strikes;
    double best_regret = std::numeric_limits<double>::infinity();
    do {
        for (std::size_t i = 0; i < k; ++i) strikes[i] = grid[idx[i]];
        const double regret = average_regret(dist, strikes, p);
        if (regret < best_regret) {
            best_regret = regret;
            best_strikes = strikes;
        }
    } while (next_combination(idx));

    StrikeSet result;
    result.strikes = best_strikes;
    result.cells = cells_unchecked(best_strikes, dist.k_bar);
    result.regret = best_regret;
    result.p = p;
    result.converged = true;
    result.support_smaller_than_n = k > dist.atoms.size();
    return result;
}

}  // namespace optex
