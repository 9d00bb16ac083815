#pragma once

// Shared infrastructure: error taxonomy, execution policy for the parallel
// kernels, deterministic per-stream RNG construction, and small numeric
// helpers used across modules.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace optex {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto distinct exit codes.
// ---------------------------------------------------------------------------

// Bad inputs: malformed files, out-of-range parameters, inconsistent configs.
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: scheme instability, overflow, failed convergence.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / stream failures.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Execution policy. Every parallel kernel keeps a serial reference
// implementation; results are bit-identical between the two by construction
// (independent per-index work, fixed-order reductions).
// ---------------------------------------------------------------------------

enum class exec_policy { serial, parallel };

// ---------------------------------------------------------------------------
// Deterministic RNG streams.
//
// Each logical stream (a Lloyd seed, a Monte Carlo path, a simulated
// trajectory) gets its own engine derived from (base_seed, stream_id) through
// a splitmix64 mix. Streams are therefore independent of thread scheduling:
// running a batch serially or under OpenMP consumes exactly the same numbers
// per stream.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t base_seed, std::uint64_t stream_id) {
    return std::mt19937_64(splitmix64(base_seed ^ splitmix64(stream_id)));
}

// ---------------------------------------------------------------------------
// Numeric helpers.
// ---------------------------------------------------------------------------

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

}  // namespace optex
