#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace covertaoi {

using cplx = std::complex<double>;

inline constexpr double kLog2E = 1.4426950408889634074;  // 1/ln(2)

/// Thrown when a scenario file fails structural parsing.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a scenario violates a model invariant; message names the field.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a subproblem (or the full problem) has no feasible point.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// splitmix64; used to derive independent stream seeds from (seed, tag) pairs
// so that concurrent workers never share a generator state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag = 0) {
    return std::mt19937_64(mix_seed(seed, tag));
}

}  // namespace covertaoi
