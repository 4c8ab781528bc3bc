#pragma once

// Building a QTT vector from an element accessor without densifying it.

#include <cstdint>
#include <functional>

#include "qttv/tt_core.hpp"

namespace qttv {

struct CrossOptions {
    std::size_t max_sweeps = 20;
    /// Random entries used for the stopping test (indices 0 and 2^d-1 always included).
    std::size_t check_samples = 512;
    /// Starting rank of the random right index sets.
    std::size_t initial_rank = 2;
    /// Extra pivots kept beyond the truncation rank in every two-site step.
    std::size_t rank_kick = 2;
    std::uint64_t seed = 0x5eed;
};

struct CrossStats {
    std::uint64_t oracle_calls = 0;
    std::size_t sweeps = 0;
    /// RMS error on the check samples relative to ||a|| / sqrt(2^d).
    double sample_error = 0.0;
};

/// Error constant of the stopping rule: on the check samples the result
/// satisfies rms error <= tol.rel_eps * ||result|| / sqrt(2^d); the Frobenius
/// error is expected within kCrossErrorFactor * tol.rel_eps relative.
inline constexpr double kCrossErrorFactor = 10.0;

/// Two-site (DMRG-style) cross interpolation with maxvol pivoting over binary
/// modes. Throws ConvergenceError carrying the last ranks when the sweep
/// budget runs out.
template <class T>
TensorTrain<T> qtt_from_oracle(const std::function<T(std::uint64_t)>& f, std::size_t d,
                               const Tolerance& tol, const CrossOptions& opts = {},
                               CrossStats* stats = nullptr);

/// Trains up to 2^kDenseBuildModes entries are quantized from a dense copy;
/// larger ones go through qtt_from_oracle.
inline constexpr std::size_t kDenseBuildModes = 20;
TTVector qtt_from_function(const std::function<double(std::uint64_t)>& f, std::size_t d,
                           const Tolerance& tol);

namespace detail {
/// Rows of a tall m x r matrix (m >= r) spanning a dominant r x r submatrix:
/// every entry of U U[rows]^{-1} is bounded by `bound` in modulus.
template <class T>
std::vector<Eigen::Index> maxvol(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& u,
                                 double bound = 1.05, std::size_t max_swaps = 200);
}  // namespace detail

}  // namespace qttv
