#pragma once

// Fourier transform, causal convolution and the elementwise Newton reciprocal,
// dense (reference) and in QTT form.
//
// All transforms are unitary: forward y(j) = n^{-1/2} sum_k x(k) exp(-2 pi i jk/n),
// inverse with the opposite sign. Circulant eigenvalues therefore read
// sqrt(n) * F c; call sites apply that factor explicitly.

#include <memory>
#include <span>
#include <vector>

#include "qttv/tt_core.hpp"

namespace qttv {

enum class FftDirection { forward, inverse };

/// Unitary power-of-two FFT backed by a cached FFTW plan. Copyable, immutable,
/// safe to execute concurrently.
class FftPlan {
public:
    FftPlan(std::size_t size, FftDirection direction);

    std::size_t size() const noexcept { return size_; }
    FftDirection direction() const noexcept { return direction_; }

    /// out may alias in.
    void execute(std::span<const Complex> in, std::span<Complex> out) const;
    std::vector<Complex> operator()(std::span<const Complex> in) const;

private:
    struct Impl;
    std::size_t size_;
    FftDirection direction_;
    std::shared_ptr<const Impl> impl_;
};

std::vector<Complex> fft_dense(std::span<const Complex> v, FftDirection direction);

/// y = T x for the n x n Toeplitz matrix with first column `first_col` and
/// first row [first_col(0), first_row_tail...] (n - 1 entries). Circulant
/// embedding of size 2n, three FFTs.
std::vector<double> toeplitz_matvec_dense(std::span<const double> first_col,
                                          std::span<const double> first_row_tail,
                                          std::span<const double> x);

/// c(j) = sum_{k<=j} a(j-k) b(k), truncated to the common length.
std::vector<double> causal_convolve_dense(std::span<const double> a, std::span<const double> b);

struct QttFftStats {
    /// Max rank after rounding, per stage (stage s processes input mode d-1-s).
    std::vector<std::size_t> stage_max_rank;
    /// Sum over stages of sum_p r_p^2 r_{p+1}: the work of the stage rounds.
    double core_ops = 0.0;
};

/// Radix-2 decimation in time over the binary digits, output in natural order.
/// Rounds the whole train after every stage at tol / d, so the expected error
/// is below kQttFftErrorFactor * tol.rel_eps.
TTVectorC qtt_fft(const TTVectorC& a, FftDirection direction, const Tolerance& tol,
                  QttFftStats* stats = nullptr);

inline constexpr double kQttFftErrorFactor = 2.0;

enum class ConvolutionMethod { kazev, fourier };

struct ConvolutionStats {
    /// Ranks of the structured (kazev) product before rounding.
    std::vector<std::size_t> pre_round_ranks;
};

/// Causal convolution truncated to 2^d entries.
/// kazev: binary-adder construction with internal ranks <= 2 r_a r_b, then round.
/// fourier: pad to 2^{d+1} with interleave_concat(a, zeros), qtt_fft, Hadamard
/// product, inverse qtt_fft, leading block.
template <class T>
TensorTrain<T> qtt_convolve(const TensorTrain<T>& a, const TensorTrain<T>& b,
                            const Tolerance& tol,
                            ConvolutionMethod method = ConvolutionMethod::kazev,
                            ConvolutionStats* stats = nullptr);

struct ReciprocalOptions {
    std::size_t max_iters = 100;
    /// Stop once ||lambda o x - 1|| / sqrt(n) falls below this; 0 means 10 * tol.rel_eps.
    double target_residual = 0.0;
    /// Entries used to estimate max |lambda| for the initial guess.
    std::size_t probe_samples = 256;
    std::uint64_t seed = 0xfeed;
};

struct ReciprocalStats {
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    std::vector<double> residuals;  // residual of every iterate, starting with x_0
};

/// Elementwise 1/lambda by x <- x o (2 - lambda o x) with rounding after each
/// product. Initial guess x_0 = conj(lambda) / M^2, M the largest sampled
/// |lambda|; restarts with mu / 4 when the iteration diverges.
/// Throws SingularOperator if an entry sits below 1e3 * eps * max|lambda|
/// (checked exactly for d <= 16, on the probe samples otherwise) and
/// ConvergenceError with the last residual when the target is not reached.
TTVectorC qtt_reciprocal(const TTVectorC& lambda, const Tolerance& tol,
                         const ReciprocalOptions& opts = {}, ReciprocalStats* stats = nullptr);

}  // namespace qttv
