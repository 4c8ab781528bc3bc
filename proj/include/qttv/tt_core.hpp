#pragma once

// Tensor-train vectors with binary (quantized) indices.
//
// A vector of length 2^d is stored as d cores; core p holds two slices
// A_p(0), A_p(1) of shape r_p x r_{p+1} (r_0 = r_d = 1), and
//
//     a(k) = A_0(k_0) A_1(k_1) ... A_{d-1}(k_{d-1}),   k = sum_p k_p 2^p.
//
// Bit k_0 is the least significant one; every structural operation in the
// library relies on this convention.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "qttv/errors.hpp"

namespace qttv {

using Complex = std::complex<double>;

template <class T>
inline constexpr bool is_complex_v = false;
template <class T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

/// Relative Frobenius-norm truncation target plus an optional hard rank cap.
struct Tolerance {
    double rel_eps = 1e-10;
    std::optional<std::size_t> max_rank;

    Tolerance() = default;
    Tolerance(double eps, std::optional<std::size_t> cap = std::nullopt)  // NOLINT
        : rel_eps(eps), max_rank(cap) {
        validate();
    }

    /// Same cap, scaled threshold.
    Tolerance scaled(double factor) const { return Tolerance(rel_eps * factor, max_rank); }

    void validate() const {
        if (!(rel_eps >= 0.0 && rel_eps < 1.0))
            throw InvalidArgument("tolerance rel_eps must lie in [0, 1)");
        if (max_rank && *max_rank < 1) throw InvalidArgument("tolerance max_rank must be >= 1");
    }
};

/// Largest mode count that materialize() will expand (2^30 entries).
inline constexpr std::size_t kMaxMaterializeModes = 30;

template <class T>
class TensorTrain {
    static_assert(std::is_same_v<T, double> || std::is_same_v<T, Complex>,
                  "TensorTrain supports double and std::complex<double>");

public:
    using Scalar = T;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    /// Slices for bit value 0 and 1; both r_p x r_{p+1}.
    using Core = std::array<Matrix, 2>;

    /// Validates border ranks, slice shapes, and rank chaining.
    explicit TensorTrain(std::vector<Core> cores);

    static TensorTrain constant(std::size_t d, T value);
    static TensorTrain zeros(std::size_t d) { return constant(d, T(0)); }
    static TensorTrain ones(std::size_t d) { return constant(d, T(1)); }
    /// Canonical basis vector e_k (all ranks one).
    static TensorTrain unit(std::size_t d, std::uint64_t k);

    std::size_t modes() const noexcept { return cores_.size(); }
    std::uint64_t size() const noexcept { return std::uint64_t{1} << cores_.size(); }

    /// r_p for p = 0..d.
    std::size_t rank(std::size_t p) const;
    std::vector<std::size_t> ranks() const;
    std::size_t max_rank() const;
    /// Number of stored scalars, sum_p 2 r_p r_{p+1}.
    std::size_t storage() const;

    const Core& core(std::size_t p) const { return cores_.at(p); }
    const std::vector<Core>& cores() const noexcept { return cores_; }
    std::vector<Core> release() && { return std::move(cores_); }

    /// Single entry, O(d r^2).
    T element(std::uint64_t k) const;

private:
    std::vector<Core> cores_;
};

using TTVector = TensorTrain<double>;
using TTVectorC = TensorTrain<Complex>;

/// Dense expansion; refuses trains with more than kMaxMaterializeModes modes.
template <class T>
std::vector<T> materialize(const TensorTrain<T>& a);

/// TT-SVD of a dense vector whose length is a power of two.
template <class T>
TensorTrain<T> quantize(std::span<const T> v, const Tolerance& tol);

/// Re-compression to the tolerance. Result cores 0..d-2 are left-orthogonal
/// and the last core carries the norm.
template <class T>
TensorTrain<T> round(const TensorTrain<T>& a, const Tolerance& tol);

/// Left-orthogonalizes cores 0..d-2 without truncation.
template <class T>
TensorTrain<T> orthogonalize_left(const TensorTrain<T>& a);

template <class T>
TensorTrain<T> add(const TensorTrain<T>& a, const TensorTrain<T>& b);
template <class T>
TensorTrain<T> scale(const TensorTrain<T>& a, T c);
/// a + c b, rank r_a + r_b.
template <class T>
TensorTrain<T> axpy(const TensorTrain<T>& a, T c, const TensorTrain<T>& b);
template <class T>
TensorTrain<T> hadamard(const TensorTrain<T>& a, const TensorTrain<T>& b);
/// Inner product sum_k conj(a(k)) b(k).
template <class T>
T dot(const TensorTrain<T>& a, const TensorTrain<T>& b);
template <class T>
double norm(const TensorTrain<T>& a);
/// Entry k multiplied by eps^k; exact, ranks unchanged.
template <class T>
TensorTrain<T> scale_geometric(const TensorTrain<T>& a, double eps);
/// Entry k multiplied by exp(k * log_eps); avoids forming eps itself.
template <class T>
TensorTrain<T> scale_geometric_log(const TensorTrain<T>& a, double log_eps);

TTVectorC to_complex(const TTVector& a);
/// Exact real part; ranks double, callers usually round afterwards.
TTVector real_part(const TTVectorC& a);
TTVectorC conjugate(const TTVectorC& a);

/// Number of round() calls made on the current thread; feeds telemetry.
std::uint64_t round_call_count() noexcept;

namespace detail {
void check_same_modes(std::size_t da, std::size_t db, const char* op);
std::size_t mode_count_for_length(std::size_t length);
}  // namespace detail

}  // namespace qttv
