#pragma once

// Dense kernels shared by the tensor-train routines (internal header).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "qttv/errors.hpp"
#include "qttv/tt_core.hpp"

namespace qttv::detail {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// Stack the two slices vertically: (2 r_left) x r_right, row = alpha + r_left * k.
template <class T>
Mat<T> left_unfold(const typename TensorTrain<T>::Core& c) {
    const auto rl = c[0].rows(), rr = c[0].cols();
    Mat<T> m(2 * rl, rr);
    m.topRows(rl) = c[0];
    m.bottomRows(rl) = c[1];
    return m;
}

template <class T>
typename TensorTrain<T>::Core from_left_unfold(const Mat<T>& m) {
    const auto rl = m.rows() / 2;
    return {m.topRows(rl), m.bottomRows(rl)};
}

/// Slices side by side: r_left x (2 r_right), col = beta + r_right * k.
template <class T>
Mat<T> right_unfold(const typename TensorTrain<T>::Core& c) {
    const auto rl = c[0].rows(), rr = c[0].cols();
    Mat<T> m(rl, 2 * rr);
    m.leftCols(rr) = c[0];
    m.rightCols(rr) = c[1];
    return m;
}

template <class T>
typename TensorTrain<T>::Core from_right_unfold(const Mat<T>& m) {
    const auto rr = m.cols() / 2;
    return {m.leftCols(rr), m.rightCols(rr)};
}

/// M ~= U diag(s) V^H.
template <class T>
struct LowRank {
    Mat<T> U;
    Eigen::VectorXd s;
    Mat<T> V;
};

/// Number of leading singular values to keep: the discarded tail satisfies
/// sum s_i^2 <= (rel_threshold * ||M||_F)^2. Never returns zero.
inline std::size_t truncation_rank(const Eigen::VectorXd& s, double rel_threshold) {
    const double total = s.squaredNorm();
    const double budget = rel_threshold * rel_threshold * total;
    std::size_t rank = static_cast<std::size_t>(s.size());
    double tail = 0.0;
    while (rank > 1) {
        const double next = tail + s[static_cast<Eigen::Index>(rank - 1)] *
                                       s[static_cast<Eigen::Index>(rank - 1)];
        if (next > budget) break;
        tail = next;
        --rank;
    }
    return std::max<std::size_t>(rank, 1);
}

inline constexpr Eigen::Index kJacobiMaxDim = 16;

template <class T>
LowRank<T> truncated_svd(const Mat<T>& m, double rel_threshold, std::optional<std::size_t> cap,
                         std::size_t mode) {
    constexpr int opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
    auto take = [&](const auto& svd) -> LowRank<T> {
        const Eigen::VectorXd s = svd.singularValues();
        const std::size_t rank = truncation_rank(s, rel_threshold);
        if (cap && rank > *cap) throw RankLimitExceeded(mode, rank, *cap);
        const auto r = static_cast<Eigen::Index>(rank);
        return {svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
    };
    // BDCSVD is not accurate enough on the small blocks that dominate QTT
    // sweeps (relative errors near 1e-8 seen on 8 x 32 complex blocks), and
    // Jacobi is cheap there.
    if (std::min(m.rows(), m.cols()) <= kJacobiMaxDim) return take(Eigen::JacobiSVD<Mat<T>>(m, opts));
    // On larger blocks BDCSVD occasionally loses the whole spectrum on complex
    // input with a long tail of tiny singular values; the Frobenius identity
    // catches it.
    Eigen::BDCSVD<Mat<T>> fast(m, opts);
    const double fro2 = m.squaredNorm();
    const double spec2 = fast.singularValues().squaredNorm();
    if (std::isfinite(spec2) && std::abs(spec2 - fro2) <= 1e-10 * fro2 && fast.matrixU().allFinite())
        return take(fast);
    return take(Eigen::JacobiSVD<Mat<T>>(m, opts));
}

/// Thin QR: m = Q R with Q having orthonormal columns.
template <class T>
std::pair<Mat<T>, Mat<T>> thin_qr(const Mat<T>& m) {
    const auto rows = m.rows(), cols = m.cols();
    const auto k = std::min(rows, cols);
    Eigen::HouseholderQR<Mat<T>> qr(m);
    Mat<T> q = qr.householderQ() * Mat<T>::Identity(rows, k);
    Mat<T> r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    return {std::move(q), std::move(r)};
}

}  // namespace qttv::detail
