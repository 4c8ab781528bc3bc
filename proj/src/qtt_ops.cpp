#include "qttv/qtt_ops.hpp"

#include <string>

#include "linalg.hpp"

namespace qttv {

using detail::Mat;

namespace {

template <class T>
using Core = typename TensorTrain<T>::Core;

template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

void check_block_index(std::size_t t, std::size_t lo, std::size_t hi, const char* op) {
    if (t < lo || t > hi)
        throw InvalidArgument(std::string(op) + ": t=" + std::to_string(t) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

template <class T>
TensorTrain<T> single_mode(T v0, T v1) {
    Core<T> c{Mat<T>::Constant(1, 1, v0), Mat<T>::Constant(1, 1, v1)};
    return TensorTrain<T>(std::vector<Core<T>>{std::move(c)});
}

/// Shift by one with a travelling borrow/carry flag. `stay` is the bit value
/// of the output index that keeps the flag alive (the source index then has
/// the opposite bit), `fill` the entry produced when it survives all modes.
/// When the flag dies at mode p the fixed product
/// A_0(flip)...A_{p-1}(flip) A_p(stay) enters the regular part of the state.
template <class T>
TensorTrain<T> shift_by_one(const TensorTrain<T>& a, int stay, T fill) {
    const std::size_t d = a.modes();
    const int flip = 1 - stay;
    std::vector<Core<T>> out(d);
    RowVec<T> chain = RowVec<T>::Ones(1);  // A_0(flip) ... A_{p-1}(flip)

    for (std::size_t p = 0; p < d; ++p) {
        const auto& c = a.core(p);
        const auto rl = c[0].rows(), rr = c[0].cols();
        const RowVec<T> resolved = chain * c[stay];
        if (p == 0) {
            // Row vector [resolved part | flag].
            out[p][stay] = Mat<T>::Zero(1, rr + 1);
            out[p][stay](0, rr) = T(1);
            out[p][flip] = Mat<T>::Zero(1, rr + 1);
            out[p][flip].leftCols(rr) = c[stay];
        } else if (p + 1 < d) {
            for (int k = 0; k < 2; ++k) {
                out[p][k] = Mat<T>::Zero(rl + 1, rr + 1);
                out[p][k].topLeftCorner(rl, rr) = c[k];
            }
            out[p][stay](rl, rr) = T(1);
            out[p][flip].bottomLeftCorner(1, rr) = resolved;
        } else {
            for (int k = 0; k < 2; ++k) {
                out[p][k] = Mat<T>::Zero(rl + 1, 1);
                out[p][k].topRows(rl) = c[k];
            }
            out[p][stay](rl, 0) = fill;
            out[p][flip](rl, 0) = resolved(0, 0);
        }
        chain = chain * c[flip];
    }
    return TensorTrain<T>(std::move(out));
}

/// First t cores with the fixed tail A_t(bits[t]) ... A_{d-1}(bits[d-1]) absorbed.
template <class T>
TensorTrain<T> absorb_tail(const TensorTrain<T>& a, std::size_t t, int first_bit) {
    const std::size_t d = a.modes();
    Mat<T> tail = Mat<T>::Identity(static_cast<Eigen::Index>(a.rank(t)),
                                   static_cast<Eigen::Index>(a.rank(t)));
    for (std::size_t p = t; p < d; ++p) tail = tail * a.core(p)[p == t ? first_bit : 0];
    std::vector<Core<T>> out(a.cores().begin(), a.cores().begin() + static_cast<long>(t));
    out[t - 1][0] = out[t - 1][0] * tail;
    out[t - 1][1] = out[t - 1][1] * tail;
    return TensorTrain<T>(std::move(out));
}

}  // namespace

template <class T>
TensorTrain<T> push(const TensorTrain<T>& a, T x) {
    if (a.modes() == 1) return single_mode<T>(x, a.element(0));
    return shift_by_one(a, 0, x);
}

template <class T>
TensorTrain<T> pull(const TensorTrain<T>& a, T y) {
    if (a.modes() == 1) return single_mode<T>(a.element(1), y);
    return shift_by_one(a, 1, y);
}

template <class T>
TensorTrain<T> reverse(const TensorTrain<T>& a) {
    auto cores = a.cores();
    for (auto& c : cores) std::swap(c[0], c[1]);
    return TensorTrain<T>(std::move(cores));
}

template <class T>
TensorTrain<T> leading_block(const TensorTrain<T>& a, std::size_t t) {
    check_block_index(t, 1, a.modes(), "leading_block");
    if (t == a.modes()) return a;
    return absorb_tail(a, t, 0);
}

template <class T>
TensorTrain<T> block_column(const TensorTrain<T>& a, std::size_t t) {
    check_block_index(t, 1, a.modes() - 1, "block_column");
    return absorb_tail(a, t, 1);
}

template <class T>
TensorTrain<T> block_row(const TensorTrain<T>& a, std::size_t t) {
    check_block_index(t, 1, a.modes() - 1, "block_row");
    return reverse(leading_block(pull(a, T(0)), t));
}

template <class T>
TensorTrain<T> interleave_concat(const TensorTrain<T>& b, const TensorTrain<T>& g) {
    detail::check_same_modes(b.modes(), g.modes(), "interleave_concat");
    const std::size_t t = b.modes();
    std::vector<Core<T>> out(t + 1);
    for (std::size_t p = 0; p < t; ++p) {
        const auto& cb = b.core(p);
        const auto& cg = g.core(p);
        for (int k = 0; k < 2; ++k) {
            Mat<T> blk = Mat<T>::Zero(cb[k].rows() + cg[k].rows(), cb[k].cols() + cg[k].cols());
            blk.topLeftCorner(cb[k].rows(), cb[k].cols()) = cb[k];
            blk.bottomRightCorner(cg[k].rows(), cg[k].cols()) = cg[k];
            // The first core starts from the single row [1, 1].
            if (p == 0) blk = Mat<T>(blk.colwise().sum());
            out[p][k] = std::move(blk);
        }
    }
    // Selector on the new leading digit: 0 picks b, 1 picks g.
    out[t][0] = Mat<T>{{T(1)}, {T(0)}};
    out[t][1] = Mat<T>{{T(0)}, {T(1)}};
    return TensorTrain<T>(std::move(out));
}

#define QTTV_INSTANTIATE(T)                                                          \
    template TensorTrain<T> push(const TensorTrain<T>&, T);                          \
    template TensorTrain<T> pull(const TensorTrain<T>&, T);                          \
    template TensorTrain<T> reverse(const TensorTrain<T>&);                          \
    template TensorTrain<T> leading_block(const TensorTrain<T>&, std::size_t);       \
    template TensorTrain<T> block_column(const TensorTrain<T>&, std::size_t);        \
    template TensorTrain<T> block_row(const TensorTrain<T>&, std::size_t);           \
    template TensorTrain<T> interleave_concat(const TensorTrain<T>&, const TensorTrain<T>&);

QTTV_INSTANTIATE(double)
QTTV_INSTANTIATE(Complex)
#undef QTTV_INSTANTIATE

}  // namespace qttv
