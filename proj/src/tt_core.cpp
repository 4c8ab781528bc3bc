#include "qttv/tt_core.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "linalg.hpp"

namespace qttv {

namespace {
thread_local std::uint64_t g_round_calls = 0;
}

std::uint64_t round_call_count() noexcept { return g_round_calls; }

namespace detail {

void check_same_modes(std::size_t da, std::size_t db, const char* op) {
    if (da != db)
        throw InvalidArgument(std::string(op) + ": mode counts differ (" + std::to_string(da) +
                              " vs " + std::to_string(db) + ")");
}

std::size_t mode_count_for_length(std::size_t length) {
    if (length == 0) throw InvalidArgument("vector length must be positive");
    if (!std::has_single_bit(length))
        throw InvalidArgument("vector length " + std::to_string(length) +
                              " is not a power of two");
    const auto d = static_cast<std::size_t>(std::countr_zero(length));
    if (d == 0) throw InvalidArgument("vector length must be at least 2 (d >= 1)");
    return d;
}

}  // namespace detail

using detail::Mat;

// ---------------------------------------------------------------------------
// TensorTrain

template <class T>
TensorTrain<T>::TensorTrain(std::vector<Core> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) throw InvalidArgument("tensor train needs at least one core");
    if (cores_.size() > 62) throw InvalidArgument("tensor train limited to 62 modes");
    for (std::size_t p = 0; p < cores_.size(); ++p) {
        const auto& c = cores_[p];
        if (c[0].rows() != c[1].rows() || c[0].cols() != c[1].cols())
            throw InvalidArgument("core " + std::to_string(p) + ": slice shapes differ");
        if (c[0].rows() < 1 || c[0].cols() < 1)
            throw InvalidArgument("core " + std::to_string(p) + ": ranks must be >= 1");
        if (p > 0 && cores_[p - 1][0].cols() != c[0].rows())
            throw InvalidArgument("rank mismatch between cores " + std::to_string(p - 1) +
                                  " and " + std::to_string(p));
    }
    if (cores_.front()[0].rows() != 1 || cores_.back()[0].cols() != 1)
        throw InvalidArgument("border ranks must be 1");
}

template <class T>
TensorTrain<T> TensorTrain<T>::constant(std::size_t d, T value) {
    if (d < 1) throw InvalidArgument("constant: d must be >= 1");
    std::vector<Core> cores(d, Core{Matrix::Ones(1, 1), Matrix::Ones(1, 1)});
    cores[0][0](0, 0) = value;
    cores[0][1](0, 0) = value;
    return TensorTrain(std::move(cores));
}

template <class T>
TensorTrain<T> TensorTrain<T>::unit(std::size_t d, std::uint64_t k) {
    if (d < 1 || d > 62) throw InvalidArgument("unit: d out of range");
    if (k >> d) throw InvalidArgument("unit: index out of range");
    std::vector<Core> cores(d);
    for (std::size_t p = 0; p < d; ++p) {
        const bool bit = (k >> p) & 1U;
        cores[p] = Core{Matrix::Constant(1, 1, bit ? T(0) : T(1)),
                        Matrix::Constant(1, 1, bit ? T(1) : T(0))};
    }
    return TensorTrain(std::move(cores));
}

template <class T>
std::size_t TensorTrain<T>::rank(std::size_t p) const {
    if (p > cores_.size()) throw InvalidArgument("rank index out of range");
    if (p == cores_.size()) return 1;
    return static_cast<std::size_t>(cores_[p][0].rows());
}

template <class T>
std::vector<std::size_t> TensorTrain<T>::ranks() const {
    std::vector<std::size_t> r(cores_.size() + 1);
    for (std::size_t p = 0; p <= cores_.size(); ++p) r[p] = rank(p);
    return r;
}

template <class T>
std::size_t TensorTrain<T>::max_rank() const {
    std::size_t m = 1;
    for (const auto& c : cores_) m = std::max<std::size_t>(m, c[0].rows());
    return m;
}

template <class T>
std::size_t TensorTrain<T>::storage() const {
    std::size_t s = 0;
    for (const auto& c : cores_) s += 2 * static_cast<std::size_t>(c[0].size());
    return s;
}

template <class T>
T TensorTrain<T>::element(std::uint64_t k) const {
    if (k >= size()) throw InvalidArgument("element index out of range");
    Eigen::Matrix<T, 1, Eigen::Dynamic> row = cores_[0][k & 1U];
    for (std::size_t p = 1; p < cores_.size(); ++p) row = row * cores_[p][(k >> p) & 1U];
    return row(0, 0);
}

// ---------------------------------------------------------------------------
// Dense conversions

template <class T>
std::vector<T> materialize(const TensorTrain<T>& a) {
    const std::size_t d = a.modes();
    if (d > kMaxMaterializeModes)
        throw InvalidArgument("materialize: 2^" + std::to_string(d) +
                              " entries exceed the dense length guard");
    // Rows of `acc` enumerate the bits seen so far (little-endian).
    Mat<T> acc = detail::left_unfold<T>(a.core(0));
    for (std::size_t p = 1; p < d; ++p) {
        const auto& c = a.core(p);
        Mat<T> next(2 * acc.rows(), c[0].cols());
        next.topRows(acc.rows()) = acc * c[0];
        next.bottomRows(acc.rows()) = acc * c[1];
        acc = std::move(next);
    }
    return std::vector<T>(acc.data(), acc.data() + acc.size());
}

template <class T>
TensorTrain<T> quantize(std::span<const T> v, const Tolerance& tol) {
    tol.validate();
    const std::size_t d = detail::mode_count_for_length(v.size());
    using Core = typename TensorTrain<T>::Core;
    std::vector<Core> cores(d);
    const double thr = d > 1 ? tol.rel_eps / std::sqrt(static_cast<double>(d - 1)) : 0.0;

    // Remainder: r x (remaining length), column index = bits p..d-1.
    Mat<T> rem = Eigen::Map<const Mat<T>>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t p = 0; p + 1 < d; ++p) {
        const auto r = rem.rows();
        const auto cols = rem.cols() / 2;
        Eigen::Map<const Mat<T>> unfolding(rem.data(), 2 * r, cols);
        auto lr = detail::truncated_svd<T>(Mat<T>(unfolding), thr, tol.max_rank, p + 1);
        // Rows of the unfolding are (alpha, k_p) with alpha fastest: split into slices.
        cores[p] = Core{lr.U.topRows(r), lr.U.bottomRows(r)};
        rem = lr.s.template cast<T>().asDiagonal() * lr.V.adjoint();
    }
    cores[d - 1] = Core{Mat<T>(rem.col(0)), Mat<T>(rem.col(1))};
    return TensorTrain<T>(std::move(cores));
}

// ---------------------------------------------------------------------------
// Orthogonalization and rounding

namespace {

/// Right-orthogonalize cores 1..d-1 in place (core 0 absorbs the factors).
template <class T>
void orthogonalize_right_inplace(std::vector<typename TensorTrain<T>::Core>& cores) {
    for (std::size_t p = cores.size() - 1; p > 0; --p) {
        Mat<T> m = detail::right_unfold<T>(cores[p]);
        // m = R^H Q^H with Q from the QR of m^H.
        auto [q, r] = detail::thin_qr<T>(Mat<T>(m.adjoint()));
        cores[p] = detail::from_right_unfold<T>(Mat<T>(q.adjoint()));
        const Mat<T> rh = r.adjoint();
        cores[p - 1][0] = cores[p - 1][0] * rh;
        cores[p - 1][1] = cores[p - 1][1] * rh;
    }
}

}  // namespace

template <class T>
TensorTrain<T> orthogonalize_left(const TensorTrain<T>& a) {
    auto cores = a.cores();
    for (std::size_t p = 0; p + 1 < cores.size(); ++p) {
        auto [q, r] = detail::thin_qr<T>(detail::left_unfold<T>(cores[p]));
        cores[p] = detail::from_left_unfold<T>(q);
        cores[p + 1][0] = r * cores[p + 1][0];
        cores[p + 1][1] = r * cores[p + 1][1];
    }
    return TensorTrain<T>(std::move(cores));
}

template <class T>
TensorTrain<T> round(const TensorTrain<T>& a, const Tolerance& tol) {
    tol.validate();
    ++g_round_calls;
    const std::size_t d = a.modes();
    auto cores = a.cores();
    if (d == 1) return TensorTrain<T>(std::move(cores));
    orthogonalize_right_inplace<T>(cores);
    const double thr = tol.rel_eps / std::sqrt(static_cast<double>(d - 1));
    for (std::size_t p = 0; p + 1 < d; ++p) {
        auto lr = detail::truncated_svd<T>(detail::left_unfold<T>(cores[p]), thr, tol.max_rank,
                                           p + 1);
        cores[p] = detail::from_left_unfold<T>(lr.U);
        const Mat<T> sv = lr.s.template cast<T>().asDiagonal() * lr.V.adjoint();
        cores[p + 1][0] = sv * cores[p + 1][0];
        cores[p + 1][1] = sv * cores[p + 1][1];
    }
    return TensorTrain<T>(std::move(cores));
}

// ---------------------------------------------------------------------------
// Algebra

template <class T>
TensorTrain<T> add(const TensorTrain<T>& a, const TensorTrain<T>& b) {
    return axpy(a, T(1), b);
}

template <class T>
TensorTrain<T> axpy(const TensorTrain<T>& a, T c, const TensorTrain<T>& b) {
    detail::check_same_modes(a.modes(), b.modes(), "add");
    const std::size_t d = a.modes();
    using Core = typename TensorTrain<T>::Core;
    std::vector<Core> cores(d);
    if (d == 1) {
        for (int k = 0; k < 2; ++k) cores[0][k] = a.core(0)[k] + c * b.core(0)[k];
        return TensorTrain<T>(std::move(cores));
    }
    for (std::size_t p = 0; p < d; ++p) {
        const auto& ca = a.core(p);
        const auto& cb = b.core(p);
        const auto ra0 = ca[0].rows(), ra1 = ca[0].cols();
        const auto rb0 = cb[0].rows(), rb1 = cb[0].cols();
        for (int k = 0; k < 2; ++k) {
            if (p == 0) {
                Mat<T> m(1, ra1 + rb1);
                m << ca[k], c * cb[k];
                cores[p][k] = std::move(m);
            } else if (p + 1 == d) {
                Mat<T> m(ra0 + rb0, 1);
                m << ca[k], cb[k];
                cores[p][k] = std::move(m);
            } else {
                Mat<T> m = Mat<T>::Zero(ra0 + rb0, ra1 + rb1);
                m.topLeftCorner(ra0, ra1) = ca[k];
                m.bottomRightCorner(rb0, rb1) = cb[k];
                cores[p][k] = std::move(m);
            }
        }
    }
    return TensorTrain<T>(std::move(cores));
}

template <class T>
TensorTrain<T> scale(const TensorTrain<T>& a, T c) {
    auto cores = a.cores();
    // The last core is where round() leaves the norm.
    cores.back()[0] *= c;
    cores.back()[1] *= c;
    return TensorTrain<T>(std::move(cores));
}

namespace {
template <class T>
Mat<T> kron(const Mat<T>& x, const Mat<T>& y) {
    Mat<T> out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
}
}  // namespace

template <class T>
TensorTrain<T> hadamard(const TensorTrain<T>& a, const TensorTrain<T>& b) {
    detail::check_same_modes(a.modes(), b.modes(), "hadamard");
    using Core = typename TensorTrain<T>::Core;
    std::vector<Core> cores(a.modes());
    for (std::size_t p = 0; p < a.modes(); ++p)
        for (int k = 0; k < 2; ++k) cores[p][k] = kron<T>(a.core(p)[k], b.core(p)[k]);
    return TensorTrain<T>(std::move(cores));
}

template <class T>
T dot(const TensorTrain<T>& a, const TensorTrain<T>& b) {
    detail::check_same_modes(a.modes(), b.modes(), "dot");
    Mat<T> acc = Mat<T>::Ones(1, 1);
    for (std::size_t p = 0; p < a.modes(); ++p) {
        const auto& ca = a.core(p);
        const auto& cb = b.core(p);
        acc = ca[0].adjoint() * acc * cb[0] + ca[1].adjoint() * acc * cb[1];
    }
    return acc(0, 0);
}

template <class T>
double norm(const TensorTrain<T>& a) {
    const auto o = orthogonalize_left(a);
    const auto& last = o.core(o.modes() - 1);
    return std::sqrt(last[0].squaredNorm() + last[1].squaredNorm());
}

template <class T>
TensorTrain<T> scale_geometric_log(const TensorTrain<T>& a, double log_eps) {
    auto cores = a.cores();
    for (std::size_t p = 0; p < cores.size(); ++p)
        cores[p][1] *= T(std::exp(std::ldexp(log_eps, static_cast<int>(p))));
    return TensorTrain<T>(std::move(cores));
}

template <class T>
TensorTrain<T> scale_geometric(const TensorTrain<T>& a, double eps) {
    if (eps == 0.0 || !std::isfinite(eps))
        throw InvalidArgument("scale_geometric: ratio must be finite and nonzero");
    if (eps > 0.0) return scale_geometric_log(a, std::log(eps));
    // Negative ratio: only bit 0 carries the sign, higher powers 2^p are even.
    auto out = scale_geometric_log(a, std::log(-eps));
    auto cores = std::move(out).release();
    cores[0][1] *= T(-1);
    return TensorTrain<T>(std::move(cores));
}

TTVectorC to_complex(const TTVector& a) {
    std::vector<TTVectorC::Core> cores(a.modes());
    for (std::size_t p = 0; p < a.modes(); ++p)
        for (int k = 0; k < 2; ++k) cores[p][k] = a.core(p)[k].cast<Complex>();
    return TTVectorC(std::move(cores));
}

TTVectorC conjugate(const TTVectorC& a) {
    auto cores = a.cores();
    for (auto& c : cores)
        for (auto& s : c) s = s.conjugate();
    return TTVectorC(std::move(cores));
}

TTVector real_part(const TTVectorC& a) {
    // Complex matrices embed as [[P, -Q], [Q, P]]; the real part of the
    // scalar product is the (0, 0) entry of the embedded product.
    const std::size_t d = a.modes();
    std::vector<TTVector::Core> cores(d);
    if (d == 1) {
        for (int k = 0; k < 2; ++k) cores[0][k] = a.core(0)[k].real();
        return TTVector(std::move(cores));
    }
    for (std::size_t p = 0; p < d; ++p) {
        for (int k = 0; k < 2; ++k) {
            const Eigen::MatrixXd re = a.core(p)[k].real();
            const Eigen::MatrixXd im = a.core(p)[k].imag();
            if (p == 0) {
                Eigen::MatrixXd m(1, 2 * re.cols());
                m << re, -im;
                cores[p][k] = std::move(m);
            } else if (p + 1 == d) {
                Eigen::MatrixXd m(2 * re.rows(), 1);
                m << re, im;
                cores[p][k] = std::move(m);
            } else {
                Eigen::MatrixXd m(2 * re.rows(), 2 * re.cols());
                m << re, -im, im, re;
                cores[p][k] = std::move(m);
            }
        }
    }
    return TTVector(std::move(cores));
}

// ---------------------------------------------------------------------------
// Explicit instantiations

#define QTTV_INSTANTIATE(T)                                                                   \
    template class TensorTrain<T>;                                                            \
    template std::vector<T> materialize(const TensorTrain<T>&);                               \
    template TensorTrain<T> quantize(std::span<const T>, const Tolerance&);                   \
    template TensorTrain<T> round(const TensorTrain<T>&, const Tolerance&);                   \
    template TensorTrain<T> orthogonalize_left(const TensorTrain<T>&);                        \
    template TensorTrain<T> add(const TensorTrain<T>&, const TensorTrain<T>&);                \
    template TensorTrain<T> axpy(const TensorTrain<T>&, T, const TensorTrain<T>&);            \
    template TensorTrain<T> scale(const TensorTrain<T>&, T);                                  \
    template TensorTrain<T> hadamard(const TensorTrain<T>&, const TensorTrain<T>&);           \
    template T dot(const TensorTrain<T>&, const TensorTrain<T>&);                             \
    template double norm(const TensorTrain<T>&);                                              \
    template TensorTrain<T> scale_geometric(const TensorTrain<T>&, double);                   \
    template TensorTrain<T> scale_geometric_log(const TensorTrain<T>&, double);

QTTV_INSTANTIATE(double)
QTTV_INSTANTIATE(Complex)

#undef QTTV_INSTANTIATE

}  // namespace qttv
