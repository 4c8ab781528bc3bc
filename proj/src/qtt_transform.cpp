#include "qttv/qtt_transform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

#include <fftw3.h>

#include "linalg.hpp"
#include "qttv/qtt_ops.hpp"

namespace qttv {

using detail::Mat;

// ---------------------------------------------------------------------------
// Dense FFT

namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
};

using PlanHandle = std::shared_ptr<fftw_plan_s>;

/// Unaligned in-place plans, executed through the new-array interface so one
/// plan serves every buffer.
PlanHandle cached_plan(std::size_t n, int sign) {
    static std::map<std::pair<std::size_t, int>, PlanHandle> cache;
    static std::mutex cache_mutex;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[{n, sign}];
    if (!slot) {
        std::lock_guard planner(PlanDeleter::planner_mutex());
        std::vector<Complex> buf(n);
        auto* io = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), io, io, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw NumericalError("FFTW could not create a plan of size " + std::to_string(n));
        slot = PlanHandle(p, PlanDeleter{});
    }
    return slot;
}

/// Unnormalized in-place DFT of any length.
void raw_dft(const PlanHandle& plan, Complex* data) {
    auto* io = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan.get(), io, io);
}

/// Real-input transform of length n (n/2 + 1 outputs) and its inverse.
/// The inverse overwrites its complex input.
struct RealPlans {
    PlanHandle forward, backward;
};

RealPlans cached_real_plans(std::size_t n) {
    static std::map<std::size_t, RealPlans> cache;
    static std::mutex cache_mutex;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[n];
    if (!slot.forward) {
        std::lock_guard planner(PlanDeleter::planner_mutex());
        std::vector<double> x(n);
        std::vector<Complex> c(n / 2 + 1);
        auto* cx = reinterpret_cast<fftw_complex*>(c.data());
        const auto flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan f = fftw_plan_dft_r2c_1d(static_cast<int>(n), x.data(), cx, flags);
        fftw_plan b = fftw_plan_dft_c2r_1d(static_cast<int>(n), cx, x.data(), flags);
        if (!f || !b) throw NumericalError("FFTW could not create a real plan of size " + std::to_string(n));
        slot = {PlanHandle(f, PlanDeleter{}), PlanHandle(b, PlanDeleter{})};
    }
    return slot;
}

}  // namespace

struct FftPlan::Impl {
    PlanHandle plan;
    double scale;
};

FftPlan::FftPlan(std::size_t size, FftDirection direction) : size_(size), direction_(direction) {
    if (size == 0 || !std::has_single_bit(size))
        throw InvalidArgument("FFT size " + std::to_string(size) + " is not a power of two");
    auto impl = std::make_shared<Impl>();
    impl->plan = cached_plan(size, direction == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD);
    impl->scale = 1.0 / std::sqrt(static_cast<double>(size));
    impl_ = std::move(impl);
}

void FftPlan::execute(std::span<const Complex> in, std::span<Complex> out) const {
    if (in.size() != size_ || out.size() != size_)
        throw InvalidArgument("FFT buffer length does not match the plan size");
    if (out.data() != in.data()) std::copy(in.begin(), in.end(), out.begin());
    raw_dft(impl_->plan, out.data());
    for (auto& v : out) v *= impl_->scale;
}

std::vector<Complex> FftPlan::operator()(std::span<const Complex> in) const {
    std::vector<Complex> out(in.size());
    execute(in, out);
    return out;
}

std::vector<Complex> fft_dense(std::span<const Complex> v, FftDirection direction) {
    return FftPlan(v.size(), direction)(v);
}

std::vector<double> toeplitz_matvec_dense(std::span<const double> first_col,
                                          std::span<const double> first_row_tail,
                                          std::span<const double> x) {
    const std::size_t n = first_col.size();
    if (n == 0) throw InvalidArgument("toeplitz_matvec_dense: empty matrix");
    if (x.size() != n || first_row_tail.size() + 1 != n)
        throw InvalidArgument("toeplitz_matvec_dense: length mismatch");
    const std::size_t m = 2 * n;
    // Circulant generator [col, 0, reversed row tail].
    std::vector<double> c(m, 0.0), xv(m, 0.0);
    std::copy(first_col.begin(), first_col.end(), c.begin());
    for (std::size_t j = 1; j < n; ++j) c[m - j] = first_row_tail[j - 1];
    std::copy(x.begin(), x.end(), xv.begin());
    const auto plans = cached_real_plans(m);
    std::vector<Complex> fc(m / 2 + 1), fx(m / 2 + 1);
    fftw_execute_dft_r2c(plans.forward.get(), c.data(), reinterpret_cast<fftw_complex*>(fc.data()));
    fftw_execute_dft_r2c(plans.forward.get(), xv.data(), reinterpret_cast<fftw_complex*>(fx.data()));
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < fc.size(); ++j) fc[j] *= fx[j] * inv;
    fftw_execute_dft_c2r(plans.backward.get(), reinterpret_cast<fftw_complex*>(fc.data()), c.data());
    c.resize(n);
    return c;
}

std::vector<double> causal_convolve_dense(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("causal_convolve_dense: length mismatch");
    const std::vector<double> zeros(a.empty() ? 0 : a.size() - 1, 0.0);
    return toeplitz_matvec_dense(a, zeros, b);
}

// ---------------------------------------------------------------------------
// QTT FFT

namespace {

using CoreC = TTVectorC::Core;

double round_work(const TTVectorC& a) {
    double w = 0.0;
    for (std::size_t p = 0; p < a.modes(); ++p)
        w += static_cast<double>(a.rank(p)) * static_cast<double>(a.rank(p)) *
             static_cast<double>(a.rank(p + 1));
    return w;
}

}  // namespace

TTVectorC qtt_fft(const TTVectorC& a, FftDirection direction, const Tolerance& tol,
                  QttFftStats* stats) {
    tol.validate();
    const std::size_t d = a.modes();
    const double sign = direction == FftDirection::forward ? -1.0 : 1.0;
    const Tolerance stage_tol = tol.scaled(1.0 / static_cast<double>(d));
    const Complex half_norm(1.0 / std::numbers::sqrt2, 0.0);
    if (stats) *stats = {};

    std::vector<CoreC> cores = a.cores();
    // Stage p combines input digit k_p with the already transformed digits
    // above it, which now hold output digits j_0..j_{L-2} of a length-2^{L-1} DFT.
    for (std::size_t p = d; p-- > 0;) {
        const std::size_t L = d - p;
        const CoreC x = cores[p];
        std::vector<CoreC> fresh(L);
        if (L == 1) {
            fresh[0][0] = (x[0] + x[1]) * half_norm;
            fresh[0][1] = (x[0] - x[1]) * half_norm;
        } else {
            const double base = sign * 2.0 * std::numbers::pi / std::ldexp(1.0, static_cast<int>(L));
            for (std::size_t q = 0; q + 1 < L; ++q) {
                const CoreC& g = cores[p + 1 + q];
                for (int j = 0; j < 2; ++j) {
                    const Complex tw = std::polar(1.0, base * j * std::ldexp(1.0, static_cast<int>(q)));
                    const auto gr = g[j].rows(), gc = g[j].cols();
                    if (q == 0) {
                        Mat<Complex> m(x[0].rows(), 2 * gc);
                        m.leftCols(gc) = x[0] * g[j];
                        m.rightCols(gc) = tw * (x[1] * g[j]);
                        fresh[q][j] = std::move(m);
                    } else {
                        Mat<Complex> m = Mat<Complex>::Zero(2 * gr, 2 * gc);
                        m.topLeftCorner(gr, gc) = g[j];
                        m.bottomRightCorner(gr, gc) = tw * g[j];
                        fresh[q][j] = std::move(m);
                    }
                }
            }
            fresh[L - 1][0] = Mat<Complex>{{half_norm}, {half_norm}};
            fresh[L - 1][1] = Mat<Complex>{{half_norm}, {-half_norm}};
        }
        cores.resize(p);
        for (auto& c : fresh) cores.push_back(std::move(c));
        TTVectorC stage(std::move(cores));
        const std::size_t stage_index = d - 1 - p;
        try {
            if (d > 1) stage = round(stage, stage_tol);
        } catch (const RankLimitExceeded& e) {
            throw e.within("qtt_fft stage " + std::to_string(stage_index));
        }
        if (stats) {
            stats->stage_max_rank.push_back(stage.max_rank());
            stats->core_ops += round_work(stage);
        }
        cores = std::move(stage).release();
    }
    return TTVectorC(std::move(cores));
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

template <class T>
Mat<T> kron(const Mat<T>& x, const Mat<T>& y) {
    Mat<T> out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
}

/// Binary adder: output digit i_p collects every (k_p, j_p, carry-in) with
/// k_p + j_p + c = i_p + 2 c'. The state is (carry, alpha_a, alpha_b); the
/// first core only admits carry-in 0 and the last only carry-out 0, which
/// truncates the sum to 2^d entries.
template <class T>
TensorTrain<T> kazev_product(const TensorTrain<T>& a, const TensorTrain<T>& b) {
    const std::size_t d = a.modes();
    std::vector<typename TensorTrain<T>::Core> cores(d);
    for (std::size_t p = 0; p < d; ++p) {
        const auto& ca = a.core(p);
        const auto& cb = b.core(p);
        const auto in = ca[0].rows() * cb[0].rows();
        const auto out = ca[0].cols() * cb[0].cols();
        const int carries_in = p == 0 ? 1 : 2;
        const int carries_out = p + 1 == d ? 1 : 2;
        for (int i = 0; i < 2; ++i)
            cores[p][i] = Mat<T>::Zero(carries_in * in, carries_out * out);
        for (int c = 0; c < carries_in; ++c)
            for (int k = 0; k < 2; ++k)
                for (int j = 0; j < 2; ++j) {
                    const int s = k + j + c;
                    const int i = s & 1, cout = s >> 1;
                    if (cout >= carries_out) continue;
                    cores[p][i].block(c * in, cout * out, in, out) += kron<T>(ca[k], cb[j]);
                }
    }
    return TensorTrain<T>(std::move(cores));
}

TTVectorC fourier_convolve(const TTVectorC& a, const TTVectorC& b, const Tolerance& tol) {
    const std::size_t d = a.modes();
    const auto pad = [d](const TTVectorC& v) { return interleave_concat(v, TTVectorC::zeros(d)); };
    const TTVectorC fa = qtt_fft(pad(a), FftDirection::forward, tol);
    const TTVectorC fb = qtt_fft(pad(b), FftDirection::forward, tol);
    // Circular convolution of length 2n is sqrt(2n) F^* (F a o F b) for unitary F.
    const TTVectorC prod = round(hadamard(fa, fb), tol);
    const TTVectorC back = qtt_fft(prod, FftDirection::inverse, tol);
    const double factor = std::sqrt(std::ldexp(1.0, static_cast<int>(d + 1)));
    return scale(leading_block(back, d), Complex(factor, 0.0));
}

}  // namespace

template <class T>
TensorTrain<T> qtt_convolve(const TensorTrain<T>& a, const TensorTrain<T>& b,
                            const Tolerance& tol, ConvolutionMethod method,
                            ConvolutionStats* stats) {
    tol.validate();
    detail::check_same_modes(a.modes(), b.modes(), "qtt_convolve");
    if (method == ConvolutionMethod::kazev) {
        auto raw = kazev_product(a, b);
        if (stats) stats->pre_round_ranks = raw.ranks();
        try {
            return round(raw, tol);
        } catch (const RankLimitExceeded& e) {
            throw e.within("qtt_convolve");
        }
    }
    if (stats) stats->pre_round_ranks.clear();
    try {
        if constexpr (is_complex_v<T>) {
            return round(fourier_convolve(a, b, tol), tol);
        } else {
            return round(real_part(fourier_convolve(to_complex(a), to_complex(b), tol)), tol);
        }
    } catch (const RankLimitExceeded& e) {
        throw e.within("qtt_convolve (fourier)");
    }
}

template TTVector qtt_convolve(const TTVector&, const TTVector&, const Tolerance&,
                               ConvolutionMethod, ConvolutionStats*);
template TTVectorC qtt_convolve(const TTVectorC&, const TTVectorC&, const Tolerance&,
                                ConvolutionMethod, ConvolutionStats*);

// ---------------------------------------------------------------------------
// Newton reciprocal

TTVectorC qtt_reciprocal(const TTVectorC& lambda, const Tolerance& tol,
                         const ReciprocalOptions& opts, ReciprocalStats* stats) {
    tol.validate();
    const std::size_t d = lambda.modes();
    const double n = std::ldexp(1.0, static_cast<int>(d));
    const double target = opts.target_residual > 0.0 ? opts.target_residual : 10.0 * tol.rel_eps;
    const double floor_factor = 1e3 * std::numeric_limits<double>::epsilon();

    // Magnitude range: exact for moderate d, sampled otherwise.
    double max_abs = 0.0, min_abs = INFINITY;
    if (d <= 16) {
        for (const auto& v : materialize(lambda)) {
            max_abs = std::max(max_abs, std::abs(v));
            min_abs = std::min(min_abs, std::abs(v));
        }
    } else {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<std::uint64_t> pick(0, lambda.size() - 1);
        for (std::size_t i = 0; i <= opts.probe_samples; ++i) {
            const double v = std::abs(lambda.element(i == 0 ? 0 : pick(rng)));
            max_abs = std::max(max_abs, v);
            min_abs = std::min(min_abs, v);
        }
    }
    if (!(max_abs > 0.0) || !std::isfinite(max_abs))
        throw SingularOperator("qtt_reciprocal: vector is zero or not finite");
    if (min_abs < floor_factor * max_abs)
        throw SingularOperator("qtt_reciprocal: entry magnitude " + std::to_string(min_abs) +
                               " below the floor 1e3*eps*max|lambda|");

    const TTVectorC ones = TTVectorC::ones(d);
    const TTVectorC twos = TTVectorC::constant(d, Complex(2.0, 0.0));
    const auto residual_of = [&](const TTVectorC& t) {
        return norm(axpy(t, Complex(-1.0, 0.0), ones)) / std::sqrt(n);
    };

    ReciprocalStats local;
    ReciprocalStats& st = stats ? *stats : local;
    st = {};
    double mu = 1.0 / (max_abs * max_abs);
    const TTVectorC lambda_conj = conjugate(lambda);
    double last = INFINITY;
    try {
        for (std::size_t restart = 0; restart <= 8; ++restart) {
            st.restarts = restart;
            TTVectorC x = scale(lambda_conj, Complex(mu, 0.0));
            double first = INFINITY, prev = INFINITY;
            bool diverged = false;
            for (std::size_t it = 0;; ++it) {
                const TTVectorC t = round(hadamard(lambda, x), tol);
                const double res = residual_of(t);
                st.residuals.push_back(res);
                st.iterations = it;
                last = res;
                if (res <= target) return x;
                if (it == 0) first = res;
                if (!std::isfinite(res) || res > 2.0 * first + 1.0) {
                    diverged = true;
                    break;
                }
                // Rounding floor: no progress once the error is already small.
                if (prev < 0.5 && res >= 0.9 * prev) break;
                if (it >= opts.max_iters) break;
                prev = res;
                x = round(hadamard(x, axpy(twos, Complex(-1.0, 0.0), t)), tol);
            }
            if (!diverged) break;
            mu /= 4.0;
        }
    } catch (const RankLimitExceeded& e) {
        throw e.within("qtt_reciprocal");
    }
    throw ConvergenceError("qtt_reciprocal: residual " + std::to_string(last) +
                               " above target " + std::to_string(target),
                           st.iterations, last);
}

}  // namespace qttv
