#include "qttv/toeplitz_inv.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "linalg.hpp"
#include "qttv/qtt_ops.hpp"

namespace qttv {

namespace {

constexpr double kMachEps = std::numeric_limits<double>::epsilon();
constexpr double kBiniAmplificationMargin = 100.0;
constexpr double kBiniMinInternalTol = 1e-14;

std::size_t log2_length(std::size_t n, const char* op) {
    if (n == 0 || !std::has_single_bit(n))
        throw InvalidArgument(std::string(op) + ": generator length " + std::to_string(n) +
                              " is not a power of two");
    return static_cast<std::size_t>(std::countr_zero(n));
}

double l1_norm(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0,
                           [](double s, double x) { return s + std::abs(x); });
}

/// ||a||_1 ||b||_1 when both are cheap to get densely, 0 otherwise.
double condition_estimate(const TTVector& a, const TTVector& b) {
    if (a.modes() > 20) return 0.0;
    return l1_norm(materialize(a)) * l1_norm(materialize(b));
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

TTVector rounded(const TTVector& a, const Tolerance& tol, const std::string& where) {
    try {
        return round(a, tol);
    } catch (const RankLimitExceeded& e) {
        throw e.within(where);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ToeplitzOperator

ToeplitzOperator::ToeplitzOperator(std::vector<double> first_col)
    : col_(std::move(first_col)), d_(0) {
    d_ = log2_length(dense().size(), "ToeplitzOperator");
}

ToeplitzOperator::ToeplitzOperator(TTVector first_col) : col_(std::move(first_col)), d_(0) {
    d_ = qtt().modes();
}

double ToeplitzOperator::entry(std::uint64_t k) const {
    if (k >= size()) throw InvalidArgument("ToeplitzOperator::entry: index out of range");
    return is_qtt() ? qtt().element(k) : dense()[k];
}

std::vector<double> ToeplitzOperator::to_dense() const {
    return is_qtt() ? materialize(qtt()) : dense();
}

TTVector ToeplitzOperator::to_qtt(const Tolerance& tol) const {
    return is_qtt() ? qtt() : quantize<double>(dense(), tol);
}

// ---------------------------------------------------------------------------
// Configuration

namespace {
constexpr std::pair<InversionMethod, std::string_view> kMethodNames[] = {
    {InversionMethod::recurrence, "recurrence"},
    {InversionMethod::dense_dc, "dense_dc"},
    {InversionMethod::dense_bini, "dense_bini"},
    {InversionMethod::dense_bini_modified, "dense_bini_modified"},
    {InversionMethod::qtt_dc_conv, "qtt_dc_conv"},
    {InversionMethod::qtt_dc_fft, "qtt_dc_fft"},
    {InversionMethod::qtt_bini, "qtt_bini"},
};
}  // namespace

std::string_view to_string(InversionMethod m) {
    for (const auto& [method, name] : kMethodNames)
        if (method == m) return name;
    return "unknown";
}

InversionMethod parse_inversion_method(std::string_view name) {
    for (const auto& [method, n] : kMethodNames)
        if (n == name) return method;
    throw InvalidArgument("unknown inversion method '" + std::string(name) + "'");
}

bool is_qtt_method(InversionMethod m) {
    return m == InversionMethod::qtt_dc_conv || m == InversionMethod::qtt_dc_fft ||
           m == InversionMethod::qtt_bini;
}

double InversionConfig::eps_pow() const {
    if (bini_eps_pow) return *bini_eps_pow;
    return method == InversionMethod::dense_bini ? kDefaultBiniEpsPow : kDefaultModifiedBiniEpsPow;
}

void InversionConfig::validate() const {
    tol.validate();
    if (d0 < 1) throw InvalidArgument("InversionConfig: d0 must be >= 1");
    const double e = eps_pow();
    if (!(e > 0.0 && e < 1.0)) throw InvalidArgument("InversionConfig: bini_eps_pow must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// Dense algorithms

void check_invertible(std::span<const double> a) {
    if (a.empty()) throw InvalidArgument("empty Toeplitz generator");
    double amax = 0.0;
    for (double x : a) {
        if (!std::isfinite(x)) throw InvalidArgument("Toeplitz generator has non-finite entries");
        amax = std::max(amax, std::abs(x));
    }
    if (std::abs(a[0]) < 1e3 * kMachEps * amax || a[0] == 0.0)
        throw SingularOperator("Toeplitz generator: |a(0)| = " + std::to_string(std::abs(a[0])) +
                               " is below the singularity floor");
}

void check_invertible(const TTVector& a) {
    const double a0 = a.element(0);
    const double scale = norm(a);
    if (!std::isfinite(scale)) throw InvalidArgument("Toeplitz generator has non-finite entries");
    if (std::abs(a0) < 1e3 * kMachEps * scale || a0 == 0.0)
        throw SingularOperator("Toeplitz generator: |a(0)| = " + std::to_string(std::abs(a0)) +
                               " is below the singularity floor");
}

std::vector<double> invert_recurrence(std::span<const double> a) {
    check_invertible(a);
    const std::size_t n = a.size();
    std::vector<double> b(n, 0.0);
    b[0] = 1.0 / a[0];
    for (std::size_t j = 1; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 1; k <= j; ++k) s += a[k] * b[j - k];
        b[j] = -s / a[0];
    }
    return b;
}

std::vector<double> invert_dense_dc(std::span<const double> a, std::size_t d0) {
    const std::size_t d = log2_length(a.size(), "invert_dense_dc");
    if (d0 < 1) throw InvalidArgument("invert_dense_dc: d0 must be >= 1");
    check_invertible(a);
    if (d <= d0) return invert_recurrence(a);

    auto b = invert_recurrence(a.first(std::size_t{1} << d0));
    b.reserve(a.size());
    std::vector<double> row_tail;
    for (std::size_t t = d0; t < d; ++t) {
        const std::size_t m = std::size_t{1} << t;
        row_tail.resize(m - 1);
        for (std::size_t j = 0; j + 1 < m; ++j) row_tail[j] = a[m - 1 - j];
        const auto cb = toeplitz_matvec_dense(a.subspan(m, m), row_tail, b);
        auto g = causal_convolve_dense(b, cb);
        for (double x : g) b.push_back(-x);
    }
    return b;
}

std::vector<double> invert_dense_bini(std::span<const double> a, double eps_pow, bool modified) {
    log2_length(a.size(), "invert_dense_bini");
    if (!(eps_pow > 0.0 && eps_pow < 1.0))
        throw InvalidArgument("invert_dense_bini: eps_pow must lie in (0, 1)");
    check_invertible(a);
    const std::size_t n = a.size();
    const std::size_t m = modified ? 2 * n : n;
    const double log_eps = std::log(eps_pow) / static_cast<double>(n);
    const double root_m = std::sqrt(static_cast<double>(m));

    std::vector<Complex> v(m, 0.0);
    for (std::size_t j = 0; j < n; ++j) v[j] = a[j] * std::exp(log_eps * static_cast<double>(j));
    FftPlan(m, FftDirection::forward).execute(v, v);
    double vmax = 0.0;
    for (auto& x : v) {
        x *= root_m;
        vmax = std::max(vmax, std::abs(x));
    }
    for (auto& x : v) {
        if (std::abs(x) < 1e3 * kMachEps * vmax)
            throw SingularOperator("invert_dense_bini: vanishing circulant eigenvalue");
        x = 1.0 / x;
    }
    FftPlan(m, FftDirection::inverse).execute(v, v);
    std::vector<double> b(n);
    for (std::size_t j = 0; j < n; ++j)
        b[j] = v[j].real() / root_m * std::exp(-log_eps * static_cast<double>(j));
    return b;
}

std::vector<double> newton_refine(std::span<const double> a, std::span<const double> b0,
                                  std::size_t steps, NewtonStats* stats) {
    if (a.size() != b0.size()) throw InvalidArgument("newton_refine: length mismatch");
    log2_length(a.size(), "newton_refine");
    std::vector<double> b(b0.begin(), b0.end());

    auto residual = [&](std::vector<double>& r) {
        r = causal_convolve_dense(a, b);
        for (auto& x : r) x = -x;
        r[0] += 1.0;
        return l1_norm(r);
    };
    std::vector<double> r;
    double res = residual(r);
    if (stats) stats->residuals = {res};
    if (!(res < 1.0))
        throw ConvergenceError("newton_refine: initial residual " + std::to_string(res) +
                                   " is not below 1",
                               0, res);
    for (std::size_t k = 1; k <= steps; ++k) {
        const auto corr = causal_convolve_dense(b, r);
        for (std::size_t j = 0; j < b.size(); ++j) b[j] += corr[j];
        const double prev = res;
        res = residual(r);
        if (stats) stats->residuals.push_back(res);
        const double floor = 1e3 * kMachEps * l1_norm(a) * l1_norm(b);
        if (!std::isfinite(res) || (res > prev && res > floor))
            throw ConvergenceError("newton_refine: residual increased at step " + std::to_string(k),
                                   k, res);
    }
    return b;
}

TTVector newton_refine(const TTVector& a, const TTVector& b0, std::size_t steps,
                       const Tolerance& tol, ConvolutionMethod method, NewtonStats* stats) {
    detail::check_same_modes(a.modes(), b0.modes(), "newton_refine");
    const auto e0 = TTVector::unit(a.modes(), 0);
    const double na = norm(a);
    TTVector b = b0;

    auto residual = [&] {
        return rounded(axpy(e0, -1.0, qtt_convolve(a, b, tol, method)), tol, "newton_refine");
    };
    TTVector r = residual();
    double res = norm(r);
    if (stats) stats->residuals = {res};
    if (!(res < 1.0))
        throw ConvergenceError("newton_refine: initial residual " + std::to_string(res) +
                                   " is not below 1",
                               0, res, b.ranks());
    for (std::size_t k = 1; k <= steps; ++k) {
        try {
            b = rounded(add(b, qtt_convolve(b, r, tol, method)), tol, "newton_refine");
        } catch (const RankLimitExceeded& e) {
            throw e.within("newton_refine step " + std::to_string(k));
        }
        const double prev = res;
        r = residual();
        res = norm(r);
        if (stats) stats->residuals.push_back(res);
        const double floor = 1e2 * std::max(tol.rel_eps, kMachEps) * na * norm(b);
        if (!std::isfinite(res) || (res > prev && res > floor))
            throw ConvergenceError("newton_refine: residual increased at step " + std::to_string(k),
                                   k, res, b.ranks());
    }
    return b;
}

// ---------------------------------------------------------------------------
// QTT algorithms

TTVector invert_qtt_dc(const TTVector& a, const InversionConfig& cfg, InversionTelemetry* telemetry) {
    cfg.validate();
    check_invertible(a);
    const Stopwatch clock;
    const auto rounds_before = round_call_count();
    const std::size_t d = a.modes();
    const std::size_t d0 = std::min(cfg.d0, d);
    const auto conv = cfg.method == InversionMethod::qtt_dc_fft ? ConvolutionMethod::fourier
                                                                : ConvolutionMethod::kazev;
    const Tolerance& tol = cfg.tol;
    std::size_t max_rank = 0;
    std::vector<std::size_t> level_rank;
    auto track = [&](const TTVector& v) -> const TTVector& {
        max_rank = std::max(max_rank, v.max_rank());
        return v;
    };

    // Base case by the recurrence on the leading 2^d0 block.
    const auto head = materialize(d0 == d ? a : leading_block(a, d0));
    TTVector b = [&] {
        try {
            return quantize<double>(invert_recurrence(head), tol);
        } catch (const RankLimitExceeded& e) {
            throw e.within("invert_qtt_dc base case");
        }
    }();
    level_rank.push_back(track(b).max_rank());

    for (std::size_t t = d0; t < d; ++t) {
        const std::string where = "invert_qtt_dc level " + std::to_string(t);
        try {
            // Generators of the off-diagonal block C_t.
            const TTVector lead = t + 1 == d ? a : leading_block(a, t + 1);
            const auto col = track(rounded(block_column(lead, t), tol, where));
            const auto row = track(rounded(block_row(lead, t), tol, where));

            // The new half is -B_t C_t B_t e_0. C_t is a full Toeplitz matrix, so its
            // product splits into a lower part (col) and a strictly upper part
            // R L' R with L' generated by [0, row(1), row(2), ...].
            const auto lower = track(qtt_convolve(col, b, tol, conv));
            const auto upper_gen = track(rounded(push(pull(row, 0.0), 0.0), tol, where));
            const auto upper = track(reverse(qtt_convolve(upper_gen, reverse(b), tol, conv)));
            const auto cb = track(rounded(add(lower, upper), tol, where));
            const auto g = track(qtt_convolve(b, cb, tol, conv));

            b = rounded(interleave_concat(b, scale(g, -1.0)), tol, where);
        } catch (const RankLimitExceeded& e) {
            throw e.within(where);
        }
        level_rank.push_back(track(b).max_rank());
    }

    if (telemetry) {
        telemetry->method = std::string(to_string(cfg.method));
        telemetry->seconds = clock.seconds();
        telemetry->max_rank = max_rank;
        telemetry->round_calls = round_call_count() - rounds_before;
        telemetry->level_max_rank = std::move(level_rank);
        telemetry->conditioning_estimate = condition_estimate(a, b);
    }
    return b;
}

TTVector invert_qtt_bini(const TTVector& a, const InversionConfig& cfg, InversionTelemetry* telemetry) {
    cfg.validate();
    check_invertible(a);
    const Stopwatch clock;
    const auto rounds_before = round_call_count();
    const std::size_t d = a.modes();
    const double eps_pow = cfg.eps_pow();
    const double log_eps = std::log(eps_pow) / std::ldexp(1.0, static_cast<int>(d));
    const double root_2n = std::sqrt(std::ldexp(1.0, static_cast<int>(d) + 1));
    // Undoing the scaling multiplies entry k by eps^{-k}, up to 1 / eps_pow:
    // the internal threshold absorbs that growth, capped at eps_pow / 10 for
    // loose targets.
    const double internal = std::clamp(cfg.tol.rel_eps * eps_pow * kBiniAmplificationMargin,
                                       kBiniMinInternalTol, eps_pow / 10.0);
    const Tolerance tol(std::min(internal, eps_pow / 10.0), cfg.tol.max_rank);
    std::size_t max_rank = 0;
    std::vector<std::size_t> stage_rank;
    auto track = [&](std::size_t r) {
        max_rank = std::max(max_rank, r);
        stage_rank.push_back(r);
    };

    // eps^k scaling and zero padding by a top core (1 - k_d).
    auto cores = scale_geometric_log(a, log_eps).cores();
    TTVector::Core pad;
    pad[0] = detail::Mat<double>::Ones(1, 1);
    pad[1] = detail::Mat<double>::Zero(1, 1);
    cores.push_back(std::move(pad));
    const TTVectorC scaled = to_complex(TTVector(std::move(cores)));

    // Circulant eigenvalues.
    const auto lambda = scale(qtt_fft(scaled, FftDirection::forward, tol), Complex(root_2n));
    track(lambda.max_rank());

    // Elementwise reciprocal.
    ReciprocalStats rstats;
    const auto inv = qtt_reciprocal(lambda, tol, {}, &rstats);
    track(inv.max_rank());

    // Back to the first column of the circulant inverse.
    const auto col = scale(qtt_fft(inv, FftDirection::inverse, tol), Complex(1.0 / root_2n));
    track(col.max_rank());

    // Leading block, undo the scaling.
    const auto b = rounded(real_part(scale_geometric_log(leading_block(col, d), -log_eps)), cfg.tol,
                           "invert_qtt_bini");
    track(b.max_rank());

    if (telemetry) {
        telemetry->method = std::string(to_string(cfg.method));
        telemetry->seconds = clock.seconds();
        telemetry->max_rank = max_rank;
        telemetry->round_calls = round_call_count() - rounds_before;
        telemetry->level_max_rank = std::move(stage_rank);
        telemetry->newton_iterations = rstats.iterations;
        telemetry->conditioning_estimate = condition_estimate(a, b);
    }
    return b;
}

// ---------------------------------------------------------------------------
// Dispatcher

std::vector<double> InversionResult::to_dense() const {
    if (const auto* v = std::get_if<std::vector<double>>(&inverse)) return *v;
    return materialize(std::get<TTVector>(inverse));
}

InversionResult invert(const ToeplitzOperator& op, const InversionConfig& cfg) {
    cfg.validate();
    InversionResult out;
    auto& tel = out.telemetry;
    if (is_qtt_method(cfg.method)) {
        const auto a = op.to_qtt(cfg.tol);
        TTVector b = cfg.method == InversionMethod::qtt_bini ? invert_qtt_bini(a, cfg, &tel)
                                                            : invert_qtt_dc(a, cfg, &tel);
        if (cfg.newton_refine_steps > 0) {
            const Stopwatch clock;
            const auto rounds_before = round_call_count();
            const auto conv = cfg.method == InversionMethod::qtt_dc_fft ? ConvolutionMethod::fourier
                                                                        : ConvolutionMethod::kazev;
            b = newton_refine(a, b, cfg.newton_refine_steps, cfg.tol, conv);
            tel.seconds += clock.seconds();
            tel.round_calls += round_call_count() - rounds_before;
            tel.max_rank = std::max(tel.max_rank, b.max_rank());
            tel.conditioning_estimate = condition_estimate(a, b);
        }
        out.inverse = std::move(b);
        return out;
    }

    const Stopwatch clock;
    const auto a = op.to_dense();
    std::vector<double> b;
    switch (cfg.method) {
        case InversionMethod::recurrence: b = invert_recurrence(a); break;
        case InversionMethod::dense_dc: b = invert_dense_dc(a, cfg.d0); break;
        case InversionMethod::dense_bini: b = invert_dense_bini(a, cfg.eps_pow(), false); break;
        case InversionMethod::dense_bini_modified: b = invert_dense_bini(a, cfg.eps_pow(), true); break;
        default: throw InvalidArgument("invert: unhandled method");
    }
    if (cfg.newton_refine_steps > 0) b = newton_refine(a, b, cfg.newton_refine_steps);
    tel.method = std::string(to_string(cfg.method));
    tel.seconds = clock.seconds();
    tel.conditioning_estimate = l1_norm(a) * l1_norm(b);
    out.inverse = std::move(b);
    return out;
}

// ---------------------------------------------------------------------------
// Decay profiles

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

LineFit fit_loglog(const DecayProfile& prof, double lo, double hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < prof.index.size(); ++i) {
        const double p = static_cast<double>(prof.index[i]);
        if (p < lo || p > hi || !(prof.magnitude[i] > 0.0)) continue;
        const double x = std::log(p), y = std::log(prof.magnitude[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    LineFit f;
    f.points = m;
    const double den = static_cast<double>(m) * sxx - sx * sx;
    if (m < 2 || den <= 0.0) return f;
    f.slope = (static_cast<double>(m) * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / static_cast<double>(m);
    return f;
}

template <class Get>
DecayProfile build_profile(std::uint64_t n, Get&& get, const DecayFitOptions& opts) {
    if (n < 2) throw InvalidArgument("decay_profile: need at least two entries");
    if (opts.sample_count < 2) throw InvalidArgument("decay_profile: sample_count must be >= 2");
    DecayProfile prof;
    const double a0 = std::abs(get(0)), a1 = std::abs(get(1));
    prof.diagonal_ratio = a1 > 0.0 ? a0 / a1 : std::numeric_limits<double>::infinity();

    const std::uint64_t lo = std::clamp<std::uint64_t>(opts.min_index, 1, n - 1);
    const double llo = std::log(static_cast<double>(lo)), lhi = std::log(static_cast<double>(n - 1));
    for (std::size_t i = 0; i < opts.sample_count; ++i) {
        const double x = llo + (lhi - llo) * static_cast<double>(i) /
                                   static_cast<double>(opts.sample_count - 1);
        const auto p = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(std::exp(x))),
                                                 lo, n - 1);
        if (!prof.index.empty() && prof.index.back() >= p) continue;
        prof.index.push_back(p);
        prof.magnitude.push_back(std::abs(get(p)));
    }

    const double plo = static_cast<double>(lo), phi = static_cast<double>(n - 1);
    const auto early = opts.early_window.value_or(std::pair{plo, 10.0 * plo});
    const auto late = opts.late_window.value_or(std::pair{phi / 10.0, phi});
    const auto fe = fit_loglog(prof, early.first, early.second);
    const auto fl = fit_loglog(prof, late.first, late.second);
    prof.early_slope = fe.slope;
    prof.late_slope = fl.slope;
    prof.two_slopes = fe.points >= 2 && fl.points >= 2 &&
                      std::abs(fe.slope - fl.slope) >= opts.min_slope_gap;
    if (prof.two_slopes)
        prof.bend_point = std::exp((fl.intercept - fe.intercept) / (fe.slope - fl.slope));
    return prof;
}

}  // namespace

DecayProfile decay_profile(std::span<const double> v, const DecayFitOptions& opts) {
    return build_profile(v.size(), [&](std::uint64_t k) { return v[k]; }, opts);
}

DecayProfile decay_profile(const TTVector& v, const DecayFitOptions& opts) {
    return build_profile(v.size(), [&](std::uint64_t k) { return v.element(k); }, opts);
}

}  // namespace qttv
