#include <doctest.h>

#include "qttv/qtt_transform.hpp"
#include "support.hpp"

using namespace qttv;
using testing::random_tt;
using testing::rel_err;

TEST_CASE("fft_dense small cases and naive DFT oracle") {
    auto delta = fft_dense(std::vector<Complex>{1, 0, 0, 0}, FftDirection::forward);
    for (auto v : delta) CHECK(std::abs(v - 0.5) < 1e-15);
    auto flat = fft_dense(std::vector<Complex>{1, 1, 1, 1}, FftDirection::forward);
    CHECK(std::abs(flat[0] - 2.0) < 1e-15);
    for (int j = 1; j < 4; ++j) CHECK(std::abs(flat[j]) < 1e-15);

    std::mt19937_64 rng(6);
    std::vector<Complex> v(1024);
    for (auto& x : v) x = testing::random_scalar<Complex>(rng);
    for (int s : {-1, 1}) {
        const auto dir = s < 0 ? FftDirection::forward : FftDirection::inverse;
        CHECK(rel_err(fft_dense(v, dir), testing::naive_dft(v, s)) < 1e-11);
    }
    auto round_trip = fft_dense(fft_dense(v, FftDirection::forward), FftDirection::inverse);
    CHECK(rel_err(round_trip, v) < 1e-13);
    CHECK(testing::norm2(fft_dense(v, FftDirection::forward)) ==
          doctest::Approx(testing::norm2(v)).epsilon(1e-12));
    CHECK_THROWS_AS(fft_dense(std::vector<Complex>(6), FftDirection::forward), InvalidArgument);
}

TEST_CASE("toeplitz_matvec_dense against direct multiplication") {
    std::vector<double> e0(8, 0.0), zeros(7, 0.0), x(8);
    e0[0] = 1.0;
    for (int j = 0; j < 8; ++j) x[j] = j * 0.5 - 1.0;
    CHECK(testing::max_abs_diff(toeplitz_matvec_dense(e0, zeros, x), x) < 1e-14);

    std::vector<double> bidiag(16, 0.0), ones(16, 1.0);
    bidiag[0] = bidiag[1] = 1.0;
    auto y = toeplitz_matvec_dense(bidiag, std::vector<double>(15, 0.0), ones);
    std::vector<double> want(16, 2.0);
    want[0] = 1.0;
    CHECK(testing::max_abs_diff(y, want) < 1e-13);

    std::mt19937_64 rng(9);
    const std::size_t n = 512;
    std::vector<double> col(n), row(n - 1), v(n);
    for (auto& c : col) c = testing::random_scalar<double>(rng);
    for (auto& r : row) r = testing::random_scalar<double>(rng);
    for (auto& c : v) c = testing::random_scalar<double>(rng);
    std::vector<double> direct(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            direct[i] += (i >= j ? col[i - j] : row[j - i - 1]) * v[j];
    CHECK(rel_err(toeplitz_matvec_dense(col, row, v), direct) < 1e-11);
    CHECK_THROWS_AS(toeplitz_matvec_dense(col, row, std::vector<double>(3)), InvalidArgument);

    std::vector<double> a(64), b(64);
    for (auto& c : a) c = testing::random_scalar<double>(rng);
    for (auto& c : b) c = testing::random_scalar<double>(rng);
    CHECK(rel_err(causal_convolve_dense(a, b), testing::direct_causal_conv(a, b)) < 1e-12);
}

TEST_CASE("qtt_fft trivial inputs") {
    const std::size_t d = 8;
    const double n = 256.0;
    auto flat = qtt_fft(TTVectorC::unit(d, 0), FftDirection::forward, Tolerance(1e-12));
    CHECK(flat.max_rank() == 1);
    for (auto v : materialize(flat)) CHECK(std::abs(v - 1.0 / std::sqrt(n)) < 1e-14);

    auto delta = qtt_fft(TTVectorC::ones(d), FftDirection::forward, Tolerance(1e-12));
    CHECK(delta.max_rank() == 1);
    auto dv = materialize(delta);
    CHECK(std::abs(dv[0] - std::sqrt(n)) < 1e-12);
    for (std::size_t j = 1; j < dv.size(); ++j) CHECK(std::abs(dv[j]) < 1e-12);

    auto one = materialize(qtt_fft(TTVectorC::unit(1, 1), FftDirection::forward, Tolerance(1e-12)));
    CHECK(std::abs(one[0] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(one[1] + 1.0 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("qtt_fft matches the dense FFT on random low-rank trains") {
    std::mt19937_64 rng(77);
    for (std::size_t d : {3, 7, 12}) {
        auto a = random_tt<Complex>(d, 4, rng);
        const auto dense = materialize(a);
        for (auto dir : {FftDirection::forward, FftDirection::inverse}) {
            QttFftStats stats;
            auto f = qtt_fft(a, dir, Tolerance(1e-10), &stats);
            CHECK(stats.stage_max_rank.size() == d);
            CHECK(rel_err(materialize(f), fft_dense(dense, dir)) < 1e-8);
            CHECK(norm(f) == doctest::Approx(norm(a)).epsilon(1e-9));
        }
    }
}

TEST_CASE("qtt_fft reports the failing stage on rank overflow") {
    std::mt19937_64 rng(78);
    auto a = random_tt<Complex>(10, 4, rng);
    try {
        (void)qtt_fft(a, FftDirection::forward, Tolerance(1e-12, 4));
        FAIL("expected RankLimitExceeded");
    } catch (const RankLimitExceeded& e) {
        CHECK(e.context().find("qtt_fft stage") != std::string::npos);
    }
}

TEST_CASE("qtt_convolve: identities and random trains") {
    const std::size_t d = 7;
    std::mt19937_64 rng(12);
    auto b = random_tt<double>(d, 3, rng);
    for (auto method : {ConvolutionMethod::kazev, ConvolutionMethod::fourier}) {
        auto c = qtt_convolve(TTVector::unit(d, 0), b, Tolerance(1e-12), method);
        CHECK(rel_err(materialize(c), materialize(b)) < 1e-10);

        auto counts = materialize(qtt_convolve(TTVector::ones(d), TTVector::ones(d), Tolerance(1e-12), method));
        for (std::size_t j = 0; j < counts.size(); ++j) CHECK(counts[j] == doctest::Approx(double(j + 1)).epsilon(1e-10));
    }

    for (int trial = 0; trial < 3; ++trial) {
        auto x = random_tt<double>(10, 3, rng);
        auto y = random_tt<double>(10, 3, rng);
        const auto want = testing::direct_causal_conv(materialize(x), materialize(y));
        ConvolutionStats stats;
        auto kz = qtt_convolve(x, y, Tolerance(1e-10), ConvolutionMethod::kazev, &stats);
        for (std::size_t p = 0; p <= 10; ++p)
            CHECK(stats.pre_round_ranks[p] <= (p == 0 || p == 10 ? 1 : 2 * x.rank(p) * y.rank(p)));
        CHECK(rel_err(materialize(kz), want) < 1e-8);
        auto fo = qtt_convolve(x, y, Tolerance(1e-10), ConvolutionMethod::fourier);
        CHECK(rel_err(materialize(fo), want) < 1e-8);
        auto swapped = qtt_convolve(y, x, Tolerance(1e-10), ConvolutionMethod::kazev);
        CHECK(rel_err(materialize(swapped), materialize(kz)) < 1e-9);
    }
}

TEST_CASE("qtt_convolve is linear in its first argument") {
    std::mt19937_64 rng(13);
    auto a = random_tt<double>(8, 2, rng);
    auto a2 = random_tt<double>(8, 2, rng);
    auto b = random_tt<double>(8, 3, rng);
    const Tolerance tol(1e-11);
    auto lhs = qtt_convolve(axpy(scale(a, 2.0), -3.0, a2), b, tol);
    auto rhs = axpy(scale(qtt_convolve(a, b, tol), 2.0), -3.0, qtt_convolve(a2, b, tol));
    CHECK(rel_err(materialize(lhs), materialize(rhs)) < 1e-9);
}

TEST_CASE("qtt_reciprocal") {
    ReciprocalStats stats;
    auto r1 = qtt_reciprocal(TTVectorC::ones(6), Tolerance(1e-12), {}, &stats);
    CHECK(stats.iterations <= 1);
    CHECK(rel_err(materialize(r1), materialize(TTVectorC::ones(6))) < 1e-12);

    auto r2 = qtt_reciprocal(TTVectorC::constant(6, 2.0), Tolerance(1e-12));
    for (auto v : materialize(r2)) CHECK(std::abs(v - 0.5) < 1e-11);

    // Spectrum of a smooth, geometrically damped generator.
    const std::size_t d = 10;
    std::vector<Complex> g(std::size_t{1} << d);
    for (std::size_t k = 0; k < g.size(); ++k)
        g[k] = (k == 0 ? 2.0 : -0.5 * std::pow(double(k), -1.5)) * std::pow(0.999, double(k));
    auto lam_dense = fft_dense(g, FftDirection::forward);
    for (auto& v : lam_dense) v *= std::sqrt(double(g.size()));
    auto lam = quantize<Complex>(lam_dense, Tolerance(1e-13));
    auto x = qtt_reciprocal(lam, Tolerance(1e-12), {}, &stats);
    auto xv = materialize(x);
    double worst = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < xv.size(); ++k) {
        worst = std::max(worst, std::abs(xv[k] - 1.0 / lam_dense[k]) * std::abs(lam_dense[k]));
        sq += std::norm(xv[k] * lam_dense[k] - 1.0);
    }
    CHECK(std::sqrt(sq / double(xv.size())) <= 1e-9);
    CHECK(worst < 1e-8);
    // Superlinear phase: below 0.1 the contraction factor shrinks every step
    // until the rounding floor.
    const auto& res = stats.residuals;
    CHECK(res.back() <= 1e-10);
    double prev_ratio = 1.0;
    for (std::size_t i = 1; i < res.size(); ++i) {
        if (res[i - 1] >= 0.1 || res[i - 1] < 1e-9) continue;
        const double ratio = res[i] / res[i - 1];
        CHECK(ratio < prev_ratio);
        prev_ratio = ratio;
    }

    std::vector<Complex> bad(64, 1.0);
    bad[5] = 0.0;
    CHECK_THROWS_AS(qtt_reciprocal(quantize<Complex>(bad, Tolerance(1e-14)), Tolerance(1e-10)),
                    SingularOperator);
}
