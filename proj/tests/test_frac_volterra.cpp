#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "qttv/frac_volterra.hpp"
#include "support.hpp"

using namespace qttv;
using testing::rel_err;

namespace {

/// int (j - s)^{alpha-1} phi_k(s) ds over [max(0,k-1), min(j,k+1)], phi_k the unit hat at k.
/// Integrated in u = j - s so the singularity sits at an exactly representable u = 0.
double hat_integral(int j, int k, double alpha) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto piece = [&](double lo, double hi, auto&& hat) {
        return ts.integrate([&](double u) { return std::pow(u, alpha - 1.0) * hat(j - u); }, j - hi, j - lo);
    };
    double total = 0.0;
    if (k >= 1) total += piece(k - 1.0, double(k), [&](double s) { return s - (k - 1.0); });
    if (k < j) total += piece(double(k), k + 1.0, [&](double s) { return (k + 1.0) - s; });
    return total;
}

using big = boost::multiprecision::cpp_bin_float_50;

double big_second_difference(std::uint64_t p, double b) {
    const big x(p), bb(b);
    return static_cast<double>(pow(x - 1, bb) - 2 * pow(x, bb) + pow(x + 1, bb));
}

double max_abs_err(const std::vector<double>& a, const std::vector<double>& b) {
    return testing::max_abs_diff(a, b);
}

FracProblem constant_problem(double alpha, std::size_t log2n, double lambda = 1.0) {
    FracProblem p;
    p.alpha = alpha;
    p.mass = -1.0;
    p.y0 = 1.0;
    p.forcing = ConstantForcing{lambda};
    p.T = 10.0;
    p.log2n = log2n;
    return p;
}

}  // namespace

TEST_CASE("weights against exact integration of hat functions") {
    for (std::uint64_t j : {1, 2, 7, 40, 1000}) CHECK(scheme_weight(j, j, 0.3) == 1.0);
    CHECK(quad_weight(2, 1, 0.5) == doctest::Approx(hat_integral(2, 1, 0.5)).epsilon(1e-12));
    for (double alpha : {0.1, 0.5, 0.9})
        for (auto [j, k] : {std::pair{1, 0}, {2, 0}, {5, 0}, {12, 0}, {5, 3}, {30, 2}, {30, 30}, {9, 9}})
            CHECK(quad_weight(j, k, alpha) == doctest::Approx(hat_integral(j, k, alpha)).epsilon(1e-10));

    for (std::uint64_t j : {2, 5, 100}) {
        CHECK(quad_weight(j, 0, 1.0) == doctest::Approx(0.5));
        CHECK(quad_weight(j, j, 1.0) == doctest::Approx(0.5));
        for (std::uint64_t k = 1; k < j; k += 7) CHECK(quad_weight(j, k, 1.0) == doctest::Approx(1.0));
    }
    for (std::uint64_t j = 1; j < 60; ++j)
        for (std::uint64_t k = 0; k <= j; ++k) CHECK(quad_weight(j, k, 0.4) > 0.0);
    CHECK_THROWS_AS(quad_weight(3, 4, 0.5), InvalidArgument);
    CHECK_THROWS_AS(quad_weight(0, 0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(quad_weight(3, 1, 1.5), InvalidArgument);
}

TEST_CASE("second differences and boundary weights stay accurate for large indices") {
    for (double b : {1.1, 1.5, 1.9}) {
        for (std::uint64_t p : {1ULL, 2ULL, 7ULL, 8ULL, 9ULL, 100ULL, 12345ULL, 1ULL << 20, 1ULL << 30}) {
            CAPTURE(p);
            CHECK(second_difference_power(p, b) == doctest::Approx(big_second_difference(p, b)).epsilon(1e-13));
        }
        const double alpha = b - 1.0;
        for (std::uint64_t j : {7ULL, 8ULL, 1000ULL, 1ULL << 25}) {
            const big x(j), bb(b);
            const double want = static_cast<double>(pow(x - 1, bb) - (x - bb) * pow(x, bb - 1));
            CHECK(scheme_weight(j, 0, alpha) == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("system generator") {
    auto p = constant_problem(0.5, 10);
    p.mass = 0.0;
    auto id = system_generator(p);
    CHECK(id[0] == 1.0);
    for (std::size_t k = 1; k < id.size(); ++k) CHECK(id[k] == 0.0);

    p.mass = -1.0;
    const auto a = system_generator(p);
    const double h = 10.0 / 1024;
    CHECK(a[0] == doctest::Approx(1.0 + std::sqrt(h) / boost::math::tgamma(2.5)).epsilon(1e-14));
    for (std::size_t k = 1; k + 1 < a.size(); ++k) {
        CHECK(a[k] > 0.0);
        CHECK(a[k + 1] < a[k]);
    }
    CHECK(rel_err(a, testing::volterra_generator(0.5, -1.0, 1024, 10.0)) < 1e-13);

    auto qa = system_generator_qtt(p, Tolerance(1e-12));
    CHECK(rel_err(materialize(qa), a) < 1e-11);
}

TEST_CASE("right-hand side against direct summation") {
    auto p = constant_problem(0.5, 8, 0.0);
    p.mass = 0.0;
    p.y0 = 2.5;
    for (double v : rhs_vector(p)) CHECK(v == doctest::Approx(2.5));

    auto direct = [](const FracProblem& q) {
        const double gamma = std::pow(q.h(), q.alpha) / boost::math::tgamma(q.alpha + 2.0);
        std::vector<double> b(q.n());
        for (std::uint64_t j = 1; j <= q.n(); ++j) {
            double s = scheme_weight(j, 0, q.alpha) * (q.mass * q.y0 + q.forcing_at(0));
            for (std::uint64_t k = 1; k <= j; ++k) s += scheme_weight(j, k, q.alpha) * q.forcing_at(k);
            b[j - 1] = q.y0 + gamma * s;
        }
        return b;
    };
    p.y0 = 0.0;
    p.forcing = ConstantForcing{3.0};
    CHECK(rel_err(rhs_vector(p), direct(p)) < 1e-12);

    auto q = constant_problem(0.8, 10);
    q.forcing = PowerForcing{0.75, 1.0};
    const auto want = direct(q);
    CHECK(rel_err(rhs_vector(q), want) <= 1e-11);
    CHECK(rel_err(materialize(rhs_vector_qtt(q, Tolerance(1e-12))), want) <= 1e-10);

    std::vector<double> samples(q.n() + 1);
    for (std::size_t j = 0; j < samples.size(); ++j) samples[j] = std::sin(0.3 * q.time(j));
    q.forcing = SampledForcing{samples};
    CHECK(rel_err(rhs_vector(q), direct(q)) <= 1e-11);
    q.forcing = SampledForcing{std::vector<double>(5, 0.0)};
    CHECK_THROWS_AS(rhs_vector(q), InvalidArgument);
}

TEST_CASE("Mittag-Leffler function") {
    CHECK(mittag_leffler(1.0, 1.0).value == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    for (double a : {0.1, 0.5, 0.9, 2.0}) CHECK(mittag_leffler(a, 0.0).value == 1.0);
    const double e_half = std::exp(1.0) * boost::math::erfc(1.0);
    auto ml = mittag_leffler(0.5, -1.0);
    CHECK(ml.reliable);
    CHECK(ml.value == doctest::Approx(e_half).epsilon(1e-13));
    for (double z : {-2.0, -0.4, 0.7, 2.5}) {
        CHECK(mittag_leffler(0.5, z).value ==
              doctest::Approx(std::exp(z * z) * boost::math::erfc(-z)).epsilon(1e-11));
        CHECK(mittag_leffler(1.0, 2.0, z).value == doctest::Approx(std::expm1(z) / z).epsilon(1e-13));
        CHECK(mittag_leffler(2.0, -z * z).value == doctest::Approx(std::cos(z)).epsilon(1e-11));
    }
    // Past |z| ~ 3 the alternating series loses digits to cancellation.
    auto edge = mittag_leffler(0.5, -3.5);
    CHECK_FALSE(edge.reliable);
    CHECK(edge.value == doctest::Approx(std::exp(12.25) * boost::math::erfc(3.5)).epsilon(edge.error_estimate * 10));
    CHECK_FALSE(mittag_leffler(0.5, -60.0).reliable);
    CHECK_FALSE(mittag_leffler(0.5, -20.0).reliable);
    CHECK_THROWS_AS(mittag_leffler(0.0, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("analytic solution for constant forcing") {
    auto p = constant_problem(0.5, 6, 0.0);
    p.mass = 0.0;
    p.forcing = ConstantForcing{2.0};
    auto y = analytic_constant_forcing(p);
    CHECK(y[0] == doctest::Approx(1.0 + 2.0 * std::sqrt(p.h()) / boost::math::tgamma(1.5)));

    // lambda = 0: y(t) = E_{1/2}(-sqrt t) = exp(t) erfc(sqrt t).
    auto q = constant_problem(0.5, 10, 0.0);
    auto yq = analytic_constant_forcing(q);
    const std::size_t j_one = static_cast<std::size_t>(std::llround(1.0 / q.h()));
    CHECK(yq[j_one - 1] == doctest::Approx(std::exp(q.time(j_one)) * boost::math::erfc(std::sqrt(q.time(j_one)))).epsilon(1e-12));

    auto r = constant_problem(0.5, 10, 1.0);
    auto yr = analytic_constant_forcing(r);
    for (std::size_t j = 0; j < yr.size(); j += 97)
        CHECK(yr[j] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve: trivial problem and grid refinement") {
    auto p = constant_problem(0.5, 8, 0.0);
    p.mass = 0.0;
    p.y0 = 3.0;
    InversionConfig cfg;
    cfg.method = InversionMethod::dense_dc;
    for (double v : solve(p, cfg).to_dense()) CHECK(v == doctest::Approx(3.0).epsilon(1e-13));

    for (double alpha : {0.1, 0.5}) {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t d = 8; d <= 12; ++d) {
            auto q = constant_problem(alpha, d, 1.0);
            q.y0 = 0.0;
            auto rep = solve(q, cfg);
            const double err = max_abs_err(rep.to_dense(), analytic_constant_forcing(q));
            CAPTURE(alpha);
            CAPTURE(d);
            CHECK(err < prev);
            CHECK(rep.residual < 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("solve: dense and QTT paths agree") {
    auto p = constant_problem(0.5, 12, 1.0);
    p.y0 = 0.5;
    InversionConfig dense;
    dense.method = InversionMethod::dense_dc;
    InversionConfig qtt;
    qtt.method = InversionMethod::qtt_dc_conv;
    qtt.tol = Tolerance(1e-10, 128);
    auto rd = solve(p, dense);
    auto rq = solve(p, qtt);
    CHECK(rq.method == "qtt_dc_conv");
    CHECK(max_abs_err(rd.to_dense(), rq.to_dense()) <= 1e-7);
    CHECK(rq.residual <= 1e-9);
    CHECK(rq.telemetry.max_rank > 0);
    CHECK(rq.value(17) == doctest::Approx(rd.value(17)).epsilon(1e-8));
}

TEST_CASE("discrete Laplace transform") {
    const std::size_t d = 12;
    const double T = 50.0, h = T / double(1 << d);
    std::vector<double> ones(1 << d, 1.0), decay(1 << d);
    for (std::size_t i = 0; i < decay.size(); ++i) decay[i] = std::exp(-(double(i) + 1.0) * h);
    const std::vector<double> s = {0.05, 0.3, 1.0, 4.0};
    const auto y1 = laplace_discrete(ones, 1.0, h, s);
    const auto ye = laplace_discrete(decay, 1.0, h, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(y1[i] - (1.0 - std::exp(-s[i] * T)) / s[i]) <= 2.0 * h);
        CHECK(std::abs(ye[i] - 1.0 / (s[i] + 1.0)) <= 2.0 * h);
    }
    const auto tt = laplace_discrete(quantize<double>(decay, Tolerance(1e-14)), 1.0, h, s);
    CHECK(rel_err(tt, ye) <= 1e-10);
    CHECK_THROWS_AS(laplace_discrete(ones, 1.0, h, std::vector<double>{0.0}), InvalidArgument);

    CHECK(laplace_exact_powerforcing(0.8, -1.0, 1.0, 1.0) ==
          doctest::Approx(0.5 + boost::math::tgamma(1.75) / 2.0).epsilon(1e-14));
    const double big_s = 1e8;
    CHECK(laplace_exact_powerforcing(0.8, -1.0, 2.0, big_s) * big_s == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("problem files") {
    const auto dir = std::filesystem::temp_directory_path() / "qttv_problem_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "p.json");
        f << R"({"alpha": 0.5, "mass": -1, "y0": 1, "T": 10, "log2n": 3, "forcing": {"kind": "samples", "path": "f.csv"}})";
        std::ofstream c(dir / "f.csv");
        c << "t,f\n";
        for (int j = 0; j <= 8; ++j) c << j * 1.25 << "," << j * j << "\n";
    }
    auto p = load_problem(dir / "p.json");
    CHECK(p.n() == 8);
    CHECK(p.forcing_at(3) == 9.0);

    CHECK(problem_from_json_text(R"({"alpha":0.8,"mass":-1,"y0":1,"T":100,"log2n":12,"forcing":{"kind":"power"}})")
              .forcing_at(1) == doctest::Approx(std::pow(100.0 / 4096, 0.75)));
    CHECK_THROWS_AS(problem_from_json_text(R"({"alpha":1.5,"mass":-1,"y0":1,"T":1,"log2n":4,"forcing":{"kind":"constant","lambda":1}})"),
                    InvalidArgument);
    CHECK_THROWS_AS(problem_from_json_text(R"({"alpha":0.5,"mass":-1,"y0":1,"T":1,"log2n":4,"forcing":{"kind":"constant","lambda":1},"extra":2})"),
                    InvalidArgument);
    CHECK_THROWS_AS(problem_from_json_text("{not json"), InvalidArgument);
    {
        std::ofstream c(dir / "f.csv");
        c << "0,1\n1.3,2\n";
    }
    CHECK_THROWS_AS(load_problem(dir / "p.json"), InvalidArgument);
    std::filesystem::remove_all(dir);

    auto stable = constant_problem(0.5, 4);
    CHECK(stable.warnings().empty());
    stable.mass = 0.5;
    CHECK(stable.warnings().size() == 1);
}
