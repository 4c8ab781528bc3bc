#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "qttv/tt_core.hpp"
#include "qttv/tt_cross.hpp"
#include "qttv/tt_io.hpp"
#include "support.hpp"

using namespace qttv;
using testing::random_tt;
using testing::rel_err;

TEST_CASE("quantize constant vector has unit ranks") {
    for (std::size_t d : {1, 3, 9}) {
        std::vector<double> v(std::size_t{1} << d, 3.25);
        auto a = quantize<double>(v, Tolerance(1e-12));
        CHECK(a.max_rank() == 1);
        CHECK(rel_err(materialize(a), v) < 1e-14);
    }
}

TEST_CASE("geometric vector is rank one with cores eps^(2^p k_p)") {
    const double eps = 0.93;
    const std::size_t d = 10;
    std::vector<double> v(std::size_t{1} << d);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::pow(eps, double(j));
    auto a = quantize<double>(v, Tolerance(1e-12));
    CHECK(a.max_rank() == 1);

    auto g = scale_geometric(TTVector::ones(d), eps);
    CHECK(g.max_rank() == 1);
    for (std::size_t p = 0; p < d; ++p) {
        const double ratio = g.core(p)[1](0, 0) / g.core(p)[0](0, 0);
        CHECK(ratio == doctest::Approx(std::pow(eps, std::ldexp(1.0, int(p)))).epsilon(1e-13));
    }
    CHECK(rel_err(materialize(g), v) < 1e-13);
}

TEST_CASE("materialize base cases and round trip") {
    std::vector<double> v{1, 2, 3, 4};
    CHECK(rel_err(materialize(quantize<double>(v, Tolerance(1e-14))), v) < 1e-12);

    TTVector::Core c{TTVector::Matrix::Constant(1, 1, 7.0), TTVector::Matrix::Constant(1, 1, -2.0)};
    TTVector one({c});
    CHECK(materialize(one) == std::vector<double>{7.0, -2.0});
}

TEST_CASE("quantize rejects bad lengths") {
    std::vector<double> three(3, 1.0), empty;
    CHECK_THROWS_AS(quantize<double>(three, Tolerance(1e-8)), InvalidArgument);
    CHECK_THROWS_AS(quantize<double>(empty, Tolerance(1e-8)), InvalidArgument);
    CHECK_THROWS_AS(Tolerance(1.5), InvalidArgument);
}

TEST_CASE("quantize error respects tolerance on random dense vectors") {
    std::mt19937_64 rng(11);
    for (double eps : {1e-2, 1e-6, 1e-10}) {
        for (std::size_t d : {4, 8, 14}) {
            std::vector<double> v(std::size_t{1} << d);
            for (std::size_t j = 0; j < v.size(); ++j)
                v[j] = std::sin(0.01 * double(j) * double(j % 7)) + 0.001 * testing::random_scalar<double>(rng);
            auto a = quantize<double>(v, Tolerance(eps));
            CHECK(rel_err(materialize(a), v) <= eps);
        }
    }
}

TEST_CASE("round: idempotent, removes formal rank doubling, honours tolerance") {
    std::mt19937_64 rng(3);
    std::vector<double> u(1024);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = 1.0 / (1.0 + double(j)) + std::cos(0.3 * double(j));
    auto qu = quantize<double>(u, Tolerance(1e-10));
    auto again = round(qu, Tolerance(1e-10));
    CHECK(again.ranks() == qu.ranks());

    auto doubled = add(qu, qu);
    auto rounded = round(doubled, Tolerance(1e-10));
    std::vector<double> u2(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) u2[j] = 2.0 * u[j];
    auto q2 = quantize<double>(u2, Tolerance(1e-10));
    CHECK(rounded.ranks() == q2.ranks());
    CHECK(rel_err(materialize(rounded), u2) < 1e-9);

    auto x = random_tt<double>(10, 8, rng);
    const auto dense = materialize(x);
    auto y = round(x, Tolerance(1e-3));
    CHECK(rel_err(materialize(y), dense) <= 1e-3);
    for (std::size_t p = 0; p <= 10; ++p) CHECK(y.rank(p) <= x.rank(p));

    auto exact = round(x, Tolerance(0.0));
    CHECK(rel_err(materialize(exact), dense) < 1e-13);
}

TEST_CASE("round leaves left-orthogonal cores") {
    std::mt19937_64 rng(5);
    auto x = round(random_tt<double>(8, 6, rng), Tolerance(1e-12));
    for (std::size_t p = 0; p + 1 < x.modes(); ++p) {
        const auto& c = x.core(p);
        Eigen::MatrixXd g = c[0].transpose() * c[0] + c[1].transpose() * c[1];
        CHECK((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).norm() < 1e-12);
    }
}

TEST_CASE("max_rank cap raises RankLimitExceeded") {
    std::mt19937_64 rng(8);
    auto x = random_tt<double>(8, 6, rng);
    try {
        (void)round(x, Tolerance(1e-14, 2));
        FAIL("expected RankLimitExceeded");
    } catch (const RankLimitExceeded& e) {
        CHECK(e.cap() == 2);
        CHECK(e.required_rank() > 2);
    }
}

TEST_CASE("elementwise algebra matches dense semantics") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        auto a = random_tt<double>(8, 4, rng);
        auto b = random_tt<double>(8, 4, rng);
        const auto da = materialize(a), db = materialize(b);
        std::vector<double> sum(da.size()), prod(da.size()), ax(da.size());
        double ip = 0.0;
        for (std::size_t j = 0; j < da.size(); ++j) {
            sum[j] = da[j] + db[j];
            prod[j] = da[j] * db[j];
            ax[j] = da[j] - 0.5 * db[j];
            ip += da[j] * db[j];
        }
        CHECK(rel_err(materialize(add(a, b)), sum) < 1e-12);
        CHECK(rel_err(materialize(hadamard(a, b)), prod) < 1e-12);
        CHECK(rel_err(materialize(axpy(a, -0.5, b)), ax) < 1e-12);
        CHECK(dot(a, b) == doctest::Approx(ip).epsilon(1e-12));
        CHECK(norm(a) == doctest::Approx(testing::norm2(da)).epsilon(1e-12));
        CHECK(add(a, b).max_rank() <= a.max_rank() + b.max_rank());
        CHECK(hadamard(a, b).max_rank() <= a.max_rank() * b.max_rank());
    }
    auto a = random_tt<double>(6, 3, rng);
    CHECK(rel_err(materialize(hadamard(a, TTVector::ones(6))), materialize(a)) < 1e-15);
    auto e0 = TTVector::unit(6, 0);
    CHECK(dot(e0, e0) == 1.0);
    CHECK_THROWS_AS(add(a, TTVector::ones(5)), InvalidArgument);
}

TEST_CASE("complex dot conjugates the first argument") {
    std::mt19937_64 rng(9);
    auto a = random_tt<Complex>(6, 3, rng);
    auto b = random_tt<Complex>(6, 3, rng);
    const auto da = materialize(a), db = materialize(b);
    Complex ip = 0.0;
    for (std::size_t j = 0; j < da.size(); ++j) ip += std::conj(da[j]) * db[j];
    CHECK(std::abs(dot(a, b) - ip) < 1e-12 * std::abs(ip));
    CHECK(norm(a) == doctest::Approx(testing::norm2(da)).epsilon(1e-12));
}

TEST_CASE("scale_geometric round trip and eps checks") {
    std::mt19937_64 rng(4);
    auto a = random_tt<double>(12, 5, rng);
    CHECK(rel_err(materialize(scale_geometric(a, 1.0)), materialize(a)) == 0.0);
    const double eps = 0.999;
    auto back = scale_geometric(scale_geometric(a, eps), 1.0 / eps);
    CHECK(rel_err(materialize(back), materialize(a)) < 1e-12);
    CHECK(scale_geometric(a, eps).ranks() == a.ranks());
    CHECK_THROWS_AS(scale_geometric(a, 0.0), InvalidArgument);

    auto neg = materialize(scale_geometric(TTVector::ones(4), -0.5));
    for (std::size_t j = 0; j < neg.size(); ++j)
        CHECK(neg[j] == doctest::Approx(std::pow(-0.5, double(j))).epsilon(1e-14));
}

TEST_CASE("real_part and conjugate") {
    std::mt19937_64 rng(12);
    auto a = random_tt<Complex>(7, 3, rng);
    const auto da = materialize(a);
    auto re = materialize(real_part(a));
    auto cj = materialize(conjugate(a));
    for (std::size_t j = 0; j < da.size(); ++j) {
        CHECK(re[j] == doctest::Approx(da[j].real()).epsilon(1e-12));
        CHECK(std::abs(cj[j] - std::conj(da[j])) < 1e-14);
    }
}

TEST_CASE("round-call telemetry counts calls") {
    const auto before = round_call_count();
    (void)round(TTVector::ones(4), Tolerance(1e-8));
    (void)round(TTVector::ones(4), Tolerance(1e-8));
    CHECK(round_call_count() - before == 2);
}

TEST_CASE("binary and JSON serialization round trip") {
    std::mt19937_64 rng(17);
    auto a = random_tt<double>(7, 4, rng);
    std::stringstream ss;
    write_binary(ss, a);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "QTTV");
    CHECK(bytes.size() == 16 + 8 * 8 + 8 * a.storage());
    auto back = std::get<TTVector>(read_binary(ss));
    CHECK(back.ranks() == a.ranks());
    CHECK(materialize(back) == materialize(a));

    auto c = random_tt<Complex>(5, 3, rng);
    std::stringstream sc;
    write_binary(sc, c);
    auto cback = std::get<TTVectorC>(read_binary(sc));
    CHECK(materialize(cback) == materialize(c));

    auto j = to_json(c);
    auto jback = std::get<TTVectorC>(from_json(nlohmann::json::parse(j.dump())));
    CHECK(materialize(jback) == materialize(c));

    std::stringstream bad("QTTX....");
    CHECK_THROWS_AS(read_binary(bad), InvalidArgument);
    std::stringstream truncated(bytes.substr(0, 40));
    CHECK_THROWS_AS(read_binary(truncated), InvalidArgument);
}

TEST_CASE("qtt_from_oracle: constant and power kernel") {
    CrossStats stats;
    auto c = qtt_from_oracle<double>([](std::uint64_t) { return 2.5; }, 12, Tolerance(1e-10), {},
                                     &stats);
    CHECK(c.max_rank() == 1);
    CHECK(c.element(1234) == doctest::Approx(2.5));

    const double alpha = 0.1;
    const std::size_t d = 20;
    auto f = [alpha](std::uint64_t k) { return std::pow(double(k + 1), alpha - 1.0); };
    auto cross = qtt_from_oracle<double>(f, d, Tolerance(1e-8), {}, &stats);
    CHECK(stats.oracle_calls < (std::uint64_t{1} << d) / 4);

    std::vector<double> dense(std::size_t{1} << d);
    for (std::size_t k = 0; k < dense.size(); ++k) dense[k] = f(k);
    auto ref = quantize<double>(dense, Tolerance(1e-8));
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> pick(0, dense.size() - 1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto k = pick(rng);
        worst = std::max(worst, std::abs(cross.element(k) - ref.element(k)));
    }
    CHECK(worst < 1e-6);
    CHECK(rel_err(materialize(cross), dense) < kCrossErrorFactor * 1e-8);
}

TEST_CASE("maxvol picks a dominant submatrix") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd u(40, 5);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = testing::random_scalar<double>(rng);
    auto rows = detail::maxvol<double>(u);
    Eigen::MatrixXd sub(5, 5);
    for (int j = 0; j < 5; ++j) sub.row(j) = u.row(rows[std::size_t(j)]);
    Eigen::MatrixXd b = u * sub.inverse();
    CHECK(b.cwiseAbs().maxCoeff() <= 1.05 + 1e-10);
}
