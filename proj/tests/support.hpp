#pragma once

// Shared helpers for the unit tests: random trains and dense reference code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qttv/tt_core.hpp"

namespace testing {

using qttv::Complex;

template <class T>
T random_scalar(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    if constexpr (qttv::is_complex_v<T>)
        return {g(rng), g(rng)};
    else
        return g(rng);
}

/// Random train with internal ranks min(rank, 2^p, 2^(d-p)).
template <class T>
qttv::TensorTrain<T> random_tt(std::size_t d, std::size_t rank, std::mt19937_64& rng) {
    std::vector<std::size_t> r(d + 1, 1);
    for (std::size_t p = 1; p < d; ++p)
        r[p] = std::min<std::size_t>({rank, std::size_t{1} << std::min<std::size_t>(p, 20),
                                      std::size_t{1} << std::min<std::size_t>(d - p, 20)});
    std::vector<typename qttv::TensorTrain<T>::Core> cores(d);
    for (std::size_t p = 0; p < d; ++p)
        for (int k = 0; k < 2; ++k) {
            cores[p][k].resize(static_cast<Eigen::Index>(r[p]), static_cast<Eigen::Index>(r[p + 1]));
            for (Eigen::Index i = 0; i < cores[p][k].size(); ++i)
                cores[p][k].data()[i] = random_scalar<T>(rng) / std::sqrt(double(r[p]));
        }
    return qttv::TensorTrain<T>(std::move(cores));
}

template <class T>
double norm2(const std::vector<T>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

template <class T>
double rel_err(const std::vector<T>& got, const std::vector<T>& want) {
    if (got.size() != want.size()) return INFINITY;
    double num = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) num += std::norm(got[i] - want[i]);
    const double den = norm2(want);
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num) / den;
}

template <class T>
double max_abs_diff(const std::vector<T>& got, const std::vector<T>& want) {
    double m = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) m = std::max(m, std::abs(got[i] - want[i]));
    return m;
}

/// O(n^2) causal convolution c(j) = sum_{k<=j} a(j-k) b(k).
template <class T>
std::vector<T> direct_causal_conv(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> c(a.size(), T(0));
    for (std::size_t j = 0; j < a.size(); ++j)
        for (std::size_t k = 0; k <= j; ++k) c[j] += a[j - k] * b[k];
    return c;
}

/// O(n^2) unitary DFT with sign -1 (forward) or +1 (inverse).
inline std::vector<Complex> naive_dft(const std::vector<Complex>& v, int sign) {
    const std::size_t n = v.size();
    std::vector<Complex> out(n);
    const double pi = std::acos(-1.0);
    for (std::size_t j = 0; j < n; ++j) {
        Complex s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = sign * 2.0 * pi * double((j * k) % n) / double(n);
            s += v[k] * Complex(std::cos(ang), std::sin(ang));
        }
        out[j] = s / std::sqrt(double(n));
    }
    return out;
}

/// Forward-substitution inverse of a lower-triangular Toeplitz generator.
inline std::vector<double> recurrence_inverse(const std::vector<double>& a) {
    std::vector<double> b(a.size(), 0.0);
    b[0] = 1.0 / a[0];
    for (std::size_t j = 1; j < a.size(); ++j) {
        double s = 0.0;
        for (std::size_t k = 1; k <= j; ++k) s += a[k] * b[j - k];
        b[j] = -s / a[0];
    }
    return b;
}

/// Generator of the product-integration system for D^alpha y = m y on a grid
/// of n points with step T / n, by direct long double evaluation.
inline std::vector<double> volterra_generator(double alpha, double m, std::size_t n, double T) {
    const long double h = T / static_cast<long double>(n);
    const long double ap1 = alpha + 1.0L;
    const long double gamma = std::pow(h, static_cast<long double>(alpha)) / std::tgamma(ap1 + 1.0L);
    std::vector<double> a(n);
    a[0] = static_cast<double>(1.0L - gamma * m);
    for (std::size_t p = 1; p < n; ++p) {
        const long double x = static_cast<long double>(p);
        a[p] = static_cast<double>(-gamma * m *
                                   (std::pow(x - 1, ap1) - 2 * std::pow(x, ap1) + std::pow(x + 1, ap1)));
    }
    return a;
}

}  // namespace testing
