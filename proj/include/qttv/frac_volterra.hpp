#pragma once

// The fractional initial-value problem D^alpha y = m y + f, y(0) = y0, on a
// uniform grid: product-integration weights, the triangular Toeplitz system,
// solves, and the analytic references (Mittag-Leffler, Laplace domain).

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "qttv/toeplitz_inv.hpp"

namespace qttv {

struct ConstantForcing {
    double lambda = 0.0;
};

/// f(t) = scale * t^exponent.
struct PowerForcing {
    double exponent = 0.75;
    double scale = 1.0;
};

/// f(t_j) for j = 0..n on the problem grid.
struct SampledForcing {
    std::vector<double> values;
};

using Forcing = std::variant<ConstantForcing, PowerForcing, SampledForcing>;

struct FracProblem {
    double alpha = 0.5;
    double mass = -1.0;
    double y0 = 1.0;
    Forcing forcing = ConstantForcing{0.0};
    double T = 10.0;
    std::size_t log2n = 10;

    std::uint64_t n() const { return std::uint64_t{1} << log2n; }
    double h() const { return T / static_cast<double>(n()); }
    double time(std::uint64_t j) const { return static_cast<double>(j) * h(); }
    double forcing_at(std::uint64_t j) const;

    /// Throws InvalidArgument on a malformed problem.
    void validate() const;
    /// Non-fatal remarks (m >= 0 is not asymptotically stable).
    std::vector<std::string> warnings() const;
};

/// Product-integration weight w_{j,k} = h^{-alpha} int (t_j - s)^{alpha-1} phi_k(s) ds
/// for hat functions phi_k on a unit grid. alpha = 1 gives the trapezoidal rule.
double quad_weight(std::uint64_t j, std::uint64_t k, double alpha);

/// alpha (alpha + 1) quad_weight(j, k, alpha): the normalization in which the
/// diagonal weight is 1 and the system matrix uses gamma = h^alpha / Gamma(alpha + 2).
double scheme_weight(std::uint64_t j, std::uint64_t k, double alpha);

/// (p-1)^{b} - 2 p^{b} + (p+1)^{b} for p >= 1, without cancellation for large p.
double second_difference_power(std::uint64_t p, double b);

/// gamma = h^alpha / Gamma(alpha + 2).
double scheme_gamma(const FracProblem& p);

/// Generator of the n x n system for y_1..y_n.
std::vector<double> system_generator(const FracProblem& p);
/// Same generator in QTT form; built by cross interpolation for large n.
TTVector system_generator_qtt(const FracProblem& p, const Tolerance& tol);

/// b_1..b_n.
std::vector<double> rhs_vector(const FracProblem& p);
TTVector rhs_vector_qtt(const FracProblem& p, const Tolerance& tol);

struct SolveTelemetry {
    InversionTelemetry inversion;
    double seconds_total = 0.0;
    double seconds_setup = 0.0;
    std::size_t max_rank = 0;
    std::uint64_t round_calls = 0;
};

struct SolveReport {
    /// y_1..y_n (y_0 is the initial value).
    std::variant<std::vector<double>, TTVector> solution;
    std::string method;
    /// ||A y - b|| / ||b||.
    double residual = 0.0;
    SolveTelemetry telemetry;

    std::vector<double> to_dense() const;
    double value(std::uint64_t j) const;
};

/// y = A^{-1} b: one inversion, one causal convolution. Dense methods work on
/// dense vectors, QTT methods never densify.
SolveReport solve(const FracProblem& p, const InversionConfig& cfg);

// ---------------------------------------------------------------------------
// Analytic references

struct MittagLefflerValue {
    double value = 0.0;
    /// Estimated relative error of the series evaluation.
    double error_estimate = 0.0;
    /// False outside the reliable domain (|z| > kMittagLefflerReliableRadius
    /// or error estimate above 1e-12).
    bool reliable = true;
    std::size_t terms = 0;
};

inline constexpr double kMittagLefflerReliableRadius = 50.0;

/// E_{a1,a2}(z) = sum_j z^j / Gamma(j a1 + a2), compensated summation.
MittagLefflerValue mittag_leffler(double alpha1, double alpha2, double z);
inline MittagLefflerValue mittag_leffler(double alpha, double z) { return mittag_leffler(alpha, 1.0, z); }

/// y(t) = (y0 + lambda/m) E_alpha(m t^alpha) - lambda/m on t_1..t_n; for
/// m = 0, y0 + lambda t^alpha / Gamma(alpha + 1). Requires constant forcing.
/// Throws NumericalError if the series error estimate exceeds 1e-8 anywhere.
std::vector<double> analytic_constant_forcing(const FracProblem& p);
/// The same solution at a single time t >= 0.
double analytic_constant_forcing_at(const FracProblem& p, double t);

/// h (y0 + sum_{j=1}^{n} exp(-t_j s) y_j) for every s; y holds y_1..y_n.
std::vector<double> laplace_discrete(std::span<const double> y, double y0, double h,
                                     std::span<const double> s_values);
/// Same sum as a dot product with a rank-1 exponential train.
std::vector<double> laplace_discrete(const TTVector& y, double y0, double h,
                                     std::span<const double> s_values);

/// Laplace transform of the solution with f(t) = t^{3/4}:
/// y0 / (s^{1-alpha} (s^alpha - m)) + Gamma(1.75) / (s^{1.75} (s^alpha - m)).
double laplace_exact_powerforcing(double alpha, double m, double y0, double s);

// ---------------------------------------------------------------------------
// Problem files

/// {alpha, mass, y0, T, log2n, forcing: {kind: constant|power|samples, ...}}.
/// A samples forcing names a CSV of (t, f) rows, resolved against `base_dir`;
/// its t column must match the grid j h, j = 0..n.
FracProblem load_problem(const std::filesystem::path& file);
FracProblem problem_from_json_text(const std::string& text,
                                   const std::filesystem::path& base_dir = {});
std::vector<double> load_forcing_csv(const std::filesystem::path& file, double h, std::uint64_t n);

}  // namespace qttv
