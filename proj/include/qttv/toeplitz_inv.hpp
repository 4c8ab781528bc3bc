#pragma once

// Inversion of lower-triangular Toeplitz matrices given by their first column
// (the generator). Dense reference algorithms and QTT algorithms.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qttv/qtt_transform.hpp"
#include "qttv/tt_core.hpp"

namespace qttv {

/// A lower-triangular Toeplitz matrix a(j, k) = a(j - k), stored as its
/// first column, either dense or in QTT form. Length is a power of two.
class ToeplitzOperator {
public:
    explicit ToeplitzOperator(std::vector<double> first_col);
    explicit ToeplitzOperator(TTVector first_col);

    std::size_t modes() const noexcept { return d_; }
    std::uint64_t size() const noexcept { return std::uint64_t{1} << d_; }
    bool is_qtt() const noexcept { return std::holds_alternative<TTVector>(col_); }

    const std::vector<double>& dense() const { return std::get<std::vector<double>>(col_); }
    const TTVector& qtt() const { return std::get<TTVector>(col_); }
    double entry(std::uint64_t k) const;

    /// Dense copy (materializes a QTT generator).
    std::vector<double> to_dense() const;
    /// QTT copy (quantizes a dense generator at `tol`).
    TTVector to_qtt(const Tolerance& tol) const;

private:
    std::variant<std::vector<double>, TTVector> col_;
    std::size_t d_;
};

enum class InversionMethod {
    recurrence,
    dense_dc,
    dense_bini,
    dense_bini_modified,
    qtt_dc_conv,
    qtt_dc_fft,
    qtt_bini,
};

std::string_view to_string(InversionMethod m);
/// Throws InvalidArgument for unknown names.
InversionMethod parse_inversion_method(std::string_view name);
bool is_qtt_method(InversionMethod m);

inline constexpr double kDefaultBiniEpsPow = 0.5e-8;
inline constexpr double kDefaultModifiedBiniEpsPow = 1e-5;

struct InversionConfig {
    InversionMethod method = InversionMethod::qtt_dc_conv;
    Tolerance tol{1e-10, 128};
    /// Base case size 2^d0 for the divide-and-conquer methods.
    std::size_t d0 = 5;
    /// Target value of eps^n for the Bini family; unset selects the default
    /// for the chosen variant.
    std::optional<double> bini_eps_pow;
    std::size_t newton_refine_steps = 0;

    double eps_pow() const;
    void validate() const;
};

struct InversionTelemetry {
    std::string method;
    double seconds = 0.0;
    std::size_t max_rank = 0;
    std::uint64_t round_calls = 0;
    /// Result rank after each doubling level (divide and conquer) or after
    /// each stage (Bini: transform, reciprocal, back-transform).
    std::vector<std::size_t> level_max_rank;
    std::size_t newton_iterations = 0;
    /// ||a||_1 ||b||_1, the 1-norm condition number of the matrix. Reported,
    /// never acted on; 0 when not computed (QTT input with more than 20 modes).
    double conditioning_estimate = 0.0;
};

/// Rejects |a(0)| < 1e3 * eps * ||a||_inf with SingularOperator.
void check_invertible(std::span<const double> a);
/// QTT variant; ||a||_2 stands in for the max norm (an upper bound for it).
void check_invertible(const TTVector& a);

/// Forward substitution, O(n^2).
std::vector<double> invert_recurrence(std::span<const double> a);

/// Doubling with two Toeplitz products per level; length must be 2^d.
std::vector<double> invert_dense_dc(std::span<const double> a, std::size_t d0 = 5);

/// Bini's approximate inverse with eps = eps_pow^{1/n}; modified pads to 2n.
std::vector<double> invert_dense_bini(std::span<const double> a, double eps_pow, bool modified);

struct NewtonStats {
    /// ||e_0 - a * b_k|| (l1 for dense input, l2 for QTT), k = 0..steps.
    std::vector<double> residuals;
};

/// b <- b + b * (e_0 - a * b), two causal convolutions per step. Requires
/// ||e_0 - a * b_0||_1 < 1; throws ConvergenceError on a residual increase.
std::vector<double> newton_refine(std::span<const double> a, std::span<const double> b0,
                                  std::size_t steps, NewtonStats* stats = nullptr);

TTVector newton_refine(const TTVector& a, const TTVector& b0, std::size_t steps,
                       const Tolerance& tol,
                       ConvolutionMethod method = ConvolutionMethod::kazev,
                       NewtonStats* stats = nullptr);

/// Divide-and-conquer doubling on QTT trains; cfg.method picks the
/// convolution backend (qtt_dc_fft uses the Fourier one, anything else kazev).
TTVector invert_qtt_dc(const TTVector& a, const InversionConfig& cfg,
                       InversionTelemetry* telemetry = nullptr);

/// Modified Bini inversion carried out on QTT trains.
TTVector invert_qtt_bini(const TTVector& a, const InversionConfig& cfg,
                         InversionTelemetry* telemetry = nullptr);

struct InversionResult {
    std::variant<std::vector<double>, TTVector> inverse;
    InversionTelemetry telemetry;

    std::vector<double> to_dense() const;
};

/// Dispatch on cfg.method; converts the generator between dense and QTT as
/// needed and applies cfg.newton_refine_steps Newton steps at the end.
InversionResult invert(const ToeplitzOperator& op, const InversionConfig& cfg);

// ---------------------------------------------------------------------------
// Decay profiles

struct DecayFitOptions {
    std::size_t sample_count = 200;
    /// Index window for the early slope; unset means the first decade of the
    /// sampled range above `min_index`.
    std::optional<std::pair<double, double>> early_window;
    /// Index window for the late slope; unset means the last decade.
    std::optional<std::pair<double, double>> late_window;
    std::uint64_t min_index = 1;
    /// Minimum slope difference for reporting two regimes.
    double min_slope_gap = 0.3;
};

struct DecayProfile {
    std::vector<std::uint64_t> index;
    std::vector<double> magnitude;
    /// |a(0)| / |a(1)|, the jump between diagonal and subdiagonal.
    double diagonal_ratio = 0.0;
    double early_slope = 0.0;
    double late_slope = 0.0;
    /// Intersection of the two fitted lines, when two regimes are detected.
    std::optional<double> bend_point;
    bool two_slopes = false;
};

/// Log-spaced samples of |v(p)|, p in [min_index, n - 1], plus log-log fits.
DecayProfile decay_profile(std::span<const double> v, const DecayFitOptions& opts = {});
DecayProfile decay_profile(const TTVector& v, const DecayFitOptions& opts = {});

}  // namespace qttv
