#pragma once

// Command-line front end. Every command writes one versioned CSV (first line
// "# schema: <name> v<k>") and a JSON summary on stdout; errors go to stderr as
// JSON with exit code 2 (input) or 3 (numerical failure).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qttv/frac_volterra.hpp"

namespace qttv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Output CSVs never exceed this many data rows.
inline constexpr std::size_t kMaxCsvRows = std::size_t{1} << 16;

struct RankProfile {
    std::vector<std::size_t> ranks;  // r_1..r_{d-1}
    double effective_rank = 1.0;
    double tol = 0.0;
    std::size_t d = 0;
};

/// Constant internal rank r with unit borders giving the same storage:
/// 4 r + 2 (d - 2) r^2 = sum_p 2 r_{p-1} r_p.
double effective_rank(const TTVector& v);
RankProfile rank_profile(const TTVector& v, double tol);

struct BenchRecord {
    std::string method;
    std::size_t log2n = 0;
    double alpha = 0.0;
    double mass = 0.0;
    double tol = 0.0;
    double wall_time = 0.0;
    std::size_t max_rank = 0;
    /// ||a * b - e_0||_2.
    double residual = 0.0;
    /// Relative l2 difference to the recurrence inverse; NaN when not computed.
    double agreement = 0.0;
};

/// Median wall time of `reps` calls on the monotonic clock.
double median_seconds(const std::function<void()>& run, std::size_t reps = 3);

/// Indices 0..n, or at most `limit` of them spread log-uniformly (0, 1 and n kept).
std::vector<std::uint64_t> subsample_indices(std::uint64_t n, std::size_t limit = kMaxCsvRows);

/// "8..12", "8,10,12" or "10".
std::vector<std::size_t> parse_index_list(const std::string& text);
/// Comma-separated reals.
std::vector<double> parse_real_list(const std::string& text);

/// Worker count for sweep cells: QTTV_THREADS, default 1.
std::size_t thread_count();

enum class RankTarget { kernel, coeffs, column, inverse };
RankTarget parse_rank_target(const std::string& s);
std::string to_string(RankTarget t);

struct RankTargetSpec {
    RankTarget target = RankTarget::kernel;
    double alpha = 0.5;
    double mass = -1e6;
    double T = 10.0;
    std::size_t log2n = 20;
    double tol = 1e-8;
};

/// The vector whose rank profile is reported: k^{alpha-1} (k >= 1),
/// second differences of k^{alpha+1}, the system generator, or its inverse.
TTVector rank_target_vector(const RankTargetSpec& spec);

struct InvertCell {
    InversionMethod method = InversionMethod::qtt_dc_conv;
    std::size_t log2n = 12;
    double alpha = 0.5;
    double mass = -1.0;
    double T = 10.0;
    double tol = 1e-10;
    std::size_t reps = 3;
    /// Largest log2n for which the O(n^2) recurrence reference is computed.
    std::size_t reference_limit = 14;
};

BenchRecord run_invert_cell(const InvertCell& cell);

/// body(0..count-1) on thread_count() workers; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Entry point shared by the qttvolterra binary and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace qttv::cli
