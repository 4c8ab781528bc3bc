#include "qttv/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qttv/qtt_transform.hpp"
#include "qttv/tt_cross.hpp"

namespace qttv::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(num) / norm2(b);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) out.push_back(trim(item));
    return out;
}

std::size_t parse_size(const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        throw InvalidArgument("not an integer: '" + s + "'");
    }
    if (pos != s.size() || s.front() == '-') throw InvalidArgument("not an integer: '" + s + "'");
    return static_cast<std::size_t>(v);
}

std::vector<InversionMethod> parse_methods(const std::string& text) {
    std::vector<InversionMethod> out;
    for (const auto& m : split(text, ',')) out.push_back(parse_inversion_method(m));
    if (out.empty()) throw InvalidArgument("empty method list");
    return out;
}

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& schema, const std::string& header)
        : f_(path) {
        if (!f_) throw InvalidArgument("cannot open output file '" + path + "'");
        f_ << std::setprecision(17) << "# schema: " << schema << "\n" << header << "\n";
    }

    template <class... Ts>
    void row(const Ts&... cols) {
        std::size_t i = 0;
        ((f_ << (i++ ? "," : "") << cols), ...);
        f_ << "\n";
        ++rows_;
    }

    std::size_t rows() const { return rows_; }

    void close(const std::string& path) {
        f_.close();
        if (!f_) throw InvalidArgument("failed writing '" + path + "'");
    }

private:
    std::ofstream f_;
    std::size_t rows_ = 0;
};

FracProblem generator_problem(double alpha, double mass, double T, std::size_t log2n) {
    FracProblem p;
    p.alpha = alpha;
    p.mass = mass;
    p.T = T;
    p.log2n = log2n;
    return p;
}

/// Generators for QTT inversion are compressed well below the inversion tolerance.
Tolerance generator_tol(double tol) { return Tolerance(std::max(tol * 1e-2, 1e-14)); }

ToeplitzOperator make_operator(const FracProblem& p, InversionMethod method, double tol) {
    if (is_qtt_method(method)) return ToeplitzOperator(system_generator_qtt(p, generator_tol(tol)));
    return ToeplitzOperator(system_generator(p));
}

double inverse_residual(const ToeplitzOperator& a, const InversionResult& r, double tol) {
    if (const auto* b = std::get_if<TTVector>(&r.inverse)) {
        const auto ab = qtt_convolve(a.to_qtt(generator_tol(tol)), *b, generator_tol(tol));
        return norm(axpy(ab, -1.0, TTVector::unit(ab.modes(), 0)));
    }
    auto ab = causal_convolve_dense(a.to_dense(), std::get<std::vector<double>>(r.inverse));
    ab[0] -= 1.0;
    return norm2(ab);
}

json telemetry_json(const InversionTelemetry& t) {
    return {{"method", t.method},
            {"seconds", t.seconds},
            {"max_rank", t.max_rank},
            {"round_calls", t.round_calls},
            {"level_max_rank", t.level_max_rank},
            {"newton_iterations", t.newton_iterations},
            {"conditioning_estimate", t.conditioning_estimate}};
}

InversionConfig make_config(const std::string& method, double tol, std::size_t max_rank,
                            std::size_t d0, std::size_t newton) {
    InversionConfig cfg;
    cfg.method = parse_inversion_method(method);
    cfg.tol = Tolerance(tol, max_rank);
    cfg.d0 = d0;
    cfg.newton_refine_steps = newton;
    cfg.validate();
    return cfg;
}

/// Solution values y_j at the requested grid indices (j = 0 is y0).
std::vector<double> solution_at(const SolveReport& rep, const FracProblem& p,
                                const std::vector<std::uint64_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    if (const auto* y = std::get_if<std::vector<double>>(&rep.solution)) {
        for (auto j : idx) out.push_back(j == 0 ? p.y0 : (*y)[j - 1]);
    } else {
        for (auto j : idx) out.push_back(j == 0 ? p.y0 : rep.value(j - 1));
    }
    return out;
}

/// Every grid index 1..n up to 2^20 points, a log-uniform subsample beyond.
std::vector<std::uint64_t> error_indices(std::uint64_t n) {
    std::vector<std::uint64_t> idx;
    if (n <= (std::uint64_t{1} << 20)) {
        idx.resize(n);
        for (std::uint64_t j = 0; j < n; ++j) idx[j] = j + 1;
    } else {
        idx = subsample_indices(n);
        idx.erase(idx.begin());
    }
    return idx;
}

struct SolveArgs {
    std::string problem, method = "qtt_dc_conv", out;
    double tol = 1e-10;
    std::size_t max_rank = 128, d0 = 5, newton = 0;
    bool validate = false;
};

json cmd_solve(const SolveArgs& a) {
    const auto p = load_problem(a.problem);
    const auto cfg = make_config(a.method, a.tol, a.max_rank, a.d0, a.newton);
    const auto rep = solve(p, cfg);

    const auto idx = subsample_indices(p.n());
    const auto y = solution_at(rep, p, idx);
    CsvFile csv(a.out, "qttv-solve v1", a.validate ? "j,t,y,analytic,abs_error" : "j,t,y");
    double max_err = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double t = p.time(idx[i]);
        if (a.validate) {
            const double ex = analytic_constant_forcing_at(p, t);
            max_err = std::max(max_err, std::abs(y[i] - ex));
            csv.row(idx[i], t, y[i], ex, std::abs(y[i] - ex));
        } else {
            csv.row(idx[i], t, y[i]);
        }
    }
    csv.close(a.out);

    json j = {{"command", "solve"},
              {"method", rep.method},
              {"n", p.n()},
              {"rows", csv.rows()},
              {"residual", rep.residual},
              {"seconds_total", rep.telemetry.seconds_total},
              {"seconds_setup", rep.telemetry.seconds_setup},
              {"max_rank", rep.telemetry.max_rank},
              {"round_calls", rep.telemetry.round_calls},
              {"inversion", telemetry_json(rep.telemetry.inversion)},
              {"warnings", p.warnings()}};
    if (a.validate) j["max_abs_error"] = max_err;
    return j;
}

struct InvertArgs {
    std::string alpha = "0.5", mass = "-1", log2n = "12", method = "qtt_dc_conv", out;
    double tmax = 10.0, tol = 1e-10;
    std::size_t max_rank = 128, reps = 3, reference_limit = 14;
};

json cmd_invert(const InvertArgs& a) {
    std::vector<InvertCell> cells;
    for (double alpha : parse_real_list(a.alpha))
        for (double mass : parse_real_list(a.mass))
            for (auto d : parse_index_list(a.log2n))
                for (auto m : parse_methods(a.method)) {
                    InvertCell c;
                    c.method = m;
                    c.log2n = d;
                    c.alpha = alpha;
                    c.mass = mass;
                    c.T = a.tmax;
                    c.tol = a.tol;
                    c.reps = a.reps;
                    c.reference_limit = a.reference_limit;
                    cells.push_back(c);
                }
    std::vector<BenchRecord> records(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) { records[i] = run_invert_cell(cells[i]); });

    CsvFile csv(a.out, "qttv-invert v1",
                "method,log2n,alpha,mass,tol,wall_time,max_rank,residual,agreement");
    for (const auto& r : records)
        csv.row(r.method, r.log2n, r.alpha, r.mass, r.tol, r.wall_time, r.max_rank, r.residual,
                r.agreement);
    csv.close(a.out);
    return {{"command", "invert"}, {"rows", csv.rows()}, {"threads", thread_count()}};
}

struct RankArgs {
    std::string target = "kernel", alpha_grid = "0.1,0.3,0.5,0.7,0.9", tol_grid = "1e-4,1e-6,1e-8",
                out;
    std::size_t log2n = 20;
    double mass = -1e6, tmax = 10.0;
};

json cmd_rank_profile(const RankArgs& a) {
    const auto target = parse_rank_target(a.target);
    std::vector<RankTargetSpec> cells;
    for (double alpha : parse_real_list(a.alpha_grid))
        for (double tol : parse_real_list(a.tol_grid))
            cells.push_back({target, alpha, a.mass, a.tmax, a.log2n, tol});
    std::vector<RankProfile> out(cells.size());
    parallel_for(cells.size(),
                 [&](std::size_t i) { out[i] = rank_profile(rank_target_vector(cells[i]), cells[i].tol); });

    CsvFile csv(a.out, "qttv-rank-profile v1", "target,alpha,tol,log2n,effective_rank,max_rank,ranks");
    double worst = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string ranks;
        for (auto r : out[i].ranks) ranks += (ranks.empty() ? "" : ";") + std::to_string(r);
        const auto mx = out[i].ranks.empty() ? 1 : *std::max_element(out[i].ranks.begin(), out[i].ranks.end());
        csv.row(to_string(target), cells[i].alpha, cells[i].tol, a.log2n, out[i].effective_rank, mx, ranks);
        worst = std::max(worst, out[i].effective_rank);
    }
    csv.close(a.out);
    return {{"command", "rank-profile"}, {"rows", csv.rows()}, {"max_effective_rank", worst}};
}

struct DecayArgs {
    std::string method = "dense_dc", out;
    double alpha = 0.8, mass = -1.0, tmax = 10.0, tol = 1e-10;
    std::size_t log2n = 16, samples = 200, max_rank = 128;
};

json cmd_decay_profile(const DecayArgs& a) {
    const auto p = generator_problem(a.alpha, a.mass, a.tmax, a.log2n);
    const auto cfg = make_config(a.method, a.tol, a.max_rank, 5, 0);
    const auto inv = invert(make_operator(p, cfg.method, a.tol), cfg);
    DecayFitOptions opts;
    opts.sample_count = a.samples;
    const auto prof = std::visit([&](const auto& b) { return decay_profile(b, opts); }, inv.inverse);

    CsvFile csv(a.out, "qttv-decay-profile v1", "index,magnitude");
    for (std::size_t i = 0; i < prof.index.size(); ++i) csv.row(prof.index[i], prof.magnitude[i]);
    csv.close(a.out);
    json j = {{"command", "decay-profile"},
              {"rows", csv.rows()},
              {"diagonal_ratio", prof.diagonal_ratio},
              {"early_slope", prof.early_slope},
              {"late_slope", prof.late_slope},
              {"two_slopes", prof.two_slopes},
              {"bend_point", nullptr},
              {"inversion", telemetry_json(inv.telemetry)}};
    if (prof.bend_point) j["bend_point"] = *prof.bend_point;
    return j;
}

struct MlArgs {
    std::string alpha = "0.1,0.5", log2n = "8..14", method = "dense_dc", compare, out;
    double mass = -1.0, lambda = 1.0, y0 = 1.0, tmax = 10.0, tol = 1e-10;
    std::size_t max_rank = 128;
};

json cmd_validate_ml(const MlArgs& a) {
    CsvFile csv(a.out, "qttv-validate-ml v1",
                "alpha,log2n,n,h,method,max_error,residual,wall_time,agreement");
    const auto cfg = make_config(a.method, a.tol, a.max_rank, 5, 0);
    std::optional<InversionConfig> other;
    if (!a.compare.empty()) other = make_config(a.compare, a.tol, a.max_rank, 5, 0);
    for (double alpha : parse_real_list(a.alpha))
        for (auto d : parse_index_list(a.log2n)) {
            FracProblem p = generator_problem(alpha, a.mass, a.tmax, d);
            p.y0 = a.y0;
            p.forcing = ConstantForcing{a.lambda};
            const auto rep = solve(p, cfg);
            const auto idx = error_indices(p.n());
            const auto y = solution_at(rep, p, idx);
            double err = 0.0;
            for (std::size_t i = 0; i < idx.size(); ++i)
                err = std::max(err, std::abs(y[i] - analytic_constant_forcing_at(p, p.time(idx[i]))));
            double agree = kNaN;
            if (other) {
                const auto y2 = solution_at(solve(p, *other), p, idx);
                agree = 0.0;
                for (std::size_t i = 0; i < idx.size(); ++i) agree = std::max(agree, std::abs(y[i] - y2[i]));
            }
            csv.row(alpha, d, p.n(), p.h(), rep.method, err, rep.residual, rep.telemetry.seconds_total,
                    agree);
        }
    csv.close(a.out);
    return {{"command", "validate-ml"}, {"rows", csv.rows()}};
}

struct LaplaceArgs {
    std::string tmax = "100,1000,10000", log2n = "16", s = "0.01", method = "dense_dc", out;
    double alpha = 0.8, mass = -1.0, y0 = 1.0, tol = 1e-10;
    std::size_t max_rank = 128;
};

json cmd_validate_laplace(const LaplaceArgs& a) {
    const auto cfg = make_config(a.method, a.tol, a.max_rank, 5, 0);
    const auto s = parse_real_list(a.s);
    CsvFile csv(a.out, "qttv-validate-laplace v1", "T,log2n,h,s,discrete,exact,abs_error");
    for (double T : parse_real_list(a.tmax))
        for (auto d : parse_index_list(a.log2n)) {
            FracProblem p = generator_problem(a.alpha, a.mass, T, d);
            p.y0 = a.y0;
            p.forcing = PowerForcing{0.75, 1.0};
            const auto rep = solve(p, cfg);
            const auto disc = std::visit(
                [&](const auto& y) { return laplace_discrete(y, p.y0, p.h(), s); }, rep.solution);
            for (std::size_t i = 0; i < s.size(); ++i) {
                const double ex = laplace_exact_powerforcing(p.alpha, p.mass, p.y0, s[i]);
                csv.row(T, d, p.h(), s[i], disc[i], ex, std::abs(disc[i] - ex));
            }
        }
    csv.close(a.out);
    return {{"command", "validate-laplace"}, {"rows", csv.rows()}};
}

json error_json(const std::string& kind, const std::string& type, const std::string& message) {
    return {{"error", {{"kind", kind}, {"type", type}, {"message", message}}}};
}

}  // namespace

// ---------------------------------------------------------------------------

double effective_rank(const TTVector& v) {
    const double d = static_cast<double>(v.modes());
    const double s = static_cast<double>(v.storage());
    if (v.modes() == 1) return 1.0;
    if (v.modes() == 2) return s / 4.0;
    // 2 (d-2) r^2 + 4 r - s = 0
    const double a = 2.0 * (d - 2.0);
    return (-4.0 + std::sqrt(16.0 + 4.0 * a * s)) / (2.0 * a);
}

RankProfile rank_profile(const TTVector& v, double tol) {
    RankProfile p;
    const auto r = v.ranks();
    p.ranks.assign(r.begin() + 1, r.end() - 1);
    p.effective_rank = effective_rank(v);
    p.tol = tol;
    p.d = v.modes();
    return p;
}

double median_seconds(const std::function<void()>& run, std::size_t reps) {
    if (reps == 0) throw InvalidArgument("median_seconds: reps must be >= 1");
    std::vector<double> t;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        run();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
    return t[t.size() / 2];
}

std::vector<std::uint64_t> subsample_indices(std::uint64_t n, std::size_t limit) {
    if (limit < 3) throw InvalidArgument("subsample_indices: limit must be >= 3");
    std::vector<std::uint64_t> out;
    if (n + 1 <= limit) {
        out.resize(n + 1);
        for (std::uint64_t j = 0; j <= n; ++j) out[j] = j;
        return out;
    }
    std::set<std::uint64_t> idx{0, 1, n};
    const double top = std::log(static_cast<double>(n));
    const std::size_t steps = limit - 2;
    for (std::size_t i = 0; i < steps && idx.size() < limit; ++i) {
        const double x = std::exp(top * static_cast<double>(i) / static_cast<double>(steps - 1));
        idx.insert(std::clamp<std::uint64_t>(std::llround(x), 1, n));
    }
    return {idx.begin(), idx.end()};
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) continue;
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_size(item));
            continue;
        }
        const auto lo = parse_size(trim(item.substr(0, dots))), hi = parse_size(trim(item.substr(dots + 2)));
        if (hi < lo) throw InvalidArgument("empty range '" + item + "'");
        for (auto k = lo; k <= hi; ++k) out.push_back(k);
    }
    if (out.empty()) throw InvalidArgument("empty index list");
    return out;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            throw InvalidArgument("not a number: '" + item + "'");
        }
        if (pos != item.size() || !std::isfinite(v)) throw InvalidArgument("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw InvalidArgument("empty number list");
    return out;
}

std::size_t thread_count() {
    const char* env = std::getenv("QTTV_THREADS");
    if (!env || !*env) return 1;
    const auto n = parse_size(env);
    if (n == 0) throw InvalidArgument("QTTV_THREADS must be >= 1");
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min(thread_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < count;) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!failure) failure = std::current_exception();
                        next = count;
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

RankTarget parse_rank_target(const std::string& s) {
    if (s == "kernel") return RankTarget::kernel;
    if (s == "coeffs") return RankTarget::coeffs;
    if (s == "column") return RankTarget::column;
    if (s == "inverse") return RankTarget::inverse;
    throw InvalidArgument("unknown rank target '" + s + "' (kernel, coeffs, column, inverse)");
}

std::string to_string(RankTarget t) {
    switch (t) {
        case RankTarget::kernel: return "kernel";
        case RankTarget::coeffs: return "coeffs";
        case RankTarget::column: return "column";
        case RankTarget::inverse: return "inverse";
    }
    return "?";
}

TTVector rank_target_vector(const RankTargetSpec& spec) {
    const Tolerance tol(spec.tol);
    const double alpha = spec.alpha;
    switch (spec.target) {
        case RankTarget::kernel:
            return qtt_from_function(
                [alpha](std::uint64_t k) { return std::pow(static_cast<double>(k + 1), alpha - 1.0); },
                spec.log2n, tol);
        case RankTarget::coeffs:
            return qtt_from_function(
                [alpha](std::uint64_t k) { return k == 0 ? 1.0 : second_difference_power(k, alpha + 1.0); },
                spec.log2n, tol);
        case RankTarget::column:
            return system_generator_qtt(generator_problem(alpha, spec.mass, spec.T, spec.log2n), tol);
        case RankTarget::inverse: {
            InversionConfig cfg;
            cfg.tol = Tolerance(spec.tol, 512);
            const auto a = system_generator_qtt(generator_problem(alpha, spec.mass, spec.T, spec.log2n),
                                                generator_tol(spec.tol));
            return std::get<TTVector>(invert(ToeplitzOperator(a), cfg).inverse);
        }
    }
    throw InvalidArgument("rank_target_vector: bad target");
}

BenchRecord run_invert_cell(const InvertCell& c) {
    const auto p = generator_problem(c.alpha, c.mass, c.T, c.log2n);
    InversionConfig cfg;
    cfg.method = c.method;
    cfg.tol = Tolerance(c.tol, 128);
    const auto op = make_operator(p, c.method, c.tol);

    std::optional<InversionResult> res;
    BenchRecord r;
    r.wall_time = median_seconds([&] { res = invert(op, cfg); }, c.reps);
    r.method = to_string(c.method);
    r.log2n = c.log2n;
    r.alpha = c.alpha;
    r.mass = c.mass;
    r.tol = c.tol;
    r.max_rank = res->telemetry.max_rank;
    r.residual = inverse_residual(op, *res, c.tol);
    r.agreement = kNaN;
    if (c.log2n <= c.reference_limit) {
        const auto ref = invert_recurrence(system_generator(p));
        r.agreement = rel_diff(res->to_dense(), ref);
    }
    return r;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fractional Volterra solver on QTT triangular Toeplitz inverses", "qttvolterra"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "qttvolterra 0.1.0");

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Solve the problem in a JSON file");
    solve_cmd->add_option("problem", sa.problem, "Problem JSON file")->required();
    solve_cmd->add_option("--method", sa.method, "Inversion method")->capture_default_str();
    solve_cmd->add_option("--tol", sa.tol, "Relative truncation tolerance")->capture_default_str();
    solve_cmd->add_option("--max-rank", sa.max_rank, "Rank cap")->capture_default_str();
    solve_cmd->add_option("--d0", sa.d0, "Base level for divide and conquer")->capture_default_str();
    solve_cmd->add_option("--newton", sa.newton, "Newton refinement steps")->capture_default_str();
    solve_cmd->add_flag("--validate", sa.validate, "Append the analytic solution (constant forcing)");
    solve_cmd->add_option("--out", sa.out, "Output CSV")->required();

    InvertArgs ia;
    auto* inv_cmd = app.add_subcommand("invert", "Benchmark generator inversion over a sweep");
    inv_cmd->add_option("--alpha", ia.alpha, "Comma-separated orders")->capture_default_str();
    inv_cmd->add_option("--mass", ia.mass, "Comma-separated m")->capture_default_str();
    inv_cmd->add_option("--tmax", ia.tmax, "Final time T")->capture_default_str();
    inv_cmd->add_option("--log2n", ia.log2n, "List or range, e.g. 8..12")->capture_default_str();
    inv_cmd->add_option("--method", ia.method, "Comma-separated methods")->capture_default_str();
    inv_cmd->add_option("--tol", ia.tol, "Relative truncation tolerance")->capture_default_str();
    inv_cmd->add_option("--reps", ia.reps, "Timing repetitions (median)")->capture_default_str();
    inv_cmd->add_option("--reference-limit", ia.reference_limit,
                        "Largest log2n compared with the recurrence")->capture_default_str();
    inv_cmd->add_option("--out", ia.out, "Output CSV")->required();

    RankArgs ra;
    auto* rank_cmd = app.add_subcommand("rank-profile", "Effective QTT ranks over (alpha, tol) grids");
    rank_cmd->add_option("--target", ra.target, "kernel, coeffs, column or inverse")->capture_default_str();
    rank_cmd->add_option("--alpha-grid", ra.alpha_grid, "Comma-separated orders")->capture_default_str();
    rank_cmd->add_option("--tol-grid", ra.tol_grid, "Comma-separated tolerances")->capture_default_str();
    rank_cmd->add_option("--log2n", ra.log2n, "Mode count")->capture_default_str();
    rank_cmd->add_option("--mass", ra.mass, "m for column and inverse targets")->capture_default_str();
    rank_cmd->add_option("--tmax", ra.tmax, "T for column and inverse targets")->capture_default_str();
    rank_cmd->add_option("--out", ra.out, "Output CSV")->required();

    DecayArgs da;
    auto* decay_cmd = app.add_subcommand("decay-profile", "Decay of the inverse generator");
    decay_cmd->add_option("--alpha", da.alpha)->capture_default_str();
    decay_cmd->add_option("--mass", da.mass)->capture_default_str();
    decay_cmd->add_option("--tmax", da.tmax)->capture_default_str();
    decay_cmd->add_option("--log2n", da.log2n)->capture_default_str();
    decay_cmd->add_option("--method", da.method)->capture_default_str();
    decay_cmd->add_option("--tol", da.tol)->capture_default_str();
    decay_cmd->add_option("--samples", da.samples, "Log-spaced sample count")->capture_default_str();
    decay_cmd->add_option("--out", da.out, "Output CSV")->required();

    MlArgs ma;
    auto* ml_cmd = app.add_subcommand("validate-ml", "Grid error against the Mittag-Leffler solution");
    ml_cmd->add_option("--alpha", ma.alpha, "Comma-separated orders")->capture_default_str();
    ml_cmd->add_option("--mass", ma.mass)->capture_default_str();
    ml_cmd->add_option("--lambda", ma.lambda, "Constant forcing")->capture_default_str();
    ml_cmd->add_option("--y0", ma.y0)->capture_default_str();
    ml_cmd->add_option("--tmax", ma.tmax)->capture_default_str();
    ml_cmd->add_option("--log2n", ma.log2n, "List or range")->capture_default_str();
    ml_cmd->add_option("--method", ma.method)->capture_default_str();
    ml_cmd->add_option("--compare", ma.compare, "Second method; adds the max difference");
    ml_cmd->add_option("--tol", ma.tol)->capture_default_str();
    ml_cmd->add_option("--out", ma.out, "Output CSV")->required();

    LaplaceArgs la;
    auto* lap_cmd = app.add_subcommand("validate-laplace", "Discrete vs exact Laplace transform, f = t^(3/4)");
    lap_cmd->add_option("--alpha", la.alpha)->capture_default_str();
    lap_cmd->add_option("--mass", la.mass)->capture_default_str();
    lap_cmd->add_option("--y0", la.y0)->capture_default_str();
    lap_cmd->add_option("--tmax", la.tmax, "Comma-separated T")->capture_default_str();
    lap_cmd->add_option("--log2n", la.log2n, "List or range")->capture_default_str();
    lap_cmd->add_option("--s", la.s, "Comma-separated s > 0")->capture_default_str();
    lap_cmd->add_option("--method", la.method)->capture_default_str();
    lap_cmd->add_option("--tol", la.tol)->capture_default_str();
    lap_cmd->add_option("--out", la.out, "Output CSV")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? e.what() : app.help()) << "\n";
            return kExitOk;
        }
        err << error_json("usage", "ParseError", e.what()).dump() << "\n";
        return kExitInput;
    }

    try {
        json summary;
        if (*solve_cmd) summary = cmd_solve(sa);
        else if (*inv_cmd) summary = cmd_invert(ia);
        else if (*rank_cmd) summary = cmd_rank_profile(ra);
        else if (*decay_cmd) summary = cmd_decay_profile(da);
        else if (*ml_cmd) summary = cmd_validate_ml(ma);
        else summary = cmd_validate_laplace(la);
        out << summary.dump() << "\n";
        return kExitOk;
    } catch (const RankLimitExceeded& e) {
        auto j = error_json("numerical", "RankLimitExceeded", e.what());
        j["error"]["mode"] = e.mode();
        j["error"]["required_rank"] = e.required_rank();
        j["error"]["cap"] = e.cap();
        j["error"]["context"] = e.context();
        err << j.dump() << "\n";
        return kExitNumerical;
    } catch (const SingularOperator& e) {
        err << error_json("numerical", "SingularOperator", e.what()).dump() << "\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        err << error_json("numerical", "NumericalError", e.what()).dump() << "\n";
        return kExitNumerical;
    } catch (const InvalidArgument& e) {
        err << error_json("input", "InvalidArgument", e.what()).dump() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << error_json("numerical", "Error", e.what()).dump() << "\n";
        return kExitNumerical;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace qttv::cli
