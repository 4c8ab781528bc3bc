#include "qttv/frac_volterra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qttv/tt_cross.hpp"

namespace qttv {

namespace {

constexpr double kMachEps = std::numeric_limits<double>::epsilon();
/// Below this index the power differences are evaluated directly.
constexpr std::uint64_t kSeriesSwitch = 8;
/// Largest estimated Mittag-Leffler error accepted for reference solutions.
constexpr double kAnalyticMaxError = 1e-8;

double elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

/// sum_{k >= first} binom(b, k) x^k for |x| <= 1/8, step 1 or 2 in k.
double binomial_tail(double b, double x, int first, int step) {
    double coef = 1.0;
    for (int k = 1; k <= first; ++k) coef *= (b - k + 1) / k;
    double xp = std::pow(x, first);
    double sum = 0.0;
    for (int k = first; k < first + 80; k += step) {
        const double term = coef * xp;
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
        for (int s = 1; s <= step; ++s) coef *= (b - (k + s) + 1) / (k + s);
        xp *= step == 1 ? x : x * x;
    }
    return sum;
}

/// (j-1)^b - (j-b) j^{b-1}, the unnormalized weight of the initial node.
double boundary_weight(std::uint64_t j, double b) {
    const double x = static_cast<double>(j);
    if (j < kSeriesSwitch) return std::pow(x - 1.0, b) - (x - b) * std::pow(x, b - 1.0);
    // j^b [(1 - 1/j)^b - 1 + b/j] = j^b sum_{k>=2} binom(b,k) (-1/j)^k.
    return std::pow(x, b) * binomial_tail(b, -1.0 / x, 2, 1);
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Problem

double FracProblem::forcing_at(std::uint64_t j) const {
    return std::visit(
        [&](const auto& f) -> double {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ConstantForcing>) {
                return f.lambda;
            } else if constexpr (std::is_same_v<F, PowerForcing>) {
                const double t = time(j);
                return t == 0.0 ? (f.exponent == 0.0 ? f.scale : 0.0) : f.scale * std::pow(t, f.exponent);
            } else {
                return f.values.at(j);
            }
        },
        forcing);
}

void FracProblem::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (!std::isfinite(mass) || !std::isfinite(y0)) throw InvalidArgument("mass and y0 must be finite");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive");
    if (log2n < 1 || log2n > 60) throw InvalidArgument("log2n must lie in [1, 60]");
    if (const auto* s = std::get_if<SampledForcing>(&forcing)) {
        if (s->values.size() != n() + 1)
            throw InvalidArgument("sampled forcing needs n + 1 = " + std::to_string(n() + 1) +
                                  " values, got " + std::to_string(s->values.size()));
    }
    if (const auto* pw = std::get_if<PowerForcing>(&forcing)) {
        if (pw->exponent < 0.0) throw InvalidArgument("power forcing exponent must be >= 0");
    }
}

std::vector<std::string> FracProblem::warnings() const {
    std::vector<std::string> w;
    if (mass >= 0.0) w.emplace_back("mass >= 0: the solution is not asymptotically stable");
    return w;
}

// ---------------------------------------------------------------------------
// Weights and the system

double second_difference_power(std::uint64_t p, double b) {
    if (p == 0) throw InvalidArgument("second_difference_power: p must be >= 1");
    const double x = static_cast<double>(p);
    if (p < kSeriesSwitch) return std::pow(x - 1.0, b) - 2.0 * std::pow(x, b) + std::pow(x + 1.0, b);
    // p^b [(1 - 1/p)^b - 2 + (1 + 1/p)^b] = 2 p^b sum_{k>=1} binom(b, 2k) p^{-2k}.
    return 2.0 * std::pow(x, b) * binomial_tail(b, 1.0 / x, 2, 2);
}

double scheme_weight(std::uint64_t j, std::uint64_t k, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("weight: alpha must lie in (0, 1]");
    if (j < 1 || k > j)
        throw InvalidArgument("weight: need 0 <= k <= j and j >= 1, got j = " + std::to_string(j) +
                              ", k = " + std::to_string(k));
    if (k == j) return 1.0;
    if (k == 0) return boundary_weight(j, alpha + 1.0);
    return second_difference_power(j - k, alpha + 1.0);
}

double quad_weight(std::uint64_t j, std::uint64_t k, double alpha) {
    return scheme_weight(j, k, alpha) / (alpha * (alpha + 1.0));
}

double scheme_gamma(const FracProblem& p) {
    return std::exp(p.alpha * std::log(p.h()) - std::lgamma(p.alpha + 2.0));
}

namespace {

double generator_entry(const FracProblem& p, double gamma, std::uint64_t k) {
    if (k == 0) return 1.0 - gamma * p.mass;
    return -gamma * p.mass * second_difference_power(k, p.alpha + 1.0);
}

/// Interior kernel c(0) = 1, c(p) = D2(p): the row weights of sum_{k>=1} w_{j,k} f_k.
double kernel_entry(double alpha, std::uint64_t k) {
    return k == 0 ? 1.0 : second_difference_power(k, alpha + 1.0);
}

}  // namespace

std::vector<double> system_generator(const FracProblem& p) {
    p.validate();
    const double gamma = scheme_gamma(p);
    std::vector<double> a(p.n());
    for (std::uint64_t k = 0; k < a.size(); ++k) a[k] = generator_entry(p, gamma, k);
    return a;
}

TTVector system_generator_qtt(const FracProblem& p, const Tolerance& tol) {
    p.validate();
    const double gamma = scheme_gamma(p);
    return qtt_from_function([&](std::uint64_t k) { return generator_entry(p, gamma, k); }, p.log2n,
                             tol);
}

std::vector<double> rhs_vector(const FracProblem& p) {
    p.validate();
    const std::uint64_t n = p.n();
    const double gamma = scheme_gamma(p);
    const double b1 = p.alpha + 1.0;
    const double start = p.mass * p.y0 + p.forcing_at(0);
    std::vector<double> kernel(n), f(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        kernel[i] = kernel_entry(p.alpha, i);
        f[i] = p.forcing_at(i + 1);
    }
    auto b = causal_convolve_dense(kernel, f);
    for (std::uint64_t i = 0; i < n; ++i)
        b[i] = p.y0 + gamma * (b[i] + boundary_weight(i + 1, b1) * start);
    return b;
}

TTVector rhs_vector_qtt(const FracProblem& p, const Tolerance& tol) {
    p.validate();
    const std::size_t d = p.log2n;
    const double gamma = scheme_gamma(p);
    const double b1 = p.alpha + 1.0;
    const double start = p.mass * p.y0 + p.forcing_at(0);

    const auto kernel = qtt_from_function([&](std::uint64_t k) { return kernel_entry(p.alpha, k); }, d, tol);
    TTVector f = std::holds_alternative<ConstantForcing>(p.forcing)
                     ? TTVector::constant(d, std::get<ConstantForcing>(p.forcing).lambda)
                     : qtt_from_function([&](std::uint64_t i) { return p.forcing_at(i + 1); }, d, tol);
    const auto boundary = qtt_from_function([&](std::uint64_t i) { return boundary_weight(i + 1, b1); }, d, tol);

    auto sum = axpy(qtt_convolve(kernel, f, tol), start, boundary);
    return round(axpy(TTVector::constant(d, p.y0), gamma, sum), tol);
}

// ---------------------------------------------------------------------------
// Solve

std::vector<double> SolveReport::to_dense() const {
    if (const auto* v = std::get_if<std::vector<double>>(&solution)) return *v;
    return materialize(std::get<TTVector>(solution));
}

double SolveReport::value(std::uint64_t j) const {
    if (const auto* v = std::get_if<std::vector<double>>(&solution)) return v->at(j);
    return std::get<TTVector>(solution).element(j);
}

SolveReport solve(const FracProblem& p, const InversionConfig& cfg) {
    p.validate();
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto rounds_before = round_call_count();
    SolveReport rep;
    rep.method = std::string(to_string(cfg.method));
    auto& tel = rep.telemetry;

    if (is_qtt_method(cfg.method)) {
        const auto conv = cfg.method == InversionMethod::qtt_dc_fft ? ConvolutionMethod::fourier
                                                                    : ConvolutionMethod::kazev;
        const auto a = system_generator_qtt(p, cfg.tol);
        const auto b = rhs_vector_qtt(p, cfg.tol);
        tel.seconds_setup = elapsed(t0);
        auto inv = invert(ToeplitzOperator(a), cfg);
        tel.inversion = inv.telemetry;
        const auto& binv = std::get<TTVector>(inv.inverse);
        auto y = qtt_convolve(binv, b, cfg.tol, conv);
        const auto r = axpy(qtt_convolve(a, y, cfg.tol, conv), -1.0, b);
        rep.residual = norm(r) / norm(b);
        tel.max_rank = std::max({tel.inversion.max_rank, a.max_rank(), b.max_rank(), y.max_rank()});
        rep.solution = std::move(y);
    } else {
        const auto a = system_generator(p);
        const auto b = rhs_vector(p);
        tel.seconds_setup = elapsed(t0);
        auto inv = invert(ToeplitzOperator(a), cfg);
        tel.inversion = inv.telemetry;
        auto y = causal_convolve_dense(std::get<std::vector<double>>(inv.inverse), b);
        auto r = causal_convolve_dense(a, y);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
        rep.residual = norm2(r) / norm2(b);
        rep.solution = std::move(y);
    }
    tel.round_calls = round_call_count() - rounds_before;
    tel.seconds_total = elapsed(t0);
    return rep;
}

// ---------------------------------------------------------------------------
// Analytic references

MittagLefflerValue mittag_leffler(double alpha1, double alpha2, double z) {
    if (!(alpha1 > 0.0 && alpha2 > 0.0))
        throw InvalidArgument("mittag_leffler: orders must be positive");
    if (!std::isfinite(z)) throw InvalidArgument("mittag_leffler: argument must be finite");
    MittagLefflerValue out;
    if (z == 0.0) {
        out.value = 1.0 / std::tgamma(alpha2);
        out.terms = 1;
        return out;
    }
    const double log_z = std::log(std::abs(z));
    const bool negative = z < 0.0;
    // Neumaier summation of the terms, each evaluated in log space.
    double sum = 0.0, comp = 0.0, abs_sum = 0.0;
    double prev_log = -std::numeric_limits<double>::infinity();
    constexpr std::size_t kMaxTerms = 200000;
    std::size_t j = 0;
    for (; j < kMaxTerms; ++j) {
        const double log_t = static_cast<double>(j) * log_z - std::lgamma(static_cast<double>(j) * alpha1 + alpha2);
        const double mag = std::exp(log_t);
        const double term = (negative && (j & 1)) ? -mag : mag;
        const double s = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - s) + term : (term - s) + sum;
        sum = s;
        abs_sum += mag;
        const bool decreasing = log_t < prev_log;
        prev_log = log_t;
        if (decreasing && mag <= 1e-17 * std::abs(sum + comp)) break;
        if (!std::isfinite(abs_sum)) break;
    }
    out.value = sum + comp;
    out.terms = j + 1;
    out.error_estimate = 4.0 * kMachEps * abs_sum / std::abs(out.value);
    out.reliable = std::abs(z) <= kMittagLefflerReliableRadius && j < kMaxTerms &&
                   std::isfinite(out.value) && out.error_estimate <= 1e-12;
    return out;
}

double analytic_constant_forcing_at(const FracProblem& p, double t) {
    const auto* c = std::get_if<ConstantForcing>(&p.forcing);
    if (!c) throw InvalidArgument("analytic_constant_forcing: forcing must be constant");
    if (!(t >= 0.0)) throw InvalidArgument("analytic_constant_forcing: t must be >= 0");
    const double ta = std::pow(t, p.alpha);
    if (p.mass == 0.0) return p.y0 + c->lambda * ta / std::tgamma(p.alpha + 1.0);
    const auto e = mittag_leffler(p.alpha, p.mass * ta);
    if (!(e.error_estimate <= kAnalyticMaxError))
        throw NumericalError("analytic_constant_forcing: Mittag-Leffler series unreliable at t = " +
                             std::to_string(t));
    return (p.y0 + c->lambda / p.mass) * e.value - c->lambda / p.mass;
}

std::vector<double> analytic_constant_forcing(const FracProblem& p) {
    p.validate();
    std::vector<double> y(p.n());
    for (std::uint64_t j = 1; j <= p.n(); ++j) y[j - 1] = analytic_constant_forcing_at(p, p.time(j));
    return y;
}

namespace {
void check_laplace_points(std::span<const double> s_values, double h) {
    if (!(h > 0.0)) throw InvalidArgument("laplace_discrete: h must be positive");
    for (double s : s_values)
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("laplace_discrete: s must be positive");
}
}  // namespace

std::vector<double> laplace_discrete(std::span<const double> y, double y0, double h,
                                     std::span<const double> s_values) {
    check_laplace_points(s_values, h);
    std::vector<double> out;
    out.reserve(s_values.size());
    for (double s : s_values) {
        double acc = y0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double x = static_cast<double>(i + 1) * h * s;
            if (x > 745.0) break;
            acc += std::exp(-x) * y[i];
        }
        out.push_back(h * acc);
    }
    return out;
}

std::vector<double> laplace_discrete(const TTVector& y, double y0, double h,
                                     std::span<const double> s_values) {
    check_laplace_points(s_values, h);
    std::vector<double> out;
    out.reserve(s_values.size());
    const auto ones = TTVector::ones(y.modes());
    for (double s : s_values) {
        const auto decay = scale_geometric_log(ones, -h * s);
        out.push_back(h * (y0 + std::exp(-h * s) * dot(y, decay)));
    }
    return out;
}

double laplace_exact_powerforcing(double alpha, double m, double y0, double s) {
    if (!(s > 0.0)) throw InvalidArgument("laplace_exact_powerforcing: s must be positive");
    const double denom = std::pow(s, alpha) - m;
    return y0 / (std::pow(s, 1.0 - alpha) * denom) + std::tgamma(1.75) / (std::pow(s, 1.75) * denom);
}

// ---------------------------------------------------------------------------
// Problem files

namespace {

double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw InvalidArgument(std::string("problem file: numeric field '") + key + "' is required");
    return j.at(key).get<double>();
}

}  // namespace

std::vector<double> load_forcing_csv(const std::filesystem::path& file, double h, std::uint64_t n) {
    std::ifstream in(file);
    if (!in) throw InvalidArgument("cannot open forcing file " + file.string());
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double t = 0.0, f = 0.0;
        if (!(row >> t >> f)) {
            if (values.empty() && line_no == 1) continue;  // header
            throw InvalidArgument(file.string() + ":" + std::to_string(line_no) + ": expected 't, f'");
        }
        const double want = static_cast<double>(values.size()) * h;
        if (std::abs(t - want) > 1e-9 * h)
            throw InvalidArgument(file.string() + ":" + std::to_string(line_no) + ": t = " +
                                  std::to_string(t) + " is not on the grid (expected " +
                                  std::to_string(want) + ")");
        values.push_back(f);
    }
    if (values.size() != n + 1)
        throw InvalidArgument(file.string() + ": expected " + std::to_string(n + 1) + " rows, got " +
                              std::to_string(values.size()));
    return values;
}

FracProblem problem_from_json_text(const std::string& text, const std::filesystem::path& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("problem file: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("problem file: top level must be an object");
    for (const auto& [key, _] : j.items())
        if (key != "alpha" && key != "mass" && key != "y0" && key != "T" && key != "log2n" && key != "forcing")
            throw InvalidArgument("problem file: unknown field '" + key + "'");

    FracProblem p;
    p.alpha = require_number(j, "alpha");
    p.mass = require_number(j, "mass");
    p.y0 = require_number(j, "y0");
    p.T = require_number(j, "T");
    if (!j.contains("log2n") || !j.at("log2n").is_number_unsigned())
        throw InvalidArgument("problem file: 'log2n' must be a non-negative integer");
    p.log2n = j.at("log2n").get<std::size_t>();
    if (!j.contains("forcing") || !j.at("forcing").is_object())
        throw InvalidArgument("problem file: 'forcing' object is required");
    const auto& f = j.at("forcing");
    const std::string kind = f.value("kind", "");
    if (kind == "constant") {
        p.forcing = ConstantForcing{require_number(f, "lambda")};
    } else if (kind == "power") {
        PowerForcing pw;
        pw.exponent = f.contains("exponent") ? require_number(f, "exponent") : 0.75;
        pw.scale = f.contains("scale") ? require_number(f, "scale") : 1.0;
        p.forcing = pw;
    } else if (kind == "samples") {
        if (!f.contains("path") || !f.at("path").is_string())
            throw InvalidArgument("problem file: samples forcing needs a 'path'");
        if (p.log2n < 1 || p.log2n > 30) throw InvalidArgument("problem file: sampled forcing needs log2n in [1, 30]");
        std::filesystem::path path = f.at("path").get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        p.forcing = SampledForcing{load_forcing_csv(path, p.h(), p.n())};
    } else {
        throw InvalidArgument("problem file: forcing kind must be constant, power or samples");
    }
    p.validate();
    return p;
}

FracProblem load_problem(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidArgument("cannot open problem file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return problem_from_json_text(ss.str(), file.parent_path());
}

}  // namespace qttv
