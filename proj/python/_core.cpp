#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qttv/cli.hpp"

namespace py = pybind11;
using namespace qttv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw InvalidArgument("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::object inverse_to_py(const std::variant<std::vector<double>, TTVector>& v) {
    if (const auto* d = std::get_if<std::vector<double>>(&v)) return to_array(*d);
    return py::cast(std::get<TTVector>(v));
}

py::dict telemetry_dict(const InversionTelemetry& t) {
    py::dict d;
    d["method"] = t.method;
    d["seconds"] = t.seconds;
    d["max_rank"] = t.max_rank;
    d["round_calls"] = t.round_calls;
    d["level_max_rank"] = t.level_max_rank;
    d["newton_iterations"] = t.newton_iterations;
    d["conditioning_estimate"] = t.conditioning_estimate;
    return d;
}

InversionConfig make_config(const std::string& method, double tol, std::optional<std::size_t> max_rank,
                            std::size_t d0, std::optional<double> eps_pow, std::size_t newton) {
    InversionConfig cfg;
    cfg.method = parse_inversion_method(method);
    cfg.tol = Tolerance(tol, max_rank);
    cfg.d0 = d0;
    cfg.bini_eps_pow = eps_pow;
    cfg.newton_refine_steps = newton;
    cfg.validate();
    return cfg;
}

FracProblem make_problem(double alpha, double mass, double y0, double T, std::size_t log2n,
                         const py::object& forcing) {
    FracProblem p;
    p.alpha = alpha;
    p.mass = mass;
    p.y0 = y0;
    p.T = T;
    p.log2n = log2n;
    if (forcing.is_none()) {
        p.forcing = ConstantForcing{0.0};
    } else if (py::isinstance<py::float_>(forcing) || py::isinstance<py::int_>(forcing)) {
        p.forcing = ConstantForcing{forcing.cast<double>()};
    } else if (py::isinstance<py::str>(forcing)) {
        if (forcing.cast<std::string>() != "power") throw InvalidArgument("forcing string must be 'power'");
        p.forcing = PowerForcing{};
    } else {
        p.forcing = SampledForcing{to_vector(forcing.cast<Array>())};
    }
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "QTT inversion of triangular Toeplitz matrices and fractional Volterra solves";

    auto base = py::register_exception<Error>(m, "QttvError");
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<RankLimitExceeded>(m, "RankLimitExceeded", numerical.ptr());
    py::register_exception<SingularOperator>(m, "SingularOperator", numerical.ptr());

    py::class_<TTVector>(m, "TTVector")
        .def_static("from_dense", [](const Array& v, double tol, std::optional<std::size_t> max_rank) {
            const auto d = to_vector(v);
            return quantize<double>(d, Tolerance(tol, max_rank));
        }, py::arg("values"), py::arg("tol") = 1e-12, py::arg("max_rank") = py::none())
        .def_static("ones", &TTVector::ones, py::arg("d"))
        .def_property_readonly("modes", &TTVector::modes)
        .def_property_readonly("size", &TTVector::size)
        .def_property_readonly("ranks", &TTVector::ranks)
        .def_property_readonly("max_rank", &TTVector::max_rank)
        .def_property_readonly("storage", &TTVector::storage)
        .def("element", &TTVector::element, py::arg("k"))
        .def("to_dense", [](const TTVector& t) { return to_array(materialize(t)); })
        .def("norm", [](const TTVector& t) { return norm(t); })
        .def("round", [](const TTVector& t, double tol, std::optional<std::size_t> cap) {
            return round(t, Tolerance(tol, cap));
        }, py::arg("tol"), py::arg("max_rank") = py::none())
        .def("__repr__", [](const TTVector& t) {
            std::ostringstream s;
            s << "TTVector(modes=" << t.modes() << ", max_rank=" << t.max_rank() << ")";
            return s.str();
        });

    m.def("methods", [] {
        return std::vector<std::string>{"recurrence", "dense_dc", "dense_bini", "dense_bini_modified",
                                        "qtt_dc_conv", "qtt_dc_fft", "qtt_bini"};
    });

    m.def("invert", [](const py::object& generator, const std::string& method, double tol,
                       std::optional<std::size_t> max_rank, std::size_t d0, std::optional<double> eps_pow,
                       std::size_t newton) {
        const auto cfg = make_config(method, tol, max_rank, d0, eps_pow, newton);
        const auto op = py::isinstance<TTVector>(generator)
                            ? ToeplitzOperator(generator.cast<TTVector>())
                            : ToeplitzOperator(to_vector(generator.cast<Array>()));
        InversionResult r = [&] {
            py::gil_scoped_release release;
            return invert(op, cfg);
        }();
        return py::make_tuple(inverse_to_py(r.inverse), telemetry_dict(r.telemetry));
    }, py::arg("generator"), py::arg("method") = "qtt_dc_conv", py::arg("tol") = 1e-10,
       py::arg("max_rank") = 128, py::arg("d0") = 5, py::arg("eps_pow") = py::none(), py::arg("newton") = 0,
       "Inverse generator of a lower triangular Toeplitz matrix and telemetry");

    m.def("causal_convolve", [](const Array& a, const Array& b) {
        return to_array(causal_convolve_dense(to_vector(a), to_vector(b)));
    });

    m.def("system_generator", [](double alpha, double mass, double T, std::size_t log2n) {
        return to_array(system_generator(make_problem(alpha, mass, 1.0, T, log2n, py::none())));
    }, py::arg("alpha"), py::arg("mass"), py::arg("T"), py::arg("log2n"));

    m.def("quad_weight", &quad_weight, py::arg("j"), py::arg("k"), py::arg("alpha"));
    m.def("scheme_weight", &scheme_weight, py::arg("j"), py::arg("k"), py::arg("alpha"));

    m.def("solve", [](double alpha, double mass, double y0, double T, std::size_t log2n, const py::object& forcing,
                      const std::string& method, double tol, std::optional<std::size_t> max_rank) {
        const auto p = make_problem(alpha, mass, y0, T, log2n, forcing);
        const auto cfg = make_config(method, tol, max_rank, 5, std::nullopt, 0);
        SolveReport r = [&] {
            py::gil_scoped_release release;
            return solve(p, cfg);
        }();
        py::dict info;
        info["method"] = r.method;
        info["residual"] = r.residual;
        info["seconds_total"] = r.telemetry.seconds_total;
        info["max_rank"] = r.telemetry.max_rank;
        info["inversion"] = telemetry_dict(r.telemetry.inversion);
        return py::make_tuple(inverse_to_py(r.solution), info);
    }, py::arg("alpha"), py::arg("mass"), py::arg("y0"), py::arg("T"), py::arg("log2n"),
       py::arg("forcing") = py::none(), py::arg("method") = "qtt_dc_conv", py::arg("tol") = 1e-10,
       py::arg("max_rank") = 128,
       "Solution y_1..y_n; forcing is a constant, 'power' (t^0.75) or samples f(t_0..t_n)");

    m.def("analytic_constant_forcing", [](double alpha, double mass, double y0, double lambda, double T,
                                          std::size_t log2n) {
        return to_array(analytic_constant_forcing(make_problem(alpha, mass, y0, T, log2n, py::float_(lambda))));
    }, py::arg("alpha"), py::arg("mass"), py::arg("y0"), py::arg("lam"), py::arg("T"), py::arg("log2n"));

    m.def("mittag_leffler", [](double a1, double a2, double z) {
        const auto v = mittag_leffler(a1, a2, z);
        return py::make_tuple(v.value, v.error_estimate, v.reliable);
    }, py::arg("alpha1"), py::arg("alpha2"), py::arg("z"));

    m.def("laplace_discrete", [](const py::object& y, double y0, double h, const Array& s) {
        const auto sv = to_vector(s);
        if (py::isinstance<TTVector>(y)) return to_array(laplace_discrete(y.cast<TTVector>(), y0, h, sv));
        return to_array(laplace_discrete(to_vector(y.cast<Array>()), y0, h, sv));
    }, py::arg("y"), py::arg("y0"), py::arg("h"), py::arg("s"));
    m.def("laplace_exact_powerforcing", &laplace_exact_powerforcing, py::arg("alpha"), py::arg("mass"),
          py::arg("y0"), py::arg("s"));

    m.def("effective_rank", &cli::effective_rank, py::arg("v"));

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Runs a qttvolterra command; returns (exit code, stdout, stderr)");
}
