#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "simarr/cli.hpp"
#include "simarr/config_io.hpp"
#include "simarr/error.hpp"
#include "simarr/inversion.hpp"
#include "simarr/sim.hpp"
#include "simarr/transforms.hpp"

namespace py = pybind11;
using namespace simarr;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

py::dict root_dict(const RootResult& r) {
    py::dict d;
    d["level"] = r.level;
    d["root"] = r.root;
    d["ustar"] = r.ustar;
    d["residual"] = r.residual;
    d["iterations"] = r.iterations;
    return d;
}

py::tuple estimate_tuple(const SimEstimate& e) { return py::make_tuple(e.estimate, e.std_error, e.n_cycles); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Coupled queues with simultaneous arrivals";

    static py::exception<Error> error(m, "SimarrError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<LoadedConfig>(m, "Config")
        .def_static("from_json", &load_config_text, py::arg("text"))
        .def_static("load", &load_config, py::arg("path"))
        .def_property_readonly("lam", [](const LoadedConfig& c) { return c.config.lambda(); })
        .def_property_readonly("dimension", [](const LoadedConfig& c) { return c.config.dimension(); })
        .def_property_readonly("loads", [](const LoadedConfig& c) { return to_vector(c.config.loads()); })
        .def_property_readonly("speeds",
                               [](const LoadedConfig& c) { return to_vector(c.config.original_speeds()); })
        .def_property_readonly("hash", [](const LoadedConfig& c) { return c.hash; })
        .def_property_readonly("canonical_json", [](const LoadedConfig& c) { return c.canonical_json; })
        .def("__repr__", [](const LoadedConfig& c) {
            std::ostringstream os;
            os << "Config(lambda=" << c.config.lambda() << ", " << c.config.service().describe() << ")";
            return os.str();
        });

    m.def(
        "psi",
        [](const LoadedConfig& c, const std::vector<cplx>& s) {
            return (s.size() == 2 ? psi2(c.config, s[0], s[1]) : psiK(c.config, s)).value;
        },
        py::arg("config"), py::arg("s"), "Joint workload transform E exp(-sum s_i V_i), unit-speed units.");

    m.def(
        "rouche_root",
        [](const LoadedConfig& c, const std::vector<cplx>& s) { return root_dict(fixed_point_U(c.config, s)); },
        py::arg("config"), py::arg("s"));

    m.def(
        "survival",
        [](const LoadedConfig& c, double u1, double u2, const std::string& method) {
            const auto params = method == "gs" ? InversionParams::gaver_stehfest() : InversionParams::euler();
            const auto r = invert2d(c.config, u1, u2, params);
            return py::make_tuple(r.value, r.error_estimate, r.clamped);
        },
        py::arg("config"), py::arg("u1"), py::arg("u2"), py::arg("method") = "euler",
        "P(V1 <= u1, V2 <= u2) with its error estimate and clamp flag.");

    m.def(
        "simulate",
        [](const LoadedConfig& c, std::uint64_t arrivals, std::uint64_t seed, std::size_t pivot) {
            LindleyOptions opts;
            opts.pivot = pivot;
            const auto s = run_lindley(c.config, arrivals, seed, opts);
            py::array_t<double> v({s.rows(), s.dimension});
            std::copy(s.values.begin(), s.values.end(), v.mutable_data());
            py::array_t<bool> regen(static_cast<py::ssize_t>(s.rows()));
            auto flags = regen.mutable_unchecked<1>();
            for (std::size_t i = 0; i < s.rows(); ++i) flags(i) = s.regeneration[i] != 0;
            return py::make_tuple(v, regen);
        },
        py::arg("config"), py::arg("arrivals"), py::arg("seed"), py::arg("pivot") = 0);

    m.def(
        "estimate_lst",
        [](const LoadedConfig& c, const std::vector<std::vector<double>>& grid, std::uint64_t arrivals,
           std::uint64_t seed) {
            py::list out;
            for (const auto& e : estimate_lst_stream(c.config, grid, arrivals, seed)) out.append(estimate_tuple(e));
            return out;
        },
        py::arg("config"), py::arg("grid"), py::arg("arrivals"), py::arg("seed"));

    m.def(
        "verify_duality",
        [](std::uint64_t seed, std::uint64_t index) {
            const auto dc = random_duality_case(seed, index);
            return verify_duality(dc.config, dc.u, dc.n_claims, dc.seed).all_hold();
        },
        py::arg("seed"), py::arg("index"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = dispatch(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs one command line; returns (exit code, stdout, stderr).");

    m.attr("__version__") = SIMARR_VERSION;
}
