#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otfs/channel.hpp"
#include "otfs/estimator.hpp"
#include "otfs/grid.hpp"
#include "otfs/harness.hpp"
#include "otfs/modem.hpp"

namespace py = pybind11;
using namespace otfs;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

DDFrame to_frame(const ComplexArray& a) {
    if (a.ndim() != 2) throw ConfigError("expected a 2-D (delay, Doppler) array");
    DDFrame f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), f.cells().begin());
    return f;
}

ComplexArray from_frame(const DDFrame& f) {
    ComplexArray out(std::vector<py::ssize_t>{f.delay_bins(), f.doppler_bins()});
    std::copy(f.cells().begin(), f.cells().end(), out.mutable_data());
    return out;
}

std::vector<Complex> to_vector(const ComplexArray& a) {
    if (a.ndim() != 1) throw ConfigError("expected a 1-D sample array");
    return {a.data(), a.data() + a.size()};
}

ComplexArray from_vector(const std::vector<Complex>& v) {
    ComplexArray out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

GridConfig grid_of(int M, int N) {
    GridConfig g;
    g.M = M;
    g.N = N;
    g.validate();
    return g;
}

}  // namespace

PYBIND11_MODULE(_otfs_amb, m) {
    m.doc() = "OTFS link simulator with pilot-aided Doppler ambiguity estimation";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<GridConfig>(m, "GridConfig")
        .def(py::init<>())
        .def_readwrite("M", &GridConfig::M)
        .def_readwrite("N", &GridConfig::N)
        .def_readwrite("delta_f", &GridConfig::delta_f)
        .def_readwrite("f_c", &GridConfig::f_c)
        .def("validate", &GridConfig::validate);

    py::class_<PathParams>(m, "PathParams")
        .def(py::init([](Complex gain, int delay, double doppler) { return PathParams{gain, delay, doppler}; }),
             py::arg("gain"), py::arg("delay"), py::arg("doppler"))
        .def_readwrite("gain", &PathParams::gain)
        .def_readwrite("delay", &PathParams::delay)
        .def_readwrite("doppler", &PathParams::doppler)
        .def("__repr__", [](const PathParams& p) {
            std::ostringstream os;
            os << "PathParams(gain=" << p.gain << ", delay=" << p.delay << ", doppler=" << p.doppler << ")";
            return os.str();
        });

    py::class_<DopplerDecomposition>(m, "DopplerDecomposition")
        .def_readonly("k_base", &DopplerDecomposition::k_base)
        .def_readonly("k_base_int", &DopplerDecomposition::k_base_int)
        .def_readonly("kappa", &DopplerDecomposition::kappa)
        .def_readonly("n_amb", &DopplerDecomposition::n_amb)
        .def("recompose", &DopplerDecomposition::recompose);

    m.def("decompose_doppler", &decompose_doppler, py::arg("k"), py::arg("N"));
    m.def("ambiguity_phase", &ambiguity_phase, py::arg("n_amb"), py::arg("m"), py::arg("M"));
    m.def("max_unambiguous_velocity", &max_unambiguous_velocity, py::arg("cfg") = GridConfig{});
    m.def("velocity_to_normalized_doppler", &velocity_to_normalized_doppler, py::arg("velocity"),
          py::arg("cfg") = GridConfig{});

    m.def("modulate", [](const ComplexArray& x) {
        const auto f = to_frame(x);
        return from_vector(modulate(f, grid_of(f.delay_bins(), f.doppler_bins())));
    }, py::arg("frame"));
    m.def("demodulate", [](const ComplexArray& s, int M, int N) {
        return from_frame(demodulate(to_vector(s), grid_of(M, N)));
    }, py::arg("samples"), py::arg("M"), py::arg("N"));
    m.def("apply_channel", [](const ComplexArray& s, const std::vector<PathParams>& paths, int M, int N) {
        return from_vector(apply_channel(to_vector(s), ChannelRealization{paths}, grid_of(M, N)));
    }, py::arg("samples"), py::arg("paths"), py::arg("M"), py::arg("N"));
    m.def("dd_channel_response", [](const ComplexArray& x, const std::vector<PathParams>& paths) {
        const auto f = to_frame(x);
        return from_frame(dd_channel_response(f, paths, grid_of(f.delay_bins(), f.doppler_bins())));
    }, py::arg("frame"), py::arg("paths"));
    m.def("oracle_dd_response", [](const ComplexArray& x, const std::vector<PathParams>& paths) {
        const auto f = to_frame(x);
        return from_frame(oracle_dd_response(f, ChannelRealization{paths}, grid_of(f.delay_bins(), f.doppler_bins())));
    }, py::arg("frame"), py::arg("paths"));
    m.def("phase_compensate", [](const ComplexArray& y, int n_amb) {
        return from_frame(phase_compensate(to_frame(y), n_amb));
    }, py::arg("frame"), py::arg("n_amb"));

    py::class_<PathEstimate>(m, "PathEstimate")
        .def_readonly("gain", &PathEstimate::gain_hat)
        .def_readonly("delay", &PathEstimate::delay_hat)
        .def_readonly("k_base_int", &PathEstimate::k_base_int_hat)
        .def_readonly("kappa", &PathEstimate::kappa_hat)
        .def_readonly("n_amb", &PathEstimate::n_amb_hat)
        .def_readonly("k_full", &PathEstimate::k_full_hat)
        .def_readonly("ambiguity_defaulted", &PathEstimate::ambiguity_defaulted)
        .def("as_path", &PathEstimate::as_path);

    m.def("pilot_frame", [](const std::string& scheme, int n_pilots, double pdr_db, int l_max, double k_max,
                            int M, int N) {
        ChannelSpec spec;
        spec.l_max = l_max;
        spec.k_max = k_max;
        return from_frame(build_layout(parse_pilot_scheme(scheme), grid_of(M, N), spec, n_pilots, pdr_db).pilot_frame());
    }, py::arg("scheme") = "ep-gz", py::arg("n_pilots") = 2, py::arg("pdr_db") = 25.0, py::arg("l_max") = 4,
       py::arg("k_max") = 79.0, py::arg("M") = 64, py::arg("N") = 32);

    m.def("estimate_paths", [](const ComplexArray& y, const std::string& scheme, const std::string& mode,
                               int n_paths, int n_pilots, double pdr_db, int l_max, double k_max, double epsilon) {
        const auto f = to_frame(y);
        const auto g = grid_of(f.delay_bins(), f.doppler_bins());
        ChannelSpec spec;
        spec.l_max = l_max;
        spec.k_max = k_max;
        const auto layout = build_layout(parse_pilot_scheme(scheme), g, spec, n_pilots, pdr_db);
        EstimatorConfig est;
        est.mode = parse_estimator_mode(mode);
        est.n_paths = n_paths;
        est.epsilon = epsilon;
        est.validate();
        return estimate_all_paths(f, layout, est, g, k_max);
    }, py::arg("received"), py::arg("scheme") = "ep-gz", py::arg("mode") = "proposed", py::arg("n_paths") = 4,
       py::arg("n_pilots") = 2, py::arg("pdr_db") = 25.0, py::arg("l_max") = 4, py::arg("k_max") = 79.0,
       py::arg("epsilon") = 0.1);

    m.def("run_csv", [](const std::string& config_json) {
        const auto cfg = parse_config(config_json);
        std::vector<CellResult> rows;
        {
            py::gil_scoped_release release;
            rows = run_single(cfg);
        }
        std::ostringstream os;
        write_csv(os, rows, cfg);
        return os.str();
    }, py::arg("config_json"), "Runs the configured scheme and mode over its SNR grid; returns CSV text.");
    m.def("sweep_csv", [](const std::string& config_json) {
        const auto cfg = parse_config(config_json);
        std::vector<CellResult> rows;
        {
            py::gil_scoped_release release;
            rows = run_sweep_cells(cfg);
        }
        std::ostringstream os;
        write_csv(os, rows, cfg);
        return os.str();
    }, py::arg("config_json"));
    m.def("default_config_json", [] { return config_to_json(ExperimentConfig{}); });
    m.def("oracle_check", [](int draws, std::uint64_t seed) {
        const auto r = run_oracle_check(draws, seed);
        return py::dict(py::arg("draws") = r.draws, py::arg("time_domain") = r.max_error_time_domain,
                        py::arg("closed_form") = r.max_error_closed_form, py::arg("matrix") = r.max_error_matrix,
                        py::arg("worst") = r.worst());
    }, py::arg("draws") = 20, py::arg("seed") = 2024);
    m.def("op_count", [](const std::string& config_json) {
        const auto cfg = parse_config(config_json);
        py::dict out;
        for (const auto& row : op_count_table(cfg)) {
            out[py::str(to_string(row.mode))] = py::dict(
                py::arg("coarse_add") = row.ops.coarse_additions, py::arg("pair_mul") = row.ops.pairwise_multiplications,
                py::arg("fine_add") = row.ops.fine_additions, py::arg("fine_mul") = row.ops.fine_multiplications);
        }
        return out;
    }, py::arg("config_json") = "{}");
    m.attr("__version__") = version_string();
}
