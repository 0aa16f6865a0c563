#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "twinbeam/pipeline.hpp"

namespace py = pybind11;
using namespace twinbeam;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using RArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <typename T, typename A>
Grid<T> to_grid(const A& a, double pitch = 1.0, Plane plane = Plane::CellCenter) {
    if (a.ndim() != 2) throw ContractError("expected a 2-D array");
    Grid<T> g(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), pitch, plane);
    std::copy(a.data(), a.data() + a.size(), g.data());
    return g;
}

template <typename T>
py::array_t<T> to_array(const Grid<T>& g) {
    py::array_t<T> a({g.rows(), g.cols()});
    std::copy(g.data(), g.data() + g.size(), a.mutable_data());
    return a;
}

TargetSpec target_from(const CArray& t, const MArray& signal, std::optional<MArray> noise) {
    Mask s = to_grid<std::uint8_t>(signal);
    Mask n(s.rows(), s.cols());
    if (noise)
        n = to_grid<std::uint8_t>(*noise);
    else
        for (std::size_t i = 0; i < s.size(); ++i) n[i] = s[i] ? 0 : 1;
    return make_target(to_grid<cplx>(t, 1.0, Plane::FarField), std::move(s), std::move(n));
}

py::dict squeezing_dict(const SqueezingEstimate& s) {
    py::dict d;
    d["variance_ratio"] = s.variance_ratio;
    d["db"] = s.db;
    d["ci_low_db"] = s.ci_low_db;
    d["ci_high_db"] = s.ci_high_db;
    d["samples"] = s.samples;
    d["wide_confidence"] = s.wide_confidence;
    return d;
}

ComplexField hologram_pump(const PipelineConfig& cfg, const MArray& levels, double delta_phase) {
    QuantizedHologram q{to_grid<std::uint8_t>(levels)};
    if (q.levels.rows() != cfg.n || q.levels.cols() != cfg.n) throw ConfigError("hologram size differs from grid.n");
    HologramInfo info;
    info.disk = pipeline_disk(cfg, cfg.disk_reference);
    info.pitch = cfg.pump_pitch();
    info.pad_factor = cfg.pad_factor;
    info.reference_disk_value = cfg.disk_reference;
    return modulated_pump(pump_amplitude(cfg), hologram_phase(q, info, delta_phase).phase);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Twin-beam correlation imaging core";

    static py::exception<Error> base(m, "TwinbeamError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<BoundsError>(m, "BoundsError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<SizingError>(m, "SizingError", base.ptr());
    py::register_exception<WraparoundError>(m, "WraparoundError", base.ptr());

    py::class_<OpticalConfig>(m, "OpticalConfig")
        .def(py::init<>())
        .def_readwrite("wavelength", &OpticalConfig::wavelength)
        .def_readwrite("focal_length", &OpticalConfig::focal_length)
        .def_readwrite("cell_length", &OpticalConfig::cell_length)
        .def_readwrite("pump_waist_radius", &OpticalConfig::pump_waist_radius)
        .def_readwrite("probe_waist_radius", &OpticalConfig::probe_waist_radius)
        .def_readwrite("probe_pump_angle", &OpticalConfig::probe_pump_angle)
        .def_readwrite("emccd_pixel", &OpticalConfig::emccd_pixel)
        .def_readwrite("slm_pixel", &OpticalConfig::slm_pixel)
        .def_readwrite("gain", &OpticalConfig::gain)
        .def("validate", &OpticalConfig::validate);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init(&default_pipeline_config))
        .def_static("parse", &parse_config, py::arg("text"), py::arg("overrides") = std::vector<std::string>{})
        .def_static("load", &load_config, py::arg("path"), py::arg("overrides") = std::vector<std::string>{})
        .def("dump", &dump_config)
        .def("validate", &PipelineConfig::validate)
        .def("pump_pitch", &PipelineConfig::pump_pitch)
        .def_readwrite("optics", &PipelineConfig::optics)
        .def_readwrite("n", &PipelineConfig::n)
        .def_readwrite("pad_factor", &PipelineConfig::pad_factor)
        .def_readwrite("disk_radius", &PipelineConfig::disk_radius)
        .def_readwrite("delta_phase", &PipelineConfig::delta_phase)
        .def_readwrite("n_pairs", &PipelineConfig::n_pairs)
        .def_readwrite("seed", &PipelineConfig::seed);

    m.def(
        "pump_self_convolution",
        [](const CArray& pump, double pitch, std::size_t pad_factor) {
            SelfConvolutionOptions opt;
            opt.pad_factor = pad_factor;
            const ConvolutionMap phi = pump_self_convolution(to_grid<cplx>(pump, pitch), opt);
            return py::make_tuple(to_array(phi.field), phi.q_pitch);
        },
        py::arg("pump"), py::arg("pitch"), py::arg("pad_factor") = 2,
        "Phi on the centred transverse-momentum grid and its pitch in rad/m.");

    m.def(
        "predict_cross_correlation",
        [](const CArray& pump, double pitch, double delta_phase, const OpticalConfig& optics, std::size_t roi_rows,
           std::size_t roi_cols, std::size_t pad_factor) {
            PredictOptions opt;
            opt.roi_rows = roi_rows;
            opt.roi_cols = roi_cols;
            opt.pad_factor = pad_factor;
            return to_array(predict_cross_correlation(to_grid<cplx>(pump, pitch), delta_phase, optics, opt).values);
        },
        py::arg("pump"), py::arg("pitch"), py::arg("delta_phase") = 0.0, py::arg("optics") = OpticalConfig{},
        py::arg("roi_rows") = 81, py::arg("roi_cols") = 81, py::arg("pad_factor") = 2);

    m.def(
        "forward_model",
        [](const CArray& e0, const RArray& phase, std::size_t pad_factor) {
            return to_array(forward_model(to_grid<cplx>(e0), to_grid<double>(phase), pad_factor));
        },
        py::arg("e0"), py::arg("phase"), py::arg("pad_factor") = 2);

    m.def(
        "cost",
        [](const CArray& e_out, const CArray& target, const MArray& signal, double d) {
            return cost(to_grid<cplx>(e_out), target_from(target, signal, std::nullopt), d);
        },
        py::arg("e_out"), py::arg("target"), py::arg("signal"), py::arg("d") = 10.0);

    m.def(
        "quantize_8bit", [](const RArray& phase) { return to_array(quantize_8bit(to_grid<double>(phase)).levels); },
        py::arg("phase"));
    m.def(
        "dequantize", [](const MArray& levels) { return to_array(dequantize({to_grid<std::uint8_t>(levels)})); },
        py::arg("levels"));
    m.def(
        "zero_order_fraction",
        [](const CArray& e0, const RArray& phase) {
            return zero_order_fraction(to_grid<cplx>(e0), to_grid<double>(phase));
        },
        py::arg("e0"), py::arg("phase"));

    m.def(
        "glyph_target",
        [](std::size_t m_, double scale, double thickness, double blur, double gap, int dilation) {
            const TargetSpec t = glyph_target(m_, GlyphOptions{scale, thickness, blur, gap, dilation});
            return py::make_tuple(to_array(t.target), to_array(t.signal));
        },
        py::arg("m") = 256, py::arg("scale") = 1.15, py::arg("thickness") = 10.0, py::arg("blur") = 1.5,
        py::arg("gap") = 1.0, py::arg("dilation") = 4, "Complex target and signal mask on an m x m grid.");

    m.def(
        "optimize",
        [](const PipelineConfig& cfg) {
            const TargetSpec target = build_target(cfg);
            OptimizeOutput out;
            {
                py::gil_scoped_release release;
                out = run_optimize(cfg, target);
            }
            py::dict d;
            d["levels"] = to_array(out.quantized.levels);
            d["phase"] = to_array(out.final_phase.phase);
            d["overlap"] = out.result.final_overlap;
            d["iterations"] = out.result.iterations;
            d["converged"] = out.result.converged;
            d["line_search_failed"] = out.result.line_search_failed;
            d["cost_history"] = out.result.cost_history;
            d["zero_order_fraction"] = out.dc_fraction;
            return d;
        },
        py::arg("config"), "Optimize the hologram for the configured target.");

    m.def(
        "hologram_pump",
        [](const PipelineConfig& cfg, const MArray& levels, double delta_phase) {
            return to_array(hologram_pump(cfg, levels, delta_phase));
        },
        py::arg("config"), py::arg("levels"), py::arg("delta_phase") = 0.0,
        "Pump field after the 8-bit hologram with the disk at reference + delta_phase.");

    m.def(
        "predict",
        [](const PipelineConfig& cfg, const CArray& pump, double delta_phase) {
            return to_array(run_predict(cfg, to_grid<cplx>(pump, cfg.pump_pitch()), delta_phase).values);
        },
        py::arg("config"), py::arg("pump"), py::arg("delta_phase") = 0.0);

    m.def(
        "simulate_and_decode",
        [](const PipelineConfig& cfg, const CArray& pump, double delta_phase, std::optional<std::size_t> n_pairs) {
            const ComplexField p = to_grid<cplx>(pump, cfg.pump_pitch());
            DecodeResult r;
            {
                py::gil_scoped_release release;
                r = simulate_and_decode(make_simulator(cfg, p, delta_phase), n_pairs.value_or(cfg.n_pairs),
                                        cfg.analysis);
            }
            py::dict d;
            d["cross"] = to_array(r.cross.values);
            d["auto_probe"] = to_array(r.auto_probe.values);
            d["auto_conj"] = to_array(r.auto_conj.values);
            d["n_pairs"] = r.n_pairs;
            d["negative_fraction"] = r.negative_fraction();
            d["squeezing"] = squeezing_dict(r.squeezing);
            return d;
        },
        py::arg("config"), py::arg("pump"), py::arg("delta_phase") = 0.0, py::arg("n_pairs") = py::none());

    m.def(
        "fidelity",
        [](const PipelineConfig& cfg, const RArray& map) {
            const RealField v = to_grid<double>(map);
            const RenderedTarget rt = render_target(build_target(cfg), v.rows(), v.cols());
            const FidelityReport f = fidelity(CorrelationMap{v, 1.0}, rt);
            return py::make_tuple(f.coefficient, f.peak_to_background);
        },
        py::arg("config"), py::arg("map"), "Pearson coefficient and peak/background against the configured target.");

    m.def(
        "temporal_difference_noise",
        [](double gain, double transmission) {
            const TemporalNoise t = temporal_difference_noise(gain, transmission);
            return py::make_tuple(t.variance_ratio, t.variance_ratio_db);
        },
        py::arg("gain"), py::arg("transmission") = 1.0);

    m.def(
        "sample_photodiode_trace",
        [](double gain, double transmission, double mean_photons, double background, std::size_t n,
           std::uint64_t seed) {
            const PhotodiodeTrace t = sample_photodiode_trace(gain, transmission, mean_photons, background, n, seed);
            return py::make_tuple(py::array_t<double>(t.probe.size(), t.probe.data()),
                                  py::array_t<double>(t.conj.size(), t.conj.data()));
        },
        py::arg("gain"), py::arg("transmission"), py::arg("mean_photons"), py::arg("background"), py::arg("n"),
        py::arg("seed"));

    m.def(
        "estimate_squeezing",
        [](const RArray& probe, const RArray& conj, double background) {
            if (probe.ndim() != 1 || conj.ndim() != 1 || probe.size() != conj.size())
                throw ContractError("estimate_squeezing: probe and conj must be 1-D arrays of equal length");
            PhotodiodeTrace t;
            t.probe.assign(probe.data(), probe.data() + probe.size());
            t.conj.assign(conj.data(), conj.data() + conj.size());
            t.background_mean = background;
            return squeezing_dict(estimate_squeezing(t));
        },
        py::arg("probe"), py::arg("conj"), py::arg("background") = 0.0);
}
