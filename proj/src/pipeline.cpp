#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "twinbeam/pipeline.hpp"

namespace twinbeam {

namespace fs = std::filesystem;

ComplexField pump_amplitude(const PipelineConfig& cfg) {
    const double pitch = cfg.pump_pitch();
    const double w = cfg.optics.pump_waist_radius;
    ComplexField e0(cfg.n, pitch, Plane::CellCenter);
    const auto mid = static_cast<double>(cfg.n / 2);
    for (std::size_t r = 0; r < cfg.n; ++r)
        for (std::size_t c = 0; c < cfg.n; ++c) {
            const double y = (static_cast<double>(r) - mid) * pitch;
            const double x = (static_cast<double>(c) - mid) * pitch;
            e0(r, c) = std::exp(-(x * x + y * y) / (w * w));
        }
    return e0;
}

TargetSpec build_target(const PipelineConfig& cfg) {
    const std::size_t m = cfg.n * cfg.pad_factor;
    if (cfg.target_kind == "glyph") return glyph_target(m, cfg.glyph);
    const GrayImage amp = read_pgm(cfg.target_image);
    if (cfg.target_phase_image.empty())
        return image_target(amp, nullptr, m, cfg.target_threshold, cfg.glyph.dilation);
    const GrayImage ph = read_pgm(cfg.target_phase_image);
    return image_target(amp, &ph, m, cfg.target_threshold, cfg.glyph.dilation);
}

ConstantDisk pipeline_disk(const PipelineConfig& cfg, double value) {
    ConstantDisk d;
    d.center_row = d.center_col = cfg.n / 2;
    d.radius = cfg.disk_radius;
    d.value = value;
    return d;
}

OptimizeOutput run_optimize(const PipelineConfig& cfg, const TargetSpec& target) {
    const ComplexField e0 = pump_amplitude(cfg);
    const ConstantDisk disk = pipeline_disk(cfg, cfg.disk_reference);
    PhasePattern init;
    init.phase = cfg.init == "defocus" ? defocus_initial_phase(e0, target, cfg.pad_factor)
                                       : random_initial_phase(cfg.n, cfg.init_seed);
    init = apply_constant_phase_disk(init, disk);

    OptimizerConfig opt = cfg.optimizer;
    opt.pad_factor = cfg.pad_factor;
    OptimizeOutput out;
    out.result = conjugate_gradient_minimize(e0, target, init, opt);
    out.final_phase = out.result.phase;
    out.info.compression = 1.0;
    if (cfg.compress) {
        const CompressionResult cr =
            phase_compress(out.result.phase, e0, cfg.compress_lo, cfg.compress_hi, cfg.compress_samples);
        out.final_phase = cr.phase;
        out.info.compression = cr.factor;
    }
    out.quantized = quantize_8bit(out.final_phase.phase);
    out.info.disk = disk;
    out.info.pitch = cfg.pump_pitch();
    out.info.pad_factor = cfg.pad_factor;
    out.info.reference_disk_value = cfg.disk_reference;
    out.info.cost_history = out.result.cost_history;
    out.dc_fraction = zero_order_fraction(e0, out.final_phase.phase);
    return out;
}

void write_optimize_outputs(const fs::path& dir, const OptimizeOutput& out) {
    fs::create_directories(dir);
    write_hologram(dir / "hologram.pgm", out.quantized, out.info);
    std::ofstream csv(dir / "cost_history.csv");
    if (!csv) throw IoError("cannot write " + (dir / "cost_history.csv").string());
    csv.precision(17);
    csv << "iteration,cost\n";
    for (const auto& [it, c] : out.result.cost_history) csv << it << ',' << c << '\n';
}

PhasePattern hologram_phase(const QuantizedHologram& q, const HologramInfo& info, double delta_phase) {
    PhasePattern p;
    p.phase = dequantize(q);
    p.phase.set_pitch(info.pitch);
    p.phase.set_plane(Plane::SLM);
    ConstantDisk disk = info.disk;
    disk.value = info.reference_disk_value + delta_phase;
    return apply_constant_phase_disk(p, disk);
}

ComplexField modulated_pump(const ComplexField& amplitude, const RealField& phase) {
    if (amplitude.rows() != phase.rows() || amplitude.cols() != phase.cols()) throw ContractError("modulated_pump: shape mismatch");
    ComplexField out(amplitude.rows(), amplitude.pitch(), Plane::CellCenter);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = amplitude[i] * std::polar(1.0, phase[i]);
    return out;
}

CorrelationMap run_predict(const PipelineConfig& cfg, const ComplexField& pump, double delta_phase) {
    PredictOptions opt;
    opt.roi_rows = 2 * static_cast<std::size_t>(cfg.analysis.range_rows) + 1;
    opt.roi_cols = 2 * static_cast<std::size_t>(cfg.analysis.range_cols) + 1;
    opt.pad_factor = cfg.pad_factor;
    return predict_cross_correlation(pump, delta_phase, cfg.optics, opt);
}

std::shared_ptr<const FluctuationSampler> make_sampler(const PipelineConfig& cfg, const ComplexField& pump,
                                                       double delta_phase) {
    const std::size_t rows = cfg.detector.rows, cols = cfg.detector.half_cols();
    SelfConvolutionOptions sc;
    sc.pad_factor = cfg.pad_factor;
    const ConvolutionMap phi = pump_self_convolution(pump, sc);
    if (cfg.sampler == SamplerKind::Convolution) {
        const ComplexField pix = phi_on_camera_grid(phi, cfg.optics, cfg.sampler_grid);
        return std::make_shared<ConvolutionSampler>(pix, cfg.optics.gain, delta_phase, rows, cols);
    }
    KernelOptions ko;
    ko.roi_rows = ko.roi_cols = cfg.schmidt_roi;
    ko.pad_factor = cfg.pad_factor;
    SchmidtOptions so;
    so.truncation = cfg.schmidt_truncation;
    so.gain = cfg.optics.gain;
    SchmidtModel model = schmidt_decompose(build_kernel(phi, cfg.optics, ko), so);
    return std::make_shared<SchmidtSampler>(std::move(model), delta_phase, rows, cols);
}

AcquisitionSimulator make_simulator(const PipelineConfig& cfg, const ComplexField& pump, double delta_phase) {
    return AcquisitionSimulator(make_sampler(cfg, pump, delta_phase),
                                LocalOscillator::from_optics(cfg.optics, cfg.lo_peak_counts), cfg.detector, cfg.seed);
}

double DecodeResult::negative_fraction() const {
    return bright_pixels == 0 ? 0.0 : static_cast<double>(negative_clamped) / static_cast<double>(bright_pixels);
}

void Decoder::add(const FramePair& pair) {
    const FluctuationImages f = frame_difference(pair);
    cross_.add(cross_correlation_map(f.probe, f.conj, cfg_));
    auto_pr_.add(auto_correlation_map(f.probe, cfg_));
    auto_c_.add(auto_correlation_map(f.conj, cfg_));
    squeeze_.add_frames(pair);
    negative_ += pair.negative_clamped;
    bright_ += pair.bright_pixels;
}

DecodeResult Decoder::result() const {
    if (cross_.count() == 0) throw ContractError("Decoder: no frame pairs");
    DecodeResult r;
    r.cross = cross_.mean();
    r.auto_probe = auto_pr_.mean();
    r.auto_conj = auto_c_.mean();
    if (cfg_.normalization == NormalizationMode::Energy) {
        r.cross = normalize_map(r.cross);
        r.auto_probe = normalize_map(r.auto_probe);
        r.auto_conj = normalize_map(r.auto_conj);
    }
    if (squeeze_.count() >= 2) r.squeezing = squeeze_.estimate();
    r.n_pairs = cross_.count();
    r.negative_clamped = negative_;
    r.bright_pixels = bright_;
    return r;
}

DecodeResult simulate_and_decode(const AcquisitionSimulator& sim, std::size_t n_pairs, const AnalysisConfig& acfg) {
    acfg.validate(sim.detector().rows, sim.detector().half_cols());
    Decoder dec(acfg);
    simulate_acquisition(sim, n_pairs, [&](const FramePair& p) { dec.add(p); });
    return dec.result();
}

namespace {

std::string frame_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frames_%06zu.tbfp", i);
    return buf;
}

}  // namespace

SynthesizeOutput run_synthesize(const PipelineConfig& cfg, const ComplexField& pump, double delta_phase,
                                const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const double per_pair = 64.0 + 2.0 * 2.0 * static_cast<double>(cfg.detector.rows * cfg.detector.cols);
    const double total = per_pair * static_cast<double>(cfg.n_pairs);
    if (total > cfg.max_output_bytes)
        throw IoError("synthesize: " + std::to_string(static_cast<long long>(total)) +
                      " bytes of frames exceed synthesis.max_output_bytes");
    fs::create_directories(dir);
    const auto space = fs::space(dir);
    if (static_cast<double>(space.available) < total)
        throw IoError("synthesize: not enough free space in " + dir.string());

    const AcquisitionSimulator sim = make_simulator(cfg, pump, delta_phase);
    SynthesizeOutput out;
    out.manifest.rows = cfg.detector.rows;
    out.manifest.cols = cfg.detector.cols;
    out.manifest.seed_base = cfg.seed;
    out.manifest.delta_phase = delta_phase;
    simulate_acquisition(sim, cfg.n_pairs, [&](const FramePair& p) {
        const std::string name = frame_name(p.pair_index);
        write_frame_pair(dir / name, p);
        out.manifest.files.push_back(name);
        out.manifest.negative_clamped += p.negative_clamped;
        out.manifest.bright_pixels += p.bright_pixels;
    });
    write_manifest(dir / "manifest.json", out.manifest);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

DecodeResult run_decode(const fs::path& manifest, const AnalysisConfig& acfg) {
    const FrameManifest m = read_manifest(manifest);
    if (m.files.empty()) throw ContractError("decode: manifest lists no frame pairs");
    acfg.validate(m.rows, m.cols / 2);
    Decoder dec(acfg);
    const fs::path base = manifest.parent_path();
    for (const auto& f : m.files) {
        const FramePair p = read_frame_pair(base / f);
        if (p.frames[0].rows() != m.rows || p.frames[0].cols() != m.cols)
            throw ContractError("decode: frame " + f + " does not match the manifest geometry");
        dec.add(p);
    }
    return dec.result();
}

void write_decode_outputs(const fs::path& dir, const DecodeResult& r, const TargetSpec* target) {
    fs::create_directories(dir);
    write_map_csv(dir / "cross_map.csv", r.cross);
    write_map_image(dir / "cross_map.pgm", r.cross);
    write_map_csv(dir / "auto_probe_map.csv", r.auto_probe);
    write_map_image(dir / "auto_probe_map.pgm", r.auto_probe);
    write_map_csv(dir / "auto_conj_map.csv", r.auto_conj);
    write_map_image(dir / "auto_conj_map.pgm", r.auto_conj);
    write_squeezing_report(dir / "squeezing_frames.txt", r.squeezing);
    write_key_values(dir / "decode.txt", {{"n_pairs", std::to_string(r.n_pairs)},
                                          {"negative_clamped", std::to_string(r.negative_clamped)},
                                          {"bright_pixels", std::to_string(r.bright_pixels)},
                                          {"negative_flag", r.negative_flag() ? "1" : "0"}});
    if (target) {
        const RenderedTarget rt = render_target(*target, r.cross.values.rows(), r.cross.values.cols());
        FidelityReport fr = fidelity(r.cross, rt);
        fr.n_maps = r.n_pairs;
        write_fidelity_report(dir / "fidelity.txt", fr);
    }
}

}  // namespace twinbeam
