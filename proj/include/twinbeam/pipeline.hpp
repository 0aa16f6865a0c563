#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "twinbeam/analyze.hpp"
#include "twinbeam/cgh.hpp"
#include "twinbeam/grid_io.hpp"
#include "twinbeam/optics.hpp"
#include "twinbeam/synth.hpp"

namespace twinbeam {

// ---------------------------------------------------------------- targets

/// Two-letter "OU" test glyph drawn on an m x m far-field grid in pixels,
/// centred on index m/2 with the letters on either side of it.
struct GlyphOptions {
    double scale = 1.15;
    double thickness = 10.0;  // stroke width, pixels
    double blur = 1.5;        // Gaussian sigma, pixels
    double gap = 1.0;         // extra half-separation of the letters, pixels
    int dilation = 4;         // signal mask = stroke mask grown by this many steps
};

/// Blurred stroke amplitude (peak ~1) and the stroke mask.
std::pair<RealField, Mask> glyph_image(std::size_t m, const GlyphOptions& opt);
TargetSpec glyph_target(std::size_t m, const GlyphOptions& opt);

/// |T| from a grayscale image (scaled to [0, 1]) centred on an m x m grid,
/// optional phase image mapping 0..maxval to 0..2pi. Signal = pixels above
/// threshold, grown by `dilation` steps; noise = everything else.
TargetSpec image_target(const GrayImage& amplitude, const GrayImage* phase, std::size_t m, double threshold,
                        int dilation);

/// Separable Gaussian blur with zero boundary.
RealField gaussian_blur(const RealField& f, double sigma);
/// 4-connected binary dilation repeated `steps` times.
Mask dilate(const Mask& m, int steps);

// ---------------------------------------------------------------- config

enum class SamplerKind { Convolution, Schmidt };

struct PipelineConfig {
    OpticalConfig optics;

    std::size_t n = 128;
    std::size_t pad_factor = 2;
    double pitch = 0.0;  // 0: one padded far-field sample per camera pixel

    std::string target_kind = "glyph";  // glyph | image
    std::filesystem::path target_image;
    std::filesystem::path target_phase_image;
    double target_threshold = 0.05;
    GlyphOptions glyph;

    OptimizerConfig optimizer;
    std::string init = "defocus";  // defocus | random
    std::uint64_t init_seed = 7;

    bool compress = false;
    double compress_lo = 0.85;
    double compress_hi = 1.0;
    int compress_samples = 64;

    double disk_radius = 1.3;
    double disk_reference = 0.0;
    double delta_phase = 0.0;

    std::size_t n_pairs = 2000;
    std::uint64_t seed = 1;
    SamplerKind sampler = SamplerKind::Convolution;
    std::size_t schmidt_roi = 32;
    double schmidt_truncation = 1e-3;
    double lo_peak_counts = 5e4;
    std::size_t sampler_grid = 512;  // periodic sampling grid, camera pixels
    double max_output_bytes = 4e9;

    DetectorModel detector;
    AnalysisConfig analysis;

    std::filesystem::path output_dir = "run";

    /// Pump pitch actually used.
    double pump_pitch() const;
    /// Checks every module's preconditions; throws ConfigError.
    void validate() const;
};

/// Default configuration for the 128 x 128 desk-scale glyph run.
PipelineConfig default_pipeline_config();

/// Nested YAML. Unknown keys throw ConfigError; overrides are "a.b=value".
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
PipelineConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides = {});
std::string dump_config(const PipelineConfig& cfg);

// ---------------------------------------------------------------- stages

/// Gaussian pump amplitude on the N x N grid (CellCenter plane).
ComplexField pump_amplitude(const PipelineConfig& cfg);
TargetSpec build_target(const PipelineConfig& cfg);
ConstantDisk pipeline_disk(const PipelineConfig& cfg, double value);

struct OptimizeOutput {
    CGHResult result;
    PhasePattern final_phase;  // after optional compression
    QuantizedHologram quantized;
    HologramInfo info;
    double dc_fraction = 0.0;
};

OptimizeOutput run_optimize(const PipelineConfig& cfg, const TargetSpec& target);
/// hologram.pgm (+ .json sidecar) and cost_history.csv.
void write_optimize_outputs(const std::filesystem::path& dir, const OptimizeOutput& out);

/// Dequantized hologram with the disk set to reference + delta_phase.
PhasePattern hologram_phase(const QuantizedHologram& q, const HologramInfo& info, double delta_phase);
ComplexField modulated_pump(const ComplexField& amplitude, const RealField& phase);

/// Prediction on the analysis map geometry.
CorrelationMap run_predict(const PipelineConfig& cfg, const ComplexField& pump, double delta_phase);

std::shared_ptr<const FluctuationSampler> make_sampler(const PipelineConfig& cfg, const ComplexField& pump,
                                                       double delta_phase);
AcquisitionSimulator make_simulator(const PipelineConfig& cfg, const ComplexField& pump, double delta_phase);

struct DecodeResult {
    CorrelationMap cross;
    CorrelationMap auto_probe;
    CorrelationMap auto_conj;
    SqueezingEstimate squeezing;
    std::size_t n_pairs = 0;
    std::uint64_t negative_clamped = 0;
    std::uint64_t bright_pixels = 0;
    double negative_fraction() const;
    bool negative_flag() const { return negative_fraction() >= 1e-3; }
};

/// Per-pair maps averaged over a stream of distinct frame pairs.
class Decoder {
public:
    explicit Decoder(AnalysisConfig cfg) : cfg_(cfg) {}
    void add(const FramePair& pair);
    DecodeResult result() const;

private:
    AnalysisConfig cfg_;
    MapAverager cross_, auto_pr_, auto_c_;
    SqueezingAccumulator squeeze_;
    std::uint64_t negative_ = 0, bright_ = 0;
};

/// Synthesizes and decodes n_pairs without touching the disk.
DecodeResult simulate_and_decode(const AcquisitionSimulator& sim, std::size_t n_pairs, const AnalysisConfig& acfg);

struct SynthesizeOutput {
    FrameManifest manifest;
    double seconds = 0.0;
};

/// Writes frames_<index>.tbfp and manifest.json into dir. Refuses to start if
/// the frames would exceed cfg.max_output_bytes or the free space.
SynthesizeOutput run_synthesize(const PipelineConfig& cfg, const ComplexField& pump, double delta_phase,
                                const std::filesystem::path& dir);

DecodeResult run_decode(const std::filesystem::path& manifest, const AnalysisConfig& acfg);

/// Writes cross/auto maps (CSV and image), squeezing and optional fidelity reports.
void write_decode_outputs(const std::filesystem::path& dir, const DecodeResult& r, const TargetSpec* target);

}  // namespace twinbeam
