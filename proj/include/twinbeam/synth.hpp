#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "twinbeam/grid.hpp"
#include "twinbeam/optics.hpp"

namespace twinbeam {

/// Phi resampled onto an m x m grid of camera pixels (xi = 0 at m/2); zero
/// where the far-field span does not reach.
ComplexField phi_on_camera_grid(const ConvolutionMap& phi, const OpticalConfig& cfg, std::size_t m);

// ---------------------------------------------------------------- kernel

/// F(a, b) over probe pixel a and conjugate pixel b of a rows x cols ROI
/// per beam. Local coordinates are index - (size - 1)/2 so that a 180 degree
/// rotation maps b to -b. Stored as a (rows*cols) x (rows*cols) matrix.
struct TwoPhotonKernel {
    ComplexField matrix;
    std::size_t roi_rows = 0;
    std::size_t roi_cols = 0;
};

struct KernelOptions {
    std::size_t roi_rows = 8;
    std::size_t roi_cols = 8;
    std::size_t pad_factor = 2;
    bool apply_sinc = false;
    MismatchModel sinc_model = MismatchModel::Exact;
    std::size_t max_samples_per_beam = 64 * 64;
};

TwoPhotonKernel build_kernel(const ConvolutionMap& phi, const OpticalConfig& cfg, const KernelOptions& opt = {});
TwoPhotonKernel build_kernel(const ComplexField& pump, const OpticalConfig& cfg, const KernelOptions& opt = {});

// ---------------------------------------------------------------- Schmidt

struct SchmidtModel {
    std::vector<ComplexField> probe_modes;  // u_i over the ROI, orthonormal
    std::vector<ComplexField> conj_modes;   // v_i over the ROI, orthonormal
    std::vector<double> singular_values;    // all of them, non-increasing
    std::vector<double> squeezing;          // lambda_i of the kept modes
    std::size_t kept = 0;
    std::size_t roi_rows = 0;
    std::size_t roi_cols = 0;

    /// (sum s)^2 / sum s^2 over all singular values.
    double schmidt_number() const;
};

struct SchmidtOptions {
    double truncation = 1e-3;  // keep s_i >= truncation * s_max
    double gain = 2.6;         // brightest mode reaches cosh^2(lambda) = gain
};

/// F = sum_i s_i u_i(a) v_i(b); lambda_i = asinh(sqrt(G-1) s_i / s_max).
/// Throws ContractError for an all-zero or non-finite kernel.
SchmidtModel schmidt_decompose(const TwoPhotonKernel& kernel, const SchmidtOptions& opt = {});

/// Quadrature fluctuation images. probe is indexed like the probe camera
/// image; conj like the conjugate camera image (physical coordinates, so the
/// analyzer's 180 degree rotation aligns it with the probe).
struct QuadratureFields {
    RealField probe;
    RealField conj;
};

/// Two-mode squeezed draw per Schmidt pair (vacuum in all other modes);
/// the conjugate quadrature is read at angle 2*delta_phase.
QuadratureFields sample_quadrature_fields(const SchmidtModel& model, double delta_phase, std::mt19937_64& rng);
QuadratureFields sample_quadrature_fields(const SchmidtModel& model, double delta_phase, std::uint64_t seed);

// ---------------------------------------------------------------- samplers

/// Produces one quadrature draw per camera frame, sized to a half frame.
class FluctuationSampler {
public:
    virtual ~FluctuationSampler() = default;
    virtual QuadratureFields sample(std::mt19937_64& rng) const = 0;
    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;
};

/// Periodic sampler on an m x m pixel grid: the kernel is a convolution in
/// probe-aligned coordinates, so its Schmidt modes are plane waves with
/// singular values |H| (H = DFT of Phi) and phases arg H.
class ConvolutionSampler final : public FluctuationSampler {
public:
    ConvolutionSampler(const ComplexField& phi_pixels, double gain, double delta_phase, std::size_t rows,
                       std::size_t cols);
    QuadratureFields sample(std::mt19937_64& rng) const override;
    std::size_t rows() const override { return rows_; }
    std::size_t cols() const override { return cols_; }
    std::size_t grid() const { return m_; }
    /// Per-mode lambda, DC at index 0.
    const std::vector<double>& squeezing() const { return lambda_; }

private:
    std::size_t m_, rows_, cols_;
    std::vector<double> cosh_, sinh_, lambda_;
    std::vector<cplx> phase_;
    cplx rotation_;
};

/// Independent vacuum in both beams (uncorrelated coherent control).
class VacuumSampler final : public FluctuationSampler {
public:
    VacuumSampler(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
    QuadratureFields sample(std::mt19937_64& rng) const override;
    std::size_t rows() const override { return rows_; }
    std::size_t cols() const override { return cols_; }

private:
    std::size_t rows_, cols_;
};

/// Schmidt-model fields embedded at the centre of vacuum-filled half frames.
class SchmidtSampler final : public FluctuationSampler {
public:
    SchmidtSampler(SchmidtModel model, double delta_phase, std::size_t rows, std::size_t cols);
    QuadratureFields sample(std::mt19937_64& rng) const override;
    std::size_t rows() const override { return rows_; }
    std::size_t cols() const override { return cols_; }

private:
    SchmidtModel model_;
    double delta_phase_;
    std::size_t rows_, cols_;
};

// ---------------------------------------------------------------- camera

struct DetectorModel {
    double quantum_efficiency = 0.9;
    double excess_noise_factor_sq = 2.0;  // EM register variance factor F^2
    double read_noise = 0.0;              // counts rms
    double saturation = 65535.0;
    double pixel = 16e-6;
    std::size_t rows = 170;
    std::size_t cols = 512;                 // probe | conjugate halves
    double frame_separation = 60e-6;
    double poisson_threshold = 25.0;        // mean counts below which Poisson statistics are used

    void validate() const;
    std::size_t half_cols() const { return cols / 2; }
};

/// Bright seeded beams in the far field, acting as local oscillators.
struct LocalOscillator {
    double waist_px = 39.5;    // 1/e^2 intensity radius on the camera
    double peak_counts = 5e4;  // mean detected counts at the probe peak
    double conj_ratio = 1.6 / 2.6;
    double offset_row = 0.0;   // relative to the half-frame centre
    double offset_col = 0.0;

    void validate() const;
    /// Far-field waist f*lambda/(pi*w_probe) and conjugate flux (G-1)/G.
    static LocalOscillator from_optics(const OpticalConfig& cfg, double peak_counts = 5e4);
};

struct FramePair {
    Grid<std::uint16_t> frames[2];
    std::uint64_t seed_base = 0;
    std::uint64_t pair_index = 0;
    double timestamps[2] = {0.0, 0.0};
    std::uint64_t negative_clamped = 0;  // pixels whose expected counts went below zero
    std::uint64_t bright_pixels = 0;     // pixels rendered with the quantum model
};

/// Mean counts of the probe (beam 0) or conjugate (beam 1) LO in a half frame.
RealField lo_mean_counts(const LocalOscillator& lo, const DetectorModel& det, int beam);

/// Renders both frames; fluct[k] may be null for LO-only Poisson frames.
FramePair render_frame_pair(const LocalOscillator& lo, const QuadratureFields* fluct0, const QuadratureFields* fluct1,
                            const DetectorModel& det, std::mt19937_64& rng);

/// Engine seeded from (seed_base, pair_index, stream).
std::mt19937_64 pair_engine(std::uint64_t seed_base, std::uint64_t pair_index, std::uint64_t stream = 0);

class AcquisitionSimulator {
public:
    AcquisitionSimulator(std::shared_ptr<const FluctuationSampler> sampler, LocalOscillator lo, DetectorModel det,
                         std::uint64_t seed_base);
    /// Deterministic in (seed_base, index).
    FramePair pair(std::uint64_t index) const;
    const DetectorModel& detector() const { return det_; }
    const LocalOscillator& local_oscillator() const { return lo_; }

private:
    std::shared_ptr<const FluctuationSampler> sampler_;
    LocalOscillator lo_;
    DetectorModel det_;
    std::uint64_t seed_base_;
};

/// Streams pairs first_index .. first_index + n_pairs - 1 to the callback.
void simulate_acquisition(const AcquisitionSimulator& sim, std::size_t n_pairs,
                          const std::function<void(const FramePair&)>& sink, std::uint64_t first_index = 0);

// ---------------------------------------------------------------- temporal

struct TemporalNoise {
    double variance_ratio = 1.0;
    double variance_ratio_db = 0.0;
    double shot_noise_ref = 1.0;
};

/// Intensity-difference variance over shot noise 1/(2G-1) for ideal seeded
/// twin beams, degraded by detection transmission eta: eta/(2G-1) + 1 - eta.
/// Throws DomainError for G <= 1.
TemporalNoise temporal_difference_noise(double gain, double transmission = 1.0, double mean_photons = 1.0);

struct PhotodiodeTrace {
    std::vector<double> probe;
    std::vector<double> conj;
    double background_mean = 0.0;  // per beam, per sample
};

/// Time samples of seeded twin-beam photon numbers: probe mean G n, conjugate
/// mean (G-1) n, quadratures from a two-mode squeezer with cosh^2 = G, plus
/// Poisson scattered-pump background in each beam.
PhotodiodeTrace sample_photodiode_trace(double gain, double transmission, double mean_photons, double background,
                                        std::size_t n_samples, std::uint64_t seed);
/// Same statistics without correlations (coherent beams of the same means).
PhotodiodeTrace sample_coherent_trace(double probe_mean, double conj_mean, double background, std::size_t n_samples,
                                      std::uint64_t seed);

// ---------------------------------------------------------------- frame I/O

/// One file per pair, little-endian:
///   "TBFP", u32 version, u32 rows, u32 cols, u64 seed_base, u64 pair_index,
///   f64 t0, f64 t1, u64 negative_clamped, u64 bright_pixels  (64 bytes)
///   then frame 0 and frame 1 as rows*cols u16 counts.
void write_frame_pair(const std::filesystem::path& path, const FramePair& pair);
FramePair read_frame_pair(const std::filesystem::path& path);

struct FrameManifest {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::uint64_t seed_base = 0;
    double delta_phase = 0.0;
    std::vector<std::string> files;  // relative to the manifest directory
    std::uint64_t negative_clamped = 0;
    std::uint64_t bright_pixels = 0;
};

void write_manifest(const std::filesystem::path& path, const FrameManifest& m);
FrameManifest read_manifest(const std::filesystem::path& path);

}  // namespace twinbeam
