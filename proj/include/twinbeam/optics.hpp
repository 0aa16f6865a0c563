#pragma once

#include <array>
#include <filesystem>
#include <numbers>

#include "twinbeam/grid.hpp"

namespace twinbeam {

/// Lab geometry. Waists are radii (half the 1/e^2 intensity diameter).
struct OpticalConfig {
    double wavelength = 794.98e-9;
    double focal_length = 0.5;
    double cell_length = 0.012;
    double pump_waist_radius = 2.2e-3;
    double probe_waist_radius = 0.2e-3;
    double probe_pump_angle = 0.4 * std::numbers::pi / 180.0;
    double emccd_pixel = 16e-6;
    double slm_pixel = 12.5e-6;
    double gain = 2.6;

    double wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }
    /// Throws ConfigError unless every field is positive, the angle is
    /// below 0.1 rad and the gain exceeds 1.
    void validate() const;
};

struct AngularSpectrum {
    ComplexField field;  // centered, unitary
    double k_pitch = 0.0;  // rad/m per sample
};

/// Phi over summed transverse momentum q, pitch in rad/m.
struct ConvolutionMap {
    ComplexField field;
    double q_pitch = 0.0;
};

/// Real map over displacement xi in camera pixels. Index (rows/2, cols/2)
/// is xi = 0; row index i corresponds to xi_row = i - rows/2.
struct CorrelationMap {
    RealField values;
    double scale = 1.0;
};

AngularSpectrum angular_spectrum(const ComplexField& pump);

struct SelfConvolutionOptions {
    std::size_t pad_factor = 2;  // power of two, >= 1
    bool crop_back = true;
    bool check_border = true;
    double border_fraction = 0.10;
    double border_tolerance = 1e-6;
};

/// Phi = dft2_centered(pump^2) on the zero-padded grid. With pad_factor 1
/// this is the circular self-convolution of angular_spectrum(pump) divided by N.
/// Throws WraparoundError when at least border_tolerance of the |pump^2|
/// energy sits in the outer border_fraction of the unpadded grid.
ConvolutionMap pump_self_convolution(const ComplexField& pump, const SelfConvolutionOptions& opt = {});

/// Fraction of sum |f|^2 lying in the outer `fraction` of a square grid.
double border_energy_fraction(const ComplexField& f, double fraction);

struct FarFieldMap {
    ComplexField field;  // pitch in meters
    double pitch_m = 0.0;
    double pitch_px = 0.0;  // in camera pixels
};

/// Relabels a q grid as far-field position x = f q / k.
FarFieldMap kmap_to_farfield(const ConvolutionMap& q_grid, const OpticalConfig& cfg);
double q_to_farfield(double q, const OpticalConfig& cfg);

enum class MismatchModel { Exact, Paraxial };

using Vec2 = std::array<double, 2>;

/// sinc(dkz L / 2) with sinc(0) = 1.
double sinc_weight(double delta_kz, double cell_length);

/// Longitudinal mismatch 2 kz(q/2) - kz(k_pr) - kz(k_c), q = k_pr + k_c.
/// Throws DomainError when any |k_perp| / k exceeds 0.1.
double longitudinal_mismatch(const Vec2& k_probe, const Vec2& k_conj, const OpticalConfig& cfg,
                             MismatchModel model = MismatchModel::Exact);

double phase_mismatch_weight(const Vec2& k_probe, const Vec2& k_conj, const OpticalConfig& cfg,
                             MismatchModel model = MismatchModel::Exact);

/// Weight over a centered q grid. Probe and conjugate ride on carriers
/// +k0 and -k0 along x (k0 = k sin angle) and share q/2 each; the carrier
/// mismatch is taken as phase matched and subtracted.
RealField phase_mismatch_map(std::size_t n, double q_pitch, const OpticalConfig& cfg,
                             MismatchModel model = MismatchModel::Exact);

struct PredictOptions {
    std::size_t roi_rows = 81;
    std::size_t roi_cols = 81;
    std::size_t pad_factor = 2;
    bool apply_sinc = false;
    MismatchModel sinc_model = MismatchModel::Exact;
    double model_scale = 1.0;
    bool check_border = true;
};

/// Re{Phi(xi) exp(-2i dphi)} * model_scale, bilinearly resampled onto camera
/// pixels. Throws BoundsError if the ROI leaves the computed far-field span.
CorrelationMap predict_cross_correlation(const ComplexField& pump, double delta_phase,
                                         const OpticalConfig& cfg, const PredictOptions& opt = {});

/// Same resampling applied to an already computed Phi.
CorrelationMap resample_prediction(const ConvolutionMap& phi, double delta_phase,
                                   const OpticalConfig& cfg, const PredictOptions& opt);

/// Rows of "xi_row_px,xi_col_px,value".
void write_map_csv(const std::filesystem::path& path, const CorrelationMap& m);
CorrelationMap read_map_csv(const std::filesystem::path& path);

/// 16-bit PGM plus <path>.scale.json with the linear mapping back to values.
void write_map_image(const std::filesystem::path& path, const CorrelationMap& m);

}  // namespace twinbeam
