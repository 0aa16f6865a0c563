#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "twinbeam/grid.hpp"

namespace twinbeam {

using Mask = Grid<std::uint8_t>;

/// Circular region of the hologram held at a fixed phase. It fixes the
/// reference phase of the pump that the downstream prediction is relative to.
struct ConstantDisk {
    std::size_t center_row = 0;
    std::size_t center_col = 0;
    double radius = 0.0;  // samples
    double value = 0.0;   // radians

    bool contains(std::size_t r, std::size_t c) const;
};

/// Centered disk of radius 2% of N, value 0.
ConstantDisk default_disk(std::size_t n);

struct PhasePattern {
    RealField phase;  // unwrapped radians, N x N
    ConstantDisk disk;
};

/// Throws ContractError if the disk radius is >= N/2 or the center lies outside the grid.
PhasePattern apply_constant_phase_disk(const PhasePattern& p, const ConstantDisk& disk);
Mask disk_mask(std::size_t n, const ConstantDisk& disk);

/// Target far-field amplitude and phase with MRAF regions. Grids are
/// either N x N (embedded in the centre of the padded far field) or already
/// padded-size.
struct TargetSpec {
    ComplexField target;
    Mask signal;
    Mask noise;
};

/// Validates shapes, disjointness and a nonempty signal region, zeroes T
/// outside the signal mask and scales it to unit signal energy.
TargetSpec make_target(ComplexField target, Mask signal, Mask noise);

/// Scaled copy with sum |E0|^2 = 1.
ComplexField normalize_pump(const ComplexField& e0);

/// Far field of the squared phase-modulated pump on the padded grid,
/// scaled to unit energy (the scale depends only on |E0|).
ComplexField forward_model(const ComplexField& e0, const RealField& phase, std::size_t pad_factor = 2);

/// Sum over the signal mask of Re{conj(T) E}.
double signal_overlap(const ComplexField& e_out, const TargetSpec& target);

/// 10^d (1 - overlap)^2. Throws ContractError on an empty signal mask.
double cost(const ComplexField& e_out, const TargetSpec& target, double d);

/// Analytic dC/dphi; disk samples are exactly zero.
RealField cost_gradient(const PhasePattern& phase, const ComplexField& e0, const TargetSpec& target, double d,
                        std::size_t pad_factor = 2);

struct OptimizerConfig {
    double d = 10.0;
    int max_iterations = 500;
    double initial_step = 0.5;  // largest phase change of a trial step, radians
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    int max_backtracks = 40;
    int restart_period = 0;  // 0: number of free samples
    int stagnation_window = 10;
    double stagnation_tol = 1e-7;
    std::size_t pad_factor = 2;

    void validate() const;
};

struct QuantizedHologram {
    Grid<std::uint8_t> levels;
};

struct CGHResult {
    PhasePattern phase;
    std::vector<std::pair<int, double>> cost_history;
    double final_overlap = 0.0;
    QuantizedHologram quantized;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

CGHResult conjugate_gradient_minimize(const ComplexField& e0, const TargetSpec& target, const PhasePattern& init,
                                      const OptimizerConfig& opt = {});

/// Quadratic phase a*rho^2 whose far-field spread roughly matches the RMS
/// radius of the signal region.
RealField defocus_initial_phase(const ComplexField& e0, const TargetSpec& target, std::size_t pad_factor = 2);
RealField random_initial_phase(std::size_t n, std::uint64_t seed);

/// Wrap to [0, 2pi).
double wrap_phase(double phi);
RealField wrap_phase(const RealField& phi);

struct CompressionResult {
    PhasePattern phase;
    double factor = 1.0;
    double dc_fraction = 1.0;
    double dc_fraction_before = 1.0;
    std::string note;
};

/// |sum E0 e^{i phi}|^2 / (N^2 sum |E0|^2): equals 1 for a flat pump and flat phase.
double zero_order_fraction(const ComplexField& e0, const RealField& phase);

/// Scans phi' = s * wrap(phi) over s in [lo, hi] and keeps the s with the
/// smallest zero-order fraction. The disk is re-applied afterwards.
CompressionResult phase_compress(const PhasePattern& p, const ComplexField& e0, double lo = 0.85, double hi = 1.0,
                                 int samples = 64);

/// level = round(wrap(phi) / 2pi * 256) mod 256.
QuantizedHologram quantize_8bit(const RealField& phase);
RealField dequantize(const QuantizedHologram& q);

struct HologramInfo {
    ConstantDisk disk;
    double compression = 1.0;
    double pitch = 0.0;
    std::size_t pad_factor = 2;
    double reference_disk_value = 0.0;
    std::vector<std::pair<int, double>> cost_history;
};

/// 8-bit P5 image plus <path>.json sidecar.
void write_hologram(const std::filesystem::path& path, const QuantizedHologram& q, const HologramInfo& info);
std::pair<QuantizedHologram, HologramInfo> read_hologram(const std::filesystem::path& path);

}  // namespace twinbeam
