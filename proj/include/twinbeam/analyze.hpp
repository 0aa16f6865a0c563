#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "twinbeam/cgh.hpp"
#include "twinbeam/optics.hpp"
#include "twinbeam/synth.hpp"

namespace twinbeam {

/// Frame 0 minus frame 1, split into the probe and conjugate halves.
struct FluctuationImages {
    RealField probe;
    RealField conj;
};

FluctuationImages frame_difference(const FramePair& pair);

enum class NormalizationMode { Energy, Absolute };

struct AnalysisConfig {
    std::size_t patch_rows = 64;
    std::size_t patch_cols = 64;
    long patch_top = -1;   // -1: centred in the half frame
    long patch_left = -1;
    int range_rows = 40;   // xi in [-range_rows, range_rows]
    int range_cols = 40;
    double exclusion_radius = 2.0;
    NormalizationMode normalization = NormalizationMode::Energy;

    /// Throws BoundsError if the patch leaves a rows x cols image or the
    /// displacement range reaches past the image, ConfigError for a bad
    /// exclusion radius.
    void validate(std::size_t rows, std::size_t cols) const;
    std::size_t top(std::size_t rows) const;
    std::size_t left(std::size_t cols) const;
};

/// M(xi) = sum_{y in patch} P(y) R(y - xi) with R = rotate180(conj) and R = 0
/// outside the image. Map index (range_rows, range_cols) is xi = 0.
CorrelationMap cross_correlation_map(const RealField& probe, const RealField& conj, const AnalysisConfig& cfg);

/// Same sum against the unrotated image itself; samples within
/// exclusion_radius of xi = 0 are replaced by a bilinear fill from the
/// surrounding box edges.
CorrelationMap auto_correlation_map(const RealField& image, const AnalysisConfig& cfg);

/// Streaming arithmetic mean.
class MapAverager {
public:
    void add(const CorrelationMap& m);
    std::size_t count() const { return n_; }
    /// Throws ContractError if nothing was added.
    CorrelationMap mean() const;

private:
    std::vector<double> sum_;
    std::size_t rows_ = 0, cols_ = 0, n_ = 0;
};

CorrelationMap average_maps(const std::vector<CorrelationMap>& maps);

/// Divides by sqrt(sum of squares), so the result has unit energy.
/// Throws ContractError for an all-zero map.
CorrelationMap normalize_map(const CorrelationMap& m);

/// Re{T} and the signal mask sampled on a correlation map geometry; target
/// index N/2 is xi = 0 and pitch_px is the target sample in camera pixels.
struct RenderedTarget {
    RealField values;
    Mask signal;
};

RenderedTarget render_target(const TargetSpec& target, std::size_t rows, std::size_t cols, double pitch_px = 1.0);

struct FidelityReport {
    double coefficient = 0.0;
    double peak_to_background = 0.0;
    std::size_t signal_samples = 0;
    std::size_t n_maps = 0;
};

/// Pearson correlation over the signal region, and the largest |map| in the
/// signal region over the rms outside it. Throws ContractError if either
/// input is constant over the signal region.
FidelityReport fidelity(const CorrelationMap& map, const RenderedTarget& target);

/// Flat key=value text, one entry per line.
void write_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv);
void write_fidelity_report(const std::filesystem::path& path, const FidelityReport& r);

struct SqueezingEstimate {
    double variance_ratio = 1.0;
    double db = 0.0;
    double ci_low_db = 0.0;
    double ci_high_db = 0.0;
    std::size_t samples = 0;
    bool wide_confidence = false;  // fewer than 100 samples
};

/// Var(N_pr - N_c) over mean(N_pr + N_c), both with the background removed.
class SqueezingAccumulator {
public:
    void add(double probe, double conj);
    /// Both beams of both frames; each frame is one sample.
    void add_frames(const FramePair& pair);
    std::size_t count() const { return n_; }
    /// background_mean and background_var refer to the summed background of
    /// both beams per sample. Throws ContractError with fewer than 2 samples.
    SqueezingEstimate estimate(double background_mean = 0.0, double background_var = 0.0) const;

private:
    std::size_t n_ = 0;
    double mean_d_ = 0.0, m2_d_ = 0.0, mean_s_ = 0.0;
};

/// Poisson background of trace.background_mean per beam is subtracted.
SqueezingEstimate estimate_squeezing(const PhotodiodeTrace& trace);

void write_squeezing_report(const std::filesystem::path& path, const SqueezingEstimate& s);

}  // namespace twinbeam
