#include "twinbeam/synth.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "twinbeam/errors.hpp"
#include "twinbeam/fft.hpp"

namespace twinbeam {

static_assert(std::endian::native == std::endian::little, "frame I/O assumes a little-endian host");

namespace {

constexpr std::uint32_t kFrameFormatVersion = 1;
constexpr std::size_t kFrameHeaderBytes = 64;

cplx bilinear_or_zero(const ComplexField& f, double u, double v) {
    const auto m = static_cast<double>(f.rows() - 1);
    if (u < 0.0 || v < 0.0 || u > m || v > m) return {0.0, 0.0};
    const auto iu = std::min(static_cast<std::size_t>(u), f.rows() - 2);
    const auto iv = std::min(static_cast<std::size_t>(v), f.cols() - 2);
    const double fu = u - static_cast<double>(iu), fv = v - static_cast<double>(iv);
    return (1 - fu) * ((1 - fv) * f(iu, iv) + fv * f(iu, iv + 1)) +
           fu * ((1 - fv) * f(iu + 1, iv) + fv * f(iu + 1, iv + 1));
}

// Complex Gaussian with E|z|^2 = 1/2.
cplx vacuum_amplitude(std::mt19937_64& rng, std::normal_distribution<double>& n) {
    const double re = n(rng), im = n(rng);
    return {0.5 * re, 0.5 * im};
}

}  // namespace

ComplexField phi_on_camera_grid(const ConvolutionMap& phi, const OpticalConfig& cfg, std::size_t m) {
    if (m < 2) throw ContractError("phi_on_camera_grid: grid too small");
    const FarFieldMap ff = kmap_to_farfield(phi, cfg);
    const double center = static_cast<double>(ff.field.n() / 2);
    ComplexField out(m, cfg.emccd_pixel, Plane::FarField);
    const auto half = static_cast<double>(m / 2);
    for (std::size_t i = 0; i < m; ++i) {
        const double u = (static_cast<double>(i) - half) / ff.pitch_px + center;
        for (std::size_t j = 0; j < m; ++j) {
            const double v = (static_cast<double>(j) - half) / ff.pitch_px + center;
            out(i, j) = bilinear_or_zero(ff.field, u, v);
        }
    }
    return out;
}

// ---------------------------------------------------------------- kernel

TwoPhotonKernel build_kernel(const ConvolutionMap& phi, const OpticalConfig& cfg, const KernelOptions& opt) {
    const std::size_t r = opt.roi_rows, c = opt.roi_cols;
    if (r == 0 || c == 0) throw ContractError("build_kernel: empty ROI");
    if (r * c > opt.max_samples_per_beam)
        throw ContractError("build_kernel: ROI of " + std::to_string(r * c) +
                            " samples per beam is too large for the Schmidt path; use the convolution sampler");
    const std::size_t m = 2 * std::max(r, c) + 2;
    const ComplexField grid = phi_on_camera_grid(phi, cfg, m);
    const auto mid = static_cast<long>(m / 2);

    const double k = cfg.wavenumber();
    const double k0 = k * std::sin(cfg.probe_pump_angle);
    const double dk_pix = k * cfg.emccd_pixel / cfg.focal_length;
    const double carrier = opt.apply_sinc ? longitudinal_mismatch({k0, 0.0}, {-k0, 0.0}, cfg, opt.sinc_model) : 0.0;
    const double ar = 0.5 * static_cast<double>(r - 1), ac = 0.5 * static_cast<double>(c - 1);

    TwoPhotonKernel K;
    K.roi_rows = r;
    K.roi_cols = c;
    K.matrix = ComplexField(r * c, r * c);
    for (std::size_t i1 = 0; i1 < r; ++i1)
        for (std::size_t j1 = 0; j1 < c; ++j1)
            for (std::size_t i2 = 0; i2 < r; ++i2)
                for (std::size_t j2 = 0; j2 < c; ++j2) {
                    const long sr = static_cast<long>(i1 + i2) - static_cast<long>(r - 1);
                    const long sc = static_cast<long>(j1 + j2) - static_cast<long>(c - 1);
                    cplx v = grid(static_cast<std::size_t>(mid + sr), static_cast<std::size_t>(mid + sc));
                    if (opt.apply_sinc) {
                        const Vec2 kp{k0 + (static_cast<double>(j1) - ac) * dk_pix, (static_cast<double>(i1) - ar) * dk_pix};
                        const Vec2 kc{-k0 + (static_cast<double>(j2) - ac) * dk_pix,
                                      (static_cast<double>(i2) - ar) * dk_pix};
                        v *= sinc_weight(longitudinal_mismatch(kp, kc, cfg, opt.sinc_model) - carrier, cfg.cell_length);
                    }
                    K.matrix(i1 * c + j1, i2 * c + j2) = v;
                }
    return K;
}

TwoPhotonKernel build_kernel(const ComplexField& pump, const OpticalConfig& cfg, const KernelOptions& opt) {
    SelfConvolutionOptions so;
    so.pad_factor = opt.pad_factor;
    so.crop_back = false;
    return build_kernel(pump_self_convolution(pump, so), cfg, opt);
}

// ---------------------------------------------------------------- Schmidt

double SchmidtModel::schmidt_number() const {
    double s1 = 0.0, s2 = 0.0;
    for (double s : singular_values) {
        s1 += s;
        s2 += s * s;
    }
    return s2 > 0.0 ? s1 * s1 / s2 : 0.0;
}

SchmidtModel schmidt_decompose(const TwoPhotonKernel& kernel, const SchmidtOptions& opt) {
    const std::size_t d = kernel.roi_rows * kernel.roi_cols;
    if (d == 0 || kernel.matrix.rows() != d || kernel.matrix.cols() != d)
        throw ContractError("schmidt_decompose: kernel shape does not match its ROI");
    if (!(opt.gain > 1.0)) throw DomainError("schmidt_decompose: gain must exceed 1");
    if (!(opt.truncation > 0.0 && opt.truncation < 1.0))
        throw ContractError("schmidt_decompose: truncation must lie in (0, 1)");
    require_finite(kernel.matrix, "schmidt_decompose");

    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> F(kernel.matrix.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(Eigen::MatrixXcd(F), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (!(s(0) > 0.0)) throw ContractError("schmidt_decompose: kernel is zero");

    SchmidtModel m;
    m.roi_rows = kernel.roi_rows;
    m.roi_cols = kernel.roi_cols;
    m.singular_values.assign(s.data(), s.data() + s.size());
    const double g = std::sqrt(opt.gain - 1.0);
    const auto& U = svd.matrixU();
    const auto& V = svd.matrixV();
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) < opt.truncation * s(0)) break;
        ComplexField u(kernel.roi_rows, kernel.roi_cols), v(kernel.roi_rows, kernel.roi_cols);
        for (std::size_t p = 0; p < d; ++p) {
            u[p] = U(static_cast<Eigen::Index>(p), i);
            v[p] = std::conj(V(static_cast<Eigen::Index>(p), i));
        }
        m.probe_modes.push_back(std::move(u));
        m.conj_modes.push_back(std::move(v));
        m.squeezing.push_back(std::asinh(g * s(i) / s(0)));
    }
    m.kept = m.probe_modes.size();
    return m;
}

QuadratureFields sample_quadrature_fields(const SchmidtModel& model, double delta_phase, std::mt19937_64& rng) {
    const std::size_t r = model.roi_rows, c = model.roi_cols, d = r * c;
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<cplx> a(d), b(d);
    for (auto& x : a) x = vacuum_amplitude(rng, nd);
    for (auto& x : b) x = vacuum_amplitude(rng, nd);

    std::vector<cplx> A = a, B = b;
    for (std::size_t k = 0; k < model.kept; ++k) {
        const auto& u = model.probe_modes[k];
        const auto& v = model.conj_modes[k];
        cplx ak{}, bk{};
        for (std::size_t p = 0; p < d; ++p) {
            ak += std::conj(u[p]) * a[p];
            bk += std::conj(v[p]) * b[p];
        }
        const double ch = std::cosh(model.squeezing[k]), sh = std::sinh(model.squeezing[k]);
        const cplx dA = ch * ak + sh * std::conj(bk) - ak;
        const cplx dB = ch * bk + sh * std::conj(ak) - bk;
        for (std::size_t p = 0; p < d; ++p) {
            A[p] += u[p] * dA;
            B[p] += v[p] * dB;
        }
    }

    const cplx rot = std::polar(1.0, -2.0 * delta_phase);
    QuadratureFields q{RealField(r, c), RealField(r, c)};
    for (std::size_t p = 0; p < d; ++p) {
        q.probe[p] = std::sqrt(2.0) * A[p].real();
        q.conj[p] = std::sqrt(2.0) * (rot * B[p]).real();
    }
    return q;
}

QuadratureFields sample_quadrature_fields(const SchmidtModel& model, double delta_phase, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_quadrature_fields(model, delta_phase, rng);
}

// ---------------------------------------------------------------- samplers

ConvolutionSampler::ConvolutionSampler(const ComplexField& phi_pixels, double gain, double delta_phase,
                                       std::size_t rows, std::size_t cols)
    : m_(phi_pixels.rows()), rows_(rows), cols_(cols), rotation_(std::polar(1.0, -2.0 * delta_phase)) {
    if (!phi_pixels.square() || m_ < 2 || m_ % 2 != 0)
        throw ContractError("ConvolutionSampler: Phi must be on an even square pixel grid");
    if (rows == 0 || cols == 0 || rows > m_ || cols > m_)
        throw ContractError("ConvolutionSampler: half frame does not fit the sampling grid");
    if (!(gain > 1.0)) throw DomainError("ConvolutionSampler: gain must exceed 1");
    require_finite(phi_pixels, "ConvolutionSampler");

    // h(n) = Phi at displacement n, DC at index 0.
    ComplexField h(m_, m_);
    const std::size_t half = m_ / 2;
    for (std::size_t i = 0; i < m_; ++i)
        for (std::size_t j = 0; j < m_; ++j) h((i + half) % m_, (j + half) % m_) = phi_pixels(i, j);
    fft2_inplace(h.span(), m_, m_, -1);

    double hmax = 0.0;
    for (const auto& v : h.values()) hmax = std::max(hmax, std::abs(v));
    if (!(hmax > 0.0)) throw ContractError("ConvolutionSampler: Phi is zero");
    const double g = std::sqrt(gain - 1.0);
    const std::size_t n = m_ * m_;
    cosh_.resize(n);
    sinh_.resize(n);
    lambda_.resize(n);
    phase_.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double mag = std::abs(h[p]);
        lambda_[p] = std::asinh(g * mag / hmax);
        cosh_[p] = std::cosh(lambda_[p]);
        sinh_[p] = std::sinh(lambda_[p]);
        phase_[p] = mag > 0.0 ? h[p] / mag : cplx{1.0, 0.0};
    }
}

QuadratureFields ConvolutionSampler::sample(std::mt19937_64& rng) const {
    const std::size_t n = m_ * m_;
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexField A(m_, m_), B(m_, m_);
    for (std::size_t p = 0; p < n; ++p) {
        const cplx a = vacuum_amplitude(rng, nd), b = vacuum_amplitude(rng, nd);
        A[p] = phase_[p] * (cosh_[p] * a + sinh_[p] * std::conj(b));
        B[p] = cosh_[p] * b + sinh_[p] * std::conj(a);
    }
    fft2_inplace(A.span(), m_, m_, +1);
    fft2_inplace(B.span(), m_, m_, -1);

    const double scale = std::sqrt(2.0) / static_cast<double>(m_);
    const std::size_t r0 = (m_ - rows_) / 2, c0 = (m_ - cols_) / 2;
    QuadratureFields q{RealField(rows_, cols_), RealField(rows_, cols_)};
    RealField aligned(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
            q.probe(i, j) = scale * A(r0 + i, c0 + j).real();
            aligned(i, j) = scale * (rotation_ * B(r0 + i, c0 + j)).real();
        }
    q.conj = rotate180(aligned);
    return q;
}

QuadratureFields VacuumSampler::sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    QuadratureFields q{RealField(rows_, cols_), RealField(rows_, cols_)};
    for (auto& v : q.probe.values()) v = nd(rng);
    for (auto& v : q.conj.values()) v = nd(rng);
    return q;
}

SchmidtSampler::SchmidtSampler(SchmidtModel model, double delta_phase, std::size_t rows, std::size_t cols)
    : model_(std::move(model)), delta_phase_(delta_phase), rows_(rows), cols_(cols) {
    if (model_.roi_rows > rows || model_.roi_cols > cols)
        throw ContractError("SchmidtSampler: ROI larger than the half frame");
    if ((rows - model_.roi_rows) % 2 != 0 || (cols - model_.roi_cols) % 2 != 0)
        throw ContractError("SchmidtSampler: ROI and half frame must share parity so the ROI centre is the frame centre");
}

QuadratureFields SchmidtSampler::sample(std::mt19937_64& rng) const {
    const QuadratureFields roi = sample_quadrature_fields(model_, delta_phase_, rng);
    QuadratureFields q = VacuumSampler(rows_, cols_).sample(rng);
    const std::size_t r0 = (rows_ - model_.roi_rows) / 2, c0 = (cols_ - model_.roi_cols) / 2;
    for (std::size_t i = 0; i < model_.roi_rows; ++i)
        for (std::size_t j = 0; j < model_.roi_cols; ++j) {
            q.probe(r0 + i, c0 + j) = roi.probe(i, j);
            q.conj(r0 + i, c0 + j) = roi.conj(i, j);
        }
    return q;
}

// ---------------------------------------------------------------- camera

void DetectorModel::validate() const {
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
        throw ConfigError("detector: quantum_efficiency must lie in (0, 1]");
    if (!(excess_noise_factor_sq >= 1.0)) throw ConfigError("detector: excess noise factor squared must be >= 1");
    if (!(read_noise >= 0.0)) throw ConfigError("detector: read_noise must be >= 0");
    if (!(saturation > 0.0 && saturation <= 65535.0)) throw ConfigError("detector: saturation must lie in (0, 65535]");
    if (!(pixel > 0.0)) throw ConfigError("detector: pixel must be positive");
    if (rows == 0 || cols == 0 || cols % 2 != 0) throw ConfigError("detector: frame needs rows > 0 and an even column count");
    if (!(frame_separation >= 51e-6)) throw ConfigError("detector: frame_separation must be at least 51 us");
    if (!(poisson_threshold >= 0.0)) throw ConfigError("detector: poisson_threshold must be >= 0");
}

void LocalOscillator::validate() const {
    if (!(waist_px > 0.0)) throw ConfigError("local oscillator: waist_px must be positive");
    if (!(peak_counts > 0.0)) throw ConfigError("local oscillator: peak_counts must be positive");
    if (!(conj_ratio > 0.0)) throw ConfigError("local oscillator: conj_ratio must be positive");
    if (!std::isfinite(offset_row) || !std::isfinite(offset_col))
        throw ConfigError("local oscillator: offsets must be finite");
}

LocalOscillator LocalOscillator::from_optics(const OpticalConfig& cfg, double peak_counts) {
    cfg.validate();
    LocalOscillator lo;
    lo.waist_px = cfg.focal_length * cfg.wavelength / (std::numbers::pi * cfg.probe_waist_radius) / cfg.emccd_pixel;
    lo.peak_counts = peak_counts;
    lo.conj_ratio = (cfg.gain - 1.0) / cfg.gain;
    return lo;
}

RealField lo_mean_counts(const LocalOscillator& lo, const DetectorModel& det, int beam) {
    const std::size_t rows = det.rows, cols = det.half_cols();
    const double sign = beam == 0 ? 1.0 : -1.0;
    const double cr = 0.5 * static_cast<double>(rows - 1) + sign * lo.offset_row;
    const double cc = 0.5 * static_cast<double>(cols - 1) + sign * lo.offset_col;
    const double peak = beam == 0 ? lo.peak_counts : lo.peak_counts * lo.conj_ratio;
    const double w2 = lo.waist_px * lo.waist_px;
    RealField out(rows, cols, det.pixel, Plane::FarField);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double dr = static_cast<double>(i) - cr, dc = static_cast<double>(j) - cc;
            out(i, j) = peak * std::exp(-2.0 * (dr * dr + dc * dc) / w2);
        }
    return out;
}

namespace {

struct RenderTally {
    std::uint64_t negative = 0;
    std::uint64_t bright = 0;
};

void render_half(Grid<std::uint16_t>& frame, std::size_t col0, const RealField& mean, const RealField* fluct,
                 const DetectorModel& det, std::mt19937_64& rng, RenderTally& tally) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double sq_qe = std::sqrt(det.quantum_efficiency);
    const double sq_loss = std::sqrt(1.0 - det.quantum_efficiency) * std::sqrt(0.5);
    const double excess = det.excess_noise_factor_sq - 1.0;
    for (std::size_t i = 0; i < mean.rows(); ++i)
        for (std::size_t j = 0; j < mean.cols(); ++j) {
            const double m = mean(i, j);
            double counts;
            if (fluct != nullptr && m >= det.poisson_threshold) {
                double q = sq_qe * (*fluct)(i, j);
                if (sq_loss > 0.0) q += sq_loss * nd(rng);
                counts = m + std::sqrt(2.0 * m) * q;
                ++tally.bright;
                if (counts < 0.0) {
                    ++tally.negative;
                    counts = 0.0;
                }
            } else if (m > 1e-12) {
                counts = static_cast<double>(std::poisson_distribution<std::uint64_t>(m)(rng));
            } else {
                counts = 0.0;
            }
            if (excess > 0.0 && m > 1e-12) counts += std::sqrt(excess * m) * nd(rng);
            if (det.read_noise > 0.0) counts += det.read_noise * nd(rng);
            counts = std::clamp(std::round(counts), 0.0, det.saturation);
            frame(i, col0 + j) = static_cast<std::uint16_t>(counts);
        }
}

}  // namespace

FramePair render_frame_pair(const LocalOscillator& lo, const QuadratureFields* fluct0, const QuadratureFields* fluct1,
                            const DetectorModel& det, std::mt19937_64& rng) {
    det.validate();
    lo.validate();
    const std::size_t half = det.half_cols();
    for (const auto* f : {fluct0, fluct1})
        if (f != nullptr && (f->probe.rows() != det.rows || f->probe.cols() != half || f->conj.rows() != det.rows ||
                             f->conj.cols() != half))
            throw ContractError("render_frame_pair: fluctuation fields must match the half-frame shape");
    const RealField mean_probe = lo_mean_counts(lo, det, 0);
    const RealField mean_conj = lo_mean_counts(lo, det, 1);

    FramePair out;
    RenderTally tally;
    const QuadratureFields* fl[2] = {fluct0, fluct1};
    for (int k = 0; k < 2; ++k) {
        out.frames[k] = Grid<std::uint16_t>(det.rows, det.cols, det.pixel, Plane::FarField);
        render_half(out.frames[k], 0, mean_probe, fl[k] ? &fl[k]->probe : nullptr, det, rng, tally);
        render_half(out.frames[k], half, mean_conj, fl[k] ? &fl[k]->conj : nullptr, det, rng, tally);
    }
    out.timestamps[1] = det.frame_separation;
    out.negative_clamped = tally.negative;
    out.bright_pixels = tally.bright;
    return out;
}

std::mt19937_64 pair_engine(std::uint64_t seed_base, std::uint64_t pair_index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_base), static_cast<std::uint32_t>(seed_base >> 32),
                      static_cast<std::uint32_t>(pair_index), static_cast<std::uint32_t>(pair_index >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

AcquisitionSimulator::AcquisitionSimulator(std::shared_ptr<const FluctuationSampler> sampler, LocalOscillator lo,
                                           DetectorModel det, std::uint64_t seed_base)
    : sampler_(std::move(sampler)), lo_(lo), det_(det), seed_base_(seed_base) {
    det_.validate();
    lo_.validate();
    if (sampler_ && (sampler_->rows() != det_.rows || sampler_->cols() != det_.half_cols()))
        throw ContractError("AcquisitionSimulator: sampler shape does not match the half frame");
}

FramePair AcquisitionSimulator::pair(std::uint64_t index) const {
    auto rng = pair_engine(seed_base_, index, 0);
    FramePair fp;
    if (sampler_) {
        const QuadratureFields f0 = sampler_->sample(rng);
        const QuadratureFields f1 = sampler_->sample(rng);
        fp = render_frame_pair(lo_, &f0, &f1, det_, rng);
    } else {
        fp = render_frame_pair(lo_, nullptr, nullptr, det_, rng);
    }
    fp.seed_base = seed_base_;
    fp.pair_index = index;
    // One pair per millisecond; the second frame follows after the separation.
    fp.timestamps[0] = 1e-3 * static_cast<double>(index);
    fp.timestamps[1] = fp.timestamps[0] + det_.frame_separation;
    return fp;
}

void simulate_acquisition(const AcquisitionSimulator& sim, std::size_t n_pairs,
                          const std::function<void(const FramePair&)>& sink, std::uint64_t first_index) {
    for (std::size_t k = 0; k < n_pairs; ++k) sink(sim.pair(first_index + k));
}

// ---------------------------------------------------------------- temporal

TemporalNoise temporal_difference_noise(double gain, double transmission, double mean_photons) {
    if (!(gain > 1.0)) throw DomainError("temporal_difference_noise: gain must exceed 1");
    if (!(transmission > 0.0 && transmission <= 1.0))
        throw DomainError("temporal_difference_noise: transmission must lie in (0, 1]");
    if (!(mean_photons > 0.0)) throw DomainError("temporal_difference_noise: mean photon number must be positive");
    TemporalNoise t;
    t.variance_ratio = transmission / (2.0 * gain - 1.0) + (1.0 - transmission);
    t.variance_ratio_db = 10.0 * std::log10(t.variance_ratio);
    t.shot_noise_ref = transmission * (2.0 * gain - 1.0) * mean_photons;
    return t;
}

namespace {

double poisson_or_gauss(double mean, std::mt19937_64& rng) {
    if (mean <= 0.0) return 0.0;
    if (mean > 1e7) return mean + std::sqrt(mean) * std::normal_distribution<double>(0.0, 1.0)(rng);
    return static_cast<double>(std::poisson_distribution<std::uint64_t>(mean)(rng));
}

}  // namespace

PhotodiodeTrace sample_photodiode_trace(double gain, double transmission, double mean_photons, double background,
                                        std::size_t n_samples, std::uint64_t seed) {
    if (!(gain > 1.0)) throw DomainError("sample_photodiode_trace: gain must exceed 1");
    if (!(transmission > 0.0 && transmission <= 1.0))
        throw DomainError("sample_photodiode_trace: transmission must lie in (0, 1]");
    if (!(mean_photons > 0.0) || !(background >= 0.0))
        throw DomainError("sample_photodiode_trace: photon numbers must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> vac(0.0, std::sqrt(0.5));
    const double np = transmission * gain * mean_photons;
    const double nc = transmission * (gain - 1.0) * mean_photons;
    const double sg = std::sqrt(gain), sg1 = std::sqrt(gain - 1.0);
    const double st = std::sqrt(transmission), sl = std::sqrt(1.0 - transmission);
    PhotodiodeTrace t;
    t.background_mean = background;
    t.probe.resize(n_samples);
    t.conj.resize(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double x_in = vac(rng), x_v = vac(rng);
        const double xp = st * (sg * x_in + sg1 * x_v) + sl * vac(rng);
        const double xc = st * (sg1 * x_in + sg * x_v) + sl * vac(rng);
        t.probe[k] = np + std::sqrt(2.0 * np) * xp + poisson_or_gauss(background, rng);
        t.conj[k] = nc + std::sqrt(2.0 * nc) * xc + poisson_or_gauss(background, rng);
    }
    return t;
}

PhotodiodeTrace sample_coherent_trace(double probe_mean, double conj_mean, double background, std::size_t n_samples,
                                      std::uint64_t seed) {
    if (!(probe_mean > 0.0) || !(conj_mean > 0.0) || !(background >= 0.0))
        throw DomainError("sample_coherent_trace: photon numbers must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> vac(0.0, std::sqrt(0.5));
    PhotodiodeTrace t;
    t.background_mean = background;
    t.probe.resize(n_samples);
    t.conj.resize(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        t.probe[k] = probe_mean + std::sqrt(2.0 * probe_mean) * vac(rng) + poisson_or_gauss(background, rng);
        t.conj[k] = conj_mean + std::sqrt(2.0 * conj_mean) * vac(rng) + poisson_or_gauss(background, rng);
    }
    return t;
}

// ---------------------------------------------------------------- frame I/O

namespace {

template <typename T>
void put(std::vector<char>& buf, std::size_t off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

}  // namespace

void write_frame_pair(const std::filesystem::path& path, const FramePair& pair) {
    const auto& f0 = pair.frames[0];
    const auto& f1 = pair.frames[1];
    if (f0.rows() != f1.rows() || f0.cols() != f1.cols() || f0.size() == 0)
        throw ContractError("write_frame_pair: frames must be nonempty and equally sized");
    std::vector<char> h(kFrameHeaderBytes, 0);
    std::memcpy(h.data(), "TBFP", 4);
    put<std::uint32_t>(h, 4, kFrameFormatVersion);
    put<std::uint32_t>(h, 8, static_cast<std::uint32_t>(f0.rows()));
    put<std::uint32_t>(h, 12, static_cast<std::uint32_t>(f0.cols()));
    put<std::uint64_t>(h, 16, pair.seed_base);
    put<std::uint64_t>(h, 24, pair.pair_index);
    put<double>(h, 32, pair.timestamps[0]);
    put<double>(h, 40, pair.timestamps[1]);
    put<std::uint64_t>(h, 48, pair.negative_clamped);
    put<std::uint64_t>(h, 56, pair.bright_pixels);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto* f : {&f0, &f1})
        out.write(reinterpret_cast<const char*>(f->data()), static_cast<std::streamsize>(f->size() * 2));
    if (!out) throw IoError("write failed: " + path.string());
}

FramePair read_frame_pair(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<char> h(kFrameHeaderBytes);
    in.read(h.data(), static_cast<std::streamsize>(h.size()));
    if (!in || std::memcmp(h.data(), "TBFP", 4) != 0) throw IoError("not a TBFP frame pair: " + path.string());
    if (get<std::uint32_t>(h, 4) != kFrameFormatVersion) throw IoError("unsupported TBFP version: " + path.string());
    const std::size_t rows = get<std::uint32_t>(h, 8), cols = get<std::uint32_t>(h, 12);
    if (rows == 0 || cols == 0) throw IoError("empty frame in " + path.string());
    FramePair p;
    p.seed_base = get<std::uint64_t>(h, 16);
    p.pair_index = get<std::uint64_t>(h, 24);
    p.timestamps[0] = get<double>(h, 32);
    p.timestamps[1] = get<double>(h, 40);
    p.negative_clamped = get<std::uint64_t>(h, 48);
    p.bright_pixels = get<std::uint64_t>(h, 56);
    for (auto& f : p.frames) {
        f = Grid<std::uint16_t>(rows, cols, 16e-6, Plane::FarField);
        in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * 2));
    }
    if (!in) throw IoError("truncated frame payload: " + path.string());
    return p;
}

void write_manifest(const std::filesystem::path& path, const FrameManifest& m) {
    nlohmann::json j;
    j["format"] = "TBFP";
    j["version"] = kFrameFormatVersion;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["seed_base"] = m.seed_base;
    j["delta_phase"] = m.delta_phase;
    j["n_pairs"] = m.files.size();
    j["files"] = m.files;
    j["negative_clamped"] = m.negative_clamped;
    j["bright_pixels"] = m.bright_pixels;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

FrameManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format") != "TBFP") throw IoError("manifest does not describe TBFP frames: " + path.string());
        FrameManifest m;
        m.rows = j.at("rows").get<std::size_t>();
        m.cols = j.at("cols").get<std::size_t>();
        m.seed_base = j.at("seed_base").get<std::uint64_t>();
        m.delta_phase = j.at("delta_phase").get<double>();
        m.files = j.at("files").get<std::vector<std::string>>();
        m.negative_clamped = j.value("negative_clamped", std::uint64_t{0});
        m.bright_pixels = j.value("bright_pixels", std::uint64_t{0});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad manifest " + path.string() + ": " + e.what());
    }
}

}  // namespace twinbeam
