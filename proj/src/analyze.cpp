#include "twinbeam/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "twinbeam/errors.hpp"
#include "twinbeam/fft.hpp"

namespace twinbeam {

FluctuationImages frame_difference(const FramePair& pair) {
    const auto& a = pair.frames[0];
    const auto& b = pair.frames[1];
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("frame_difference: frame geometries differ");
    if (a.size() == 0 || a.cols() % 2 != 0) throw ContractError("frame_difference: frames need an even column count");
    const std::size_t rows = a.rows(), half = a.cols() / 2;
    FluctuationImages out{RealField(rows, half, a.pitch(), Plane::FarField),
                          RealField(rows, half, a.pitch(), Plane::FarField)};
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < half; ++j) {
            out.probe(i, j) = static_cast<double>(a(i, j)) - static_cast<double>(b(i, j));
            out.conj(i, j) = static_cast<double>(a(i, half + j)) - static_cast<double>(b(i, half + j));
        }
    return out;
}

// ---------------------------------------------------------------- maps

std::size_t AnalysisConfig::top(std::size_t rows) const {
    return patch_top < 0 ? (rows - std::min(rows, patch_rows)) / 2 : static_cast<std::size_t>(patch_top);
}

std::size_t AnalysisConfig::left(std::size_t cols) const {
    return patch_left < 0 ? (cols - std::min(cols, patch_cols)) / 2 : static_cast<std::size_t>(patch_left);
}

void AnalysisConfig::validate(std::size_t rows, std::size_t cols) const {
    if (patch_rows == 0 || patch_cols == 0) throw BoundsError("analysis: empty probe patch");
    if (patch_rows > rows || patch_cols > cols) throw BoundsError("analysis: probe patch larger than the image");
    if (top(rows) + patch_rows > rows || left(cols) + patch_cols > cols)
        throw BoundsError("analysis: probe patch leaves the image");
    if (range_rows < 0 || range_cols < 0) throw BoundsError("analysis: negative displacement range");
    if (static_cast<std::size_t>(range_rows) >= rows || static_cast<std::size_t>(range_cols) >= cols)
        throw BoundsError("analysis: displacement range exceeds the image overlap");
    if (!(exclusion_radius >= 0.0)) throw ConfigError("analysis: exclusion radius must be >= 0");
}

namespace {

// M(xi) = sum_{y in patch} P(y) R(y - xi), R = 0 outside its image.
CorrelationMap correlate(const RealField& P, const RealField& R, const AnalysisConfig& cfg) {
    if (P.rows() != R.rows() || P.cols() != R.cols()) throw ContractError("correlation: image shapes differ");
    cfg.validate(P.rows(), P.cols());
    const auto hr = static_cast<std::size_t>(cfg.range_rows), hc = static_cast<std::size_t>(cfg.range_cols);
    const std::size_t top = cfg.top(P.rows()), left = cfg.left(P.cols());
    const std::size_t lr = cfg.patch_rows + 2 * hr, lc = cfg.patch_cols + 2 * hc;

    // Z = Q + iR with Q the patch at offset (hr, hc) and R the window around it.
    ComplexField z(lr, lc);
    for (std::size_t i = 0; i < lr; ++i) {
        const long ri = static_cast<long>(top + i) - static_cast<long>(hr);
        for (std::size_t j = 0; j < lc; ++j) {
            const long rj = static_cast<long>(left + j) - static_cast<long>(hc);
            double q = 0.0, r = 0.0;
            if (i >= hr && i < hr + cfg.patch_rows && j >= hc && j < hc + cfg.patch_cols)
                q = P(static_cast<std::size_t>(ri), static_cast<std::size_t>(rj));
            if (ri >= 0 && rj >= 0 && ri < static_cast<long>(R.rows()) && rj < static_cast<long>(R.cols()))
                r = R(static_cast<std::size_t>(ri), static_cast<std::size_t>(rj));
            z(i, j) = {q, r};
        }
    }
    fft2_inplace(z.span(), lr, lc, -1);
    ComplexField prod(lr, lc);
    for (std::size_t i = 0; i < lr; ++i)
        for (std::size_t j = 0; j < lc; ++j) {
            const cplx a = z(i, j), b = std::conj(z((lr - i) % lr, (lc - j) % lc));
            const cplx qhat = 0.5 * (a + b);
            const cplx rhat = cplx(0.0, -0.5) * (a - b);
            prod(i, j) = qhat * std::conj(rhat);
        }
    fft2_inplace(prod.span(), lr, lc, +1);

    CorrelationMap m;
    m.values = RealField(2 * hr + 1, 2 * hc + 1, P.pitch(), Plane::FarField);
    const double scale = 1.0 / static_cast<double>(lr * lc);
    for (std::size_t i = 0; i <= 2 * hr; ++i) {
        const std::size_t si = (i + lr - hr) % lr;
        for (std::size_t j = 0; j <= 2 * hc; ++j) m.values(i, j) = scale * prod(si, (j + lc - hc) % lc).real();
    }
    return m;
}

}  // namespace

CorrelationMap cross_correlation_map(const RealField& probe, const RealField& conj, const AnalysisConfig& cfg) {
    return correlate(probe, rotate180(conj), cfg);
}

CorrelationMap auto_correlation_map(const RealField& image, const AnalysisConfig& cfg) {
    const auto b = static_cast<int>(std::floor(cfg.exclusion_radius)) + 1;
    if (cfg.exclusion_radius > 0.0 && (b > cfg.range_rows || b > cfg.range_cols))
        throw ConfigError("auto_correlation_map: exclusion radius reaches the map half-width");
    CorrelationMap m = correlate(image, image, cfg);
    if (cfg.exclusion_radius <= 0.0) return m;
    const int hr = cfg.range_rows, hc = cfg.range_cols;
    auto at = [&](int r, int c) { return m.values(static_cast<std::size_t>(hr + r), static_cast<std::size_t>(hc + c)); };
    RealField filled = m.values;
    const double r2 = cfg.exclusion_radius * cfg.exclusion_radius;
    for (int di = -b + 1; di < b; ++di)
        for (int dj = -b + 1; dj < b; ++dj) {
            if (di * di + dj * dj > r2) continue;
            const double t = static_cast<double>(di + b) / (2.0 * b);
            const double s = static_cast<double>(dj + b) / (2.0 * b);
            const double vert = (1 - t) * at(-b, dj) + t * at(b, dj);
            const double horiz = (1 - s) * at(di, -b) + s * at(di, b);
            filled(static_cast<std::size_t>(hr + di), static_cast<std::size_t>(hc + dj)) = 0.5 * (vert + horiz);
        }
    m.values = std::move(filled);
    return m;
}

void MapAverager::add(const CorrelationMap& m) {
    if (n_ == 0) {
        rows_ = m.values.rows();
        cols_ = m.values.cols();
        sum_.assign(rows_ * cols_, 0.0);
    } else if (m.values.rows() != rows_ || m.values.cols() != cols_) {
        throw ContractError("average_maps: map geometries differ");
    }
    for (std::size_t k = 0; k < sum_.size(); ++k) sum_[k] += m.values[k];
    ++n_;
}

CorrelationMap MapAverager::mean() const {
    if (n_ == 0) throw ContractError("average_maps: no maps");
    CorrelationMap out;
    out.values = RealField(rows_, cols_, 16e-6, Plane::FarField);
    for (std::size_t k = 0; k < sum_.size(); ++k) out.values[k] = sum_[k] / static_cast<double>(n_);
    return out;
}

CorrelationMap average_maps(const std::vector<CorrelationMap>& maps) {
    MapAverager avg;
    for (const auto& m : maps) avg.add(m);
    return avg.mean();
}

CorrelationMap normalize_map(const CorrelationMap& m) {
    double ss = 0.0;
    for (double v : m.values.values()) ss += v * v;
    if (!(ss > 0.0) || !std::isfinite(ss)) throw ContractError("normalize_map: map is zero");
    CorrelationMap out = m;
    const double s = 1.0 / std::sqrt(ss);
    for (auto& v : out.values.values()) v *= s;
    out.scale = m.scale * s;
    return out;
}

// ---------------------------------------------------------------- fidelity

RenderedTarget render_target(const TargetSpec& target, std::size_t rows, std::size_t cols, double pitch_px) {
    if (!(pitch_px > 0.0)) throw ContractError("render_target: pitch must be positive");
    const std::size_t n = target.target.rows();
    if (!target.target.square() || target.signal.rows() != n || target.signal.cols() != n)
        throw ContractError("render_target: target and signal mask must be equal square grids");
    RenderedTarget out{RealField(rows, cols, 16e-6, Plane::FarField), Mask(rows, cols)};
    const auto c0 = static_cast<double>(n / 2);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double xr = (static_cast<double>(i) - static_cast<double>(rows / 2)) / pitch_px;
            const double xc = (static_cast<double>(j) - static_cast<double>(cols / 2)) / pitch_px;
            const long ti = std::lround(c0 + xr), tj = std::lround(c0 + xc);
            if (ti < 0 || tj < 0 || ti >= static_cast<long>(n) || tj >= static_cast<long>(n)) continue;
            const auto ui = static_cast<std::size_t>(ti), uj = static_cast<std::size_t>(tj);
            out.values(i, j) = target.target(ui, uj).real();
            out.signal(i, j) = target.signal(ui, uj);
        }
    return out;
}

FidelityReport fidelity(const CorrelationMap& map, const RenderedTarget& target) {
    const auto& v = map.values;
    if (v.rows() != target.values.rows() || v.cols() != target.values.cols())
        throw ContractError("fidelity: target is not rendered on the map geometry");
    double sa = 0, sb = 0, n = 0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (target.signal[k]) {
            sa += v[k];
            sb += target.values[k];
            n += 1;
        }
    if (n < 2) throw ContractError("fidelity: signal region has fewer than two samples");
    const double ma = sa / n, mb = sb / n;
    double sab = 0, saa = 0, sbb = 0, peak = 0, bg2 = 0, nb = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (target.signal[k]) {
            sab += (v[k] - ma) * (target.values[k] - mb);
            saa += (v[k] - ma) * (v[k] - ma);
            sbb += (target.values[k] - mb) * (target.values[k] - mb);
            peak = std::max(peak, std::abs(v[k]));
        } else {
            bg2 += v[k] * v[k];
            nb += 1;
        }
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw ContractError("fidelity: constant input over the signal region");
    FidelityReport r;
    r.coefficient = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    r.peak_to_background = nb > 0 && bg2 > 0 ? peak / std::sqrt(bg2 / nb) : std::numeric_limits<double>::infinity();
    r.signal_samples = static_cast<std::size_t>(n);
    return r;
}

void write_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::string num(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

}  // namespace

void write_fidelity_report(const std::filesystem::path& path, const FidelityReport& r) {
    write_key_values(path, {{"coefficient", num(r.coefficient)},
                            {"peak_to_background", num(r.peak_to_background)},
                            {"signal_samples", std::to_string(r.signal_samples)},
                            {"n_maps", std::to_string(r.n_maps)}});
}

// ---------------------------------------------------------------- squeezing

void SqueezingAccumulator::add(double probe, double conj) {
    ++n_;
    const double d = probe - conj, s = probe + conj;
    const double delta = d - mean_d_;
    mean_d_ += delta / static_cast<double>(n_);
    m2_d_ += delta * (d - mean_d_);
    mean_s_ += (s - mean_s_) / static_cast<double>(n_);
}

void SqueezingAccumulator::add_frames(const FramePair& pair) {
    for (const auto& f : pair.frames) {
        const std::size_t half = f.cols() / 2;
        double p = 0.0, c = 0.0;
        for (std::size_t i = 0; i < f.rows(); ++i)
            for (std::size_t j = 0; j < half; ++j) {
                p += f(i, j);
                c += f(i, half + j);
            }
        add(p, c);
    }
}

SqueezingEstimate SqueezingAccumulator::estimate(double background_mean, double background_var) const {
    if (n_ < 2) throw ContractError("estimate_squeezing: need at least two samples");
    const double var = m2_d_ / static_cast<double>(n_ - 1) - background_var;
    const double shot = mean_s_ - background_mean;
    if (!(shot > 0.0)) throw ContractError("estimate_squeezing: no signal above the background");
    SqueezingEstimate e;
    e.samples = n_;
    e.variance_ratio = var / shot;
    e.db = 10.0 * std::log10(e.variance_ratio);
    const double rel = 1.96 * std::sqrt(2.0 / static_cast<double>(n_ - 1));
    e.ci_low_db = 10.0 * std::log10(e.variance_ratio * std::max(1.0 - rel, 1e-6));
    e.ci_high_db = 10.0 * std::log10(e.variance_ratio * (1.0 + rel));
    e.wide_confidence = n_ < 100;
    return e;
}

SqueezingEstimate estimate_squeezing(const PhotodiodeTrace& trace) {
    if (trace.probe.size() != trace.conj.size()) throw ContractError("estimate_squeezing: trace lengths differ");
    SqueezingAccumulator acc;
    for (std::size_t k = 0; k < trace.probe.size(); ++k) acc.add(trace.probe[k], trace.conj[k]);
    return acc.estimate(2.0 * trace.background_mean, 2.0 * trace.background_mean);
}

void write_squeezing_report(const std::filesystem::path& path, const SqueezingEstimate& s) {
    write_key_values(path, {{"variance_ratio", num(s.variance_ratio)},
                            {"db", num(s.db)},
                            {"ci_low_db", num(s.ci_low_db)},
                            {"ci_high_db", num(s.ci_high_db)},
                            {"samples", std::to_string(s.samples)},
                            {"wide_confidence", s.wide_confidence ? "true" : "false"}});
}

}  // namespace twinbeam
