#include "twinbeam/optics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "twinbeam/fft.hpp"
#include "twinbeam/grid_io.hpp"

namespace twinbeam {

void OpticalConfig::validate() const {
    const std::pair<const char*, double> positive[] = {
        {"wavelength", wavelength},           {"focal_length", focal_length},
        {"cell_length", cell_length},         {"pump_waist_radius", pump_waist_radius},
        {"probe_waist_radius", probe_waist_radius}, {"probe_pump_angle", probe_pump_angle},
        {"emccd_pixel", emccd_pixel},         {"slm_pixel", slm_pixel},
        {"gain", gain}};
    for (const auto& [name, v] : positive)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("optics.") + name + " must be positive");
    if (probe_pump_angle >= 0.1) throw ConfigError("optics.probe_pump_angle must be below 0.1 rad");
    if (gain <= 1.0) throw ConfigError("optics.gain must exceed 1");
}

AngularSpectrum angular_spectrum(const ComplexField& pump) {
    if (pump.plane() != Plane::CellCenter) throw ContractError("angular_spectrum: pump must be tagged CellCenter");
    require_transform_grid(pump, "angular_spectrum");
    AngularSpectrum s;
    s.field = dft2_centered(pump);
    s.k_pitch = s.field.pitch();
    return s;
}

double border_energy_fraction(const ComplexField& f, double fraction) {
    const std::size_t n = f.n();
    const auto b = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    double total = 0.0, border = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::norm(f(i, j));
            total += e;
            if (i < b || j < b || i >= n - b || j >= n - b) border += e;
        }
    return total > 0.0 ? border / total : 0.0;
}

ConvolutionMap pump_self_convolution(const ComplexField& pump, const SelfConvolutionOptions& opt) {
    if (pump.plane() != Plane::CellCenter) throw ContractError("pump_self_convolution: pump must be tagged CellCenter");
    require_transform_grid(pump, "pump_self_convolution");
    require_finite(pump, "pump_self_convolution");
    if (!is_power_of_two(opt.pad_factor)) throw SizingError("pump_self_convolution: pad_factor must be a power of two");

    ComplexField sq = pump;
    for (auto& v : sq.values()) v *= v;
    if (opt.check_border) {
        const double frac = border_energy_fraction(sq, opt.border_fraction);
        if (frac >= opt.border_tolerance)
            throw WraparoundError("pump_self_convolution: " + std::to_string(frac) +
                                  " of |pump^2| energy lies in the grid border; enlarge the grid");
    }
    const std::size_t n = pump.n();
    ComplexField padded = opt.pad_factor > 1 ? embed_and_crop(sq, n * opt.pad_factor) : sq;
    ConvolutionMap out;
    out.field = dft2_centered(padded);
    out.q_pitch = out.field.pitch();
    if (opt.crop_back && opt.pad_factor > 1) out.field = embed_and_crop(out.field, n);
    return out;
}

double q_to_farfield(double q, const OpticalConfig& cfg) { return cfg.focal_length * q / cfg.wavenumber(); }

FarFieldMap kmap_to_farfield(const ConvolutionMap& q_grid, const OpticalConfig& cfg) {
    FarFieldMap m;
    m.field = q_grid.field;
    m.pitch_m = q_to_farfield(q_grid.q_pitch, cfg);
    m.pitch_px = m.pitch_m / cfg.emccd_pixel;
    m.field.set_pitch(m.pitch_m);
    m.field.set_plane(Plane::FarField);
    return m;
}

double sinc_weight(double delta_kz, double cell_length) {
    const double x = 0.5 * delta_kz * cell_length;
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

namespace {

double kz(double k, double kperp2, MismatchModel model) {
    if (model == MismatchModel::Paraxial) return k - kperp2 / (2.0 * k);
    return std::sqrt(k * k - kperp2);
}

double norm2(const Vec2& v) { return v[0] * v[0] + v[1] * v[1]; }

void require_paraxial(const Vec2& v, double k) {
    if (std::sqrt(norm2(v)) / k > 0.1) throw DomainError("transverse wavevector exceeds the paraxial limit |k_perp|/k <= 0.1");
}

}  // namespace

double longitudinal_mismatch(const Vec2& k_probe, const Vec2& k_conj, const OpticalConfig& cfg,
                             MismatchModel model) {
    const double k = cfg.wavenumber();
    const Vec2 half_q{0.5 * (k_probe[0] + k_conj[0]), 0.5 * (k_probe[1] + k_conj[1])};
    require_paraxial(k_probe, k);
    require_paraxial(k_conj, k);
    if (model == MismatchModel::Paraxial) {
        // Exact cancellation of the k terms avoids round-off on 1e7-sized numbers.
        return (norm2(k_probe) + norm2(k_conj) - 2.0 * norm2(half_q)) / (2.0 * k);
    }
    return 2.0 * kz(k, norm2(half_q), model) - kz(k, norm2(k_probe), model) - kz(k, norm2(k_conj), model);
}

double phase_mismatch_weight(const Vec2& k_probe, const Vec2& k_conj, const OpticalConfig& cfg,
                             MismatchModel model) {
    return sinc_weight(longitudinal_mismatch(k_probe, k_conj, cfg, model), cfg.cell_length);
}

RealField phase_mismatch_map(std::size_t n, double q_pitch, const OpticalConfig& cfg, MismatchModel model) {
    const double k0 = cfg.wavenumber() * std::sin(cfg.probe_pump_angle);
    const double carrier = longitudinal_mismatch({k0, 0.0}, {-k0, 0.0}, cfg, model);
    RealField w(n, q_pitch, Plane::FarField);
    const double half = static_cast<double>(n / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double qy = (static_cast<double>(i) - half) * q_pitch;
            const double qx = (static_cast<double>(j) - half) * q_pitch;
            const double dk = longitudinal_mismatch({k0 + 0.5 * qx, 0.5 * qy}, {-k0 + 0.5 * qx, 0.5 * qy}, cfg, model);
            w(i, j) = sinc_weight(dk - carrier, cfg.cell_length);
        }
    return w;
}

CorrelationMap resample_prediction(const ConvolutionMap& phi, double delta_phase, const OpticalConfig& cfg,
                                   const PredictOptions& opt) {
    const FarFieldMap ff = kmap_to_farfield(phi, cfg);
    const std::size_t m = ff.field.n();
    const double center = static_cast<double>(m / 2);
    const cplx rot = std::polar(opt.model_scale, -2.0 * delta_phase);
    CorrelationMap out;
    out.values = RealField(opt.roi_rows, opt.roi_cols, cfg.emccd_pixel, Plane::FarField);
    out.scale = opt.model_scale;
    const auto r0 = static_cast<double>(opt.roi_rows / 2), c0 = static_cast<double>(opt.roi_cols / 2);
    for (std::size_t i = 0; i < opt.roi_rows; ++i) {
        const double u = (static_cast<double>(i) - r0) / ff.pitch_px + center;
        for (std::size_t j = 0; j < opt.roi_cols; ++j) {
            const double v = (static_cast<double>(j) - c0) / ff.pitch_px + center;
            if (u < 0.0 || v < 0.0 || u > static_cast<double>(m - 1) || v > static_cast<double>(m - 1))
                throw BoundsError("predict: ROI exceeds the computed far-field span");
            const auto iu = std::min(static_cast<std::size_t>(u), m - 2);
            const auto iv = std::min(static_cast<std::size_t>(v), m - 2);
            const double fu = u - static_cast<double>(iu), fv = v - static_cast<double>(iv);
            const cplx val = (1 - fu) * ((1 - fv) * ff.field(iu, iv) + fv * ff.field(iu, iv + 1)) +
                             fu * ((1 - fv) * ff.field(iu + 1, iv) + fv * ff.field(iu + 1, iv + 1));
            out.values(i, j) = std::real(val * rot);
        }
    }
    return out;
}

CorrelationMap predict_cross_correlation(const ComplexField& pump, double delta_phase, const OpticalConfig& cfg,
                                         const PredictOptions& opt) {
    cfg.validate();
    SelfConvolutionOptions so;
    so.pad_factor = opt.pad_factor;
    so.crop_back = false;
    so.check_border = opt.check_border;
    ConvolutionMap phi = pump_self_convolution(pump, so);
    if (opt.apply_sinc) {
        const RealField w = phase_mismatch_map(phi.field.n(), phi.q_pitch, cfg, opt.sinc_model);
        for (std::size_t i = 0; i < w.size(); ++i) phi.field[i] *= w[i];
    }
    return resample_prediction(phi, delta_phase, cfg, opt);
}

void write_map_csv(const std::filesystem::path& path, const CorrelationMap& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "xi_row_px,xi_col_px,value\n";
    out.precision(17);
    const auto r0 = static_cast<long>(m.values.rows() / 2), c0 = static_cast<long>(m.values.cols() / 2);
    for (std::size_t i = 0; i < m.values.rows(); ++i)
        for (std::size_t j = 0; j < m.values.cols(); ++j)
            out << static_cast<long>(i) - r0 << ',' << static_cast<long>(j) - c0 << ',' << m.values(i, j) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

CorrelationMap read_map_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string line;
    std::getline(in, line);
    std::map<std::pair<long, long>, double> cells;
    long rmin = 0, rmax = 0, cmin = 0, cmax = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        long r, c;
        double v;
        char comma1, comma2;
        if (!(ss >> r >> comma1 >> c >> comma2 >> v)) throw IoError("malformed map row: " + line);
        cells[{r, c}] = v;
        if (first) {
            rmin = rmax = r;
            cmin = cmax = c;
            first = false;
        }
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    if (first) throw IoError("empty map: " + path.string());
    CorrelationMap m;
    m.values = RealField(static_cast<std::size_t>(rmax - rmin + 1), static_cast<std::size_t>(cmax - cmin + 1));
    for (const auto& [rc, v] : cells)
        m.values(static_cast<std::size_t>(rc.first - rmin), static_cast<std::size_t>(rc.second - cmin)) = v;
    return m;
}

void write_map_image(const std::filesystem::path& path, const CorrelationMap& m) {
    const PgmScale s = write_pgm_scaled(path, m.values);
    nlohmann::json j;
    j["min"] = s.min;
    j["max"] = s.max;
    j["levels"] = 65535;
    j["rows"] = m.values.rows();
    j["cols"] = m.values.cols();
    j["xi_origin_row"] = m.values.rows() / 2;
    j["xi_origin_col"] = m.values.cols() / 2;
    std::ofstream out(path.string() + ".scale.json");
    if (!out) throw IoError("cannot write scale sidecar for " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace twinbeam
