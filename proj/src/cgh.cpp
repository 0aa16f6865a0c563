#include "twinbeam/cgh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "json.hpp"
#include "twinbeam/fft.hpp"
#include "twinbeam/grid_io.hpp"

namespace twinbeam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_shape(const ComplexField& e0, const RealField& phase, const char* what) {
    if (e0.rows() != phase.rows() || e0.cols() != phase.cols())
        throw ContractError(std::string(what) + ": pump and phase shapes differ");
}

// Target and signal mask placed on the padded far-field grid.
struct PaddedTarget {
    ComplexField masked;  // T on signal, zero elsewhere
};

PaddedTarget pad_target(const TargetSpec& t, std::size_t padded_n) {
    if (!t.target.square()) throw ContractError("target grid must be square");
    const std::size_t n = t.target.n();
    ComplexField masked = t.target;
    for (std::size_t i = 0; i < masked.size(); ++i)
        if (!t.signal[i]) masked[i] = 0.0;
    if (n == padded_n) return {masked};
    if (n > padded_n) throw ContractError("target grid larger than the padded far field");
    return {embed_and_crop(masked, padded_n)};
}

// The overlap is linear in u^2 = E0^2 e^{2i phi}; by unitarity of the
// transform it reduces to a pointwise sum against the back-propagated target:
//   O = Re sum_rho w(rho) e^{2i phi(rho)},  w = c0 E0^2 conj(V),  V = crop(D^H T_mask).
struct OverlapModel {
    ComplexField weights;
    Mask frozen;

    OverlapModel(const ComplexField& e0, const TargetSpec& target, std::size_t pad, const ConstantDisk* disk) {
        require_transform_grid(e0, "cgh");
        if (!is_power_of_two(pad)) throw SizingError("pad_factor must be a power of two");
        const std::size_t n = e0.n(), m = n * pad;
        double s4 = 0.0;
        for (const auto& v : e0.values()) s4 += std::norm(v) * std::norm(v);
        if (!(s4 > 0.0)) throw ContractError("cgh: pump field is identically zero");
        const double c0 = 1.0 / std::sqrt(s4);
        ComplexField t = pad_target(target, m).masked;
        t.set_plane(Plane::FarField);
        ComplexField back = embed_and_crop(idft2_centered(t), n);
        weights = ComplexField(n, e0.pitch(), Plane::SLM);
        for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = c0 * e0[i] * e0[i] * std::conj(back[i]);
        frozen = Mask(n, n);
        if (disk) frozen = disk_mask(n, *disk);
    }

    double overlap(const RealField& phi) const {
        double o = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) o += std::real(weights[i] * std::polar(1.0, 2.0 * phi[i]));
        return o;
    }

    // dO/dphi = Re{2i w e^{2i phi}}; frozen samples are zero.
    RealField overlap_gradient(const RealField& phi) const {
        RealField g(phi.rows(), phi.cols(), phi.pitch(), phi.plane());
        for (std::size_t i = 0; i < weights.size(); ++i)
            g[i] = frozen[i] ? 0.0 : -2.0 * std::imag(weights[i] * std::polar(1.0, 2.0 * phi[i]));
        return g;
    }
};

double dot(const RealField& a, const RealField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(const RealField& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

bool ConstantDisk::contains(std::size_t r, std::size_t c) const {
    const double dr = static_cast<double>(r) - static_cast<double>(center_row);
    const double dc = static_cast<double>(c) - static_cast<double>(center_col);
    return dr * dr + dc * dc <= radius * radius;
}

ConstantDisk default_disk(std::size_t n) {
    ConstantDisk d;
    d.center_row = d.center_col = n / 2;
    d.radius = 0.02 * static_cast<double>(n);
    return d;
}

Mask disk_mask(std::size_t n, const ConstantDisk& disk) {
    Mask m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = disk.contains(i, j) ? 1 : 0;
    return m;
}

PhasePattern apply_constant_phase_disk(const PhasePattern& p, const ConstantDisk& disk) {
    const std::size_t n = p.phase.n();
    if (!p.phase.square()) throw ContractError("apply_constant_phase_disk: phase grid must be square");
    if (disk.radius < 0.0 || disk.radius >= static_cast<double>(n) / 2.0)
        throw ContractError("apply_constant_phase_disk: disk radius must be below N/2");
    if (disk.center_row >= n || disk.center_col >= n)
        throw ContractError("apply_constant_phase_disk: disk center outside the grid");
    PhasePattern out = p;
    out.disk = disk;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (disk.contains(i, j)) out.phase(i, j) = disk.value;
    return out;
}

TargetSpec make_target(ComplexField target, Mask signal, Mask noise) {
    if (!target.same_shape(ComplexField(signal.rows(), signal.cols())) ||
        !target.same_shape(ComplexField(noise.rows(), noise.cols())))
        throw ContractError("make_target: target and masks must share a shape");
    double e = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (signal[i] && noise[i]) throw ContractError("make_target: signal and noise masks overlap");
        if (signal[i]) {
            ++count;
            e += std::norm(target[i]);
        } else {
            target[i] = 0.0;
        }
    }
    if (count == 0) throw ContractError("make_target: empty signal mask");
    if (!(e > 0.0)) throw ContractError("make_target: target has no energy in the signal region");
    const double s = 1.0 / std::sqrt(e);
    for (auto& v : target.values()) v *= s;
    target.set_plane(Plane::FarField);
    return {std::move(target), std::move(signal), std::move(noise)};
}

ComplexField normalize_pump(const ComplexField& e0) {
    const double e = energy(e0);
    if (!(e > 0.0)) throw ContractError("normalize_pump: zero field");
    return cplx(1.0 / std::sqrt(e), 0.0) * e0;
}

ComplexField forward_model(const ComplexField& e0, const RealField& phase, std::size_t pad_factor) {
    require_same_shape(e0, phase, "forward_model");
    require_transform_grid(e0, "forward_model");
    ComplexField sq(e0.n(), e0.pitch(), Plane::CellCenter);
    double s4 = 0.0;
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const cplx u = e0[i] * std::polar(1.0, phase[i]);
        sq[i] = u * u;
        s4 += std::norm(sq[i]);
    }
    if (!(s4 > 0.0)) throw ContractError("forward_model: pump field is identically zero");
    ComplexField out = dft2_centered(embed_and_crop(sq, e0.n() * pad_factor));
    for (auto& v : out.values()) v /= std::sqrt(s4);
    return out;
}

double signal_overlap(const ComplexField& e_out, const TargetSpec& target) {
    const ComplexField t = pad_target(target, e_out.n()).masked;
    double o = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) o += std::real(std::conj(t[i]) * e_out[i]);
    return o;
}

double cost(const ComplexField& e_out, const TargetSpec& target, double d) {
    if (std::none_of(target.signal.values().begin(), target.signal.values().end(), [](auto v) { return v != 0; }))
        throw ContractError("cost: empty signal mask");
    const double b = 1.0 - signal_overlap(e_out, target);
    return std::pow(10.0, d) * b * b;
}

RealField cost_gradient(const PhasePattern& phase, const ComplexField& e0, const TargetSpec& target, double d,
                        std::size_t pad_factor) {
    require_same_shape(e0, phase.phase, "cost_gradient");
    OverlapModel model(e0, target, pad_factor, &phase.disk);
    const double o = model.overlap(phase.phase);
    RealField g = model.overlap_gradient(phase.phase);
    const double s = -2.0 * std::pow(10.0, d) * (1.0 - o);
    for (auto& v : g.values()) v *= s;
    return g;
}

void OptimizerConfig::validate() const {
    if (d < 0.0) throw ConfigError("optimizer.d must be >= 0");
    if (max_iterations <= 0) throw ConfigError("optimizer.max_iterations must be positive");
    if (!(initial_step > 0.0)) throw ConfigError("optimizer.initial_step must be positive");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("optimizer.shrink must lie in (0, 1)");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
        throw ConfigError("optimizer.sufficient_decrease must lie in (0, 1)");
    if (max_backtracks <= 0) throw ConfigError("optimizer.max_backtracks must be positive");
    if (restart_period < 0) throw ConfigError("optimizer.restart_period must be >= 0");
    if (stagnation_window <= 0) throw ConfigError("optimizer.stagnation_window must be positive");
    if (!(stagnation_tol > 0.0)) throw ConfigError("optimizer.stagnation_tol must be positive");
    if (!is_power_of_two(pad_factor)) throw ConfigError("optimizer.pad_factor must be a power of two");
}

CGHResult conjugate_gradient_minimize(const ComplexField& e0, const TargetSpec& target, const PhasePattern& init,
                                      const OptimizerConfig& opt) {
    opt.validate();
    require_same_shape(e0, init.phase, "conjugate_gradient_minimize");
    const OverlapModel model(e0, target, opt.pad_factor, &init.disk);
    const double scale = std::pow(10.0, opt.d);
    auto eval_cost = [&](const RealField& phi) {
        const double b = 1.0 - model.overlap(phi);
        return scale * b * b;
    };
    auto eval_grad = [&](const RealField& phi) {
        RealField g = model.overlap_gradient(phi);
        const double s = -2.0 * scale * (1.0 - model.overlap(phi));
        for (auto& v : g.values()) v *= s;
        return g;
    };

    CGHResult res;
    res.phase = apply_constant_phase_disk(init, init.disk);
    RealField& x = res.phase.phase;
    std::size_t n_free = 0;
    for (auto f : model.frozen.values()) n_free += f ? 0 : 1;
    const int restart = opt.restart_period > 0 ? opt.restart_period : static_cast<int>(std::max<std::size_t>(n_free, 1));

    double c = eval_cost(x);
    RealField g = eval_grad(x);
    RealField p = -1.0 * g;
    res.cost_history.emplace_back(0, c);
    double trial_change = opt.initial_step;
    int since_restart = 0;

    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double gg = dot(g, g);
        if (c == 0.0 || gg == 0.0) {
            res.converged = true;
            break;
        }
        double slope = dot(g, p);
        if (!(slope < 0.0)) {
            p = -1.0 * g;
            slope = -gg;
            since_restart = 0;
        }
        bool accepted = false;
        RealField trial = x;
        double c_new = c;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double alpha = trial_change / max_abs(p);
            for (int bt = 0; bt <= opt.max_backtracks; ++bt, alpha *= opt.shrink) {
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * p[i];
                c_new = eval_cost(trial);
                if (c_new <= c + opt.sufficient_decrease * alpha * slope) {
                    accepted = true;
                    trial_change = std::min(opt.initial_step, 2.0 * alpha * max_abs(p));
                    break;
                }
            }
            if (!accepted) {
                // Retry once along steepest descent before giving up.
                if (since_restart == 0) break;
                p = -1.0 * g;
                slope = -gg;
                since_restart = 0;
            }
        }
        if (!accepted) {
            res.line_search_failed = true;
            break;
        }
        x = trial;
        c = c_new;
        res.iterations = it;
        res.cost_history.emplace_back(it, c);

        RealField g_new = eval_grad(x);
        ++since_restart;
        double beta = 0.0;
        if (since_restart < restart) {
            double num = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) num += g_new[i] * (g_new[i] - g[i]);
            beta = std::max(0.0, num / gg);
        } else {
            since_restart = 0;
        }
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = -g_new[i] + beta * p[i];
        g = std::move(g_new);

        const auto hs = res.cost_history.size();
        if (hs > static_cast<std::size_t>(opt.stagnation_window)) {
            const double older = res.cost_history[hs - 1 - static_cast<std::size_t>(opt.stagnation_window)].second;
            if (c == 0.0 || std::abs(older - c) <= opt.stagnation_tol * c) {
                res.converged = true;
                break;
            }
        }
    }
    res.final_overlap = model.overlap(x);
    res.quantized = quantize_8bit(x);
    return res;
}

RealField defocus_initial_phase(const ComplexField& e0, const TargetSpec& target, std::size_t pad_factor) {
    const std::size_t n = e0.n(), m = n * pad_factor;
    const double half_n = static_cast<double>(n / 2);
    double sw = 0.0, sr2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double w = std::norm(e0(i, j));
            const double dy = static_cast<double>(i) - half_n, dx = static_cast<double>(j) - half_n;
            sw += w;
            sr2 += w * (dx * dx + dy * dy);
        }
    const double waist = std::sqrt(2.0 * sr2 / sw);

    const std::size_t tn = target.signal.n();
    const double toff = static_cast<double>(tn / 2);
    double cnt = 0.0, tr2 = 0.0;
    for (std::size_t i = 0; i < tn; ++i)
        for (std::size_t j = 0; j < tn; ++j)
            if (target.signal(i, j)) {
                const double dy = static_cast<double>(i) - toff, dx = static_cast<double>(j) - toff;
                cnt += 1.0;
                tr2 += dx * dx + dy * dy;
            }
    const double r_rms = cnt > 0.0 ? std::sqrt(tr2 / cnt) : 0.0;
    const double q_t = kTwoPi * r_rms / static_cast<double>(m);
    const double a = q_t * std::numbers::sqrt2 / (4.0 * waist);

    RealField phi(n, e0.pitch(), Plane::SLM);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double dy = static_cast<double>(i) - half_n, dx = static_cast<double>(j) - half_n;
            phi(i, j) = a * (dx * dx + dy * dy);
        }
    return phi;
}

RealField random_initial_phase(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    RealField phi(n, 1.0, Plane::SLM);
    for (auto& v : phi.values()) v = u(rng);
    return phi;
}

double wrap_phase(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

RealField wrap_phase(const RealField& phi) {
    RealField out = phi;
    for (auto& v : out.values()) v = wrap_phase(v);
    return out;
}

double zero_order_fraction(const ComplexField& e0, const RealField& phase) {
    require_same_shape(e0, phase, "zero_order_fraction");
    cplx s = 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < e0.size(); ++i) {
        s += e0[i] * std::polar(1.0, phase[i]);
        e += std::norm(e0[i]);
    }
    return std::norm(s) / (static_cast<double>(e0.size()) * e);
}

CompressionResult phase_compress(const PhasePattern& p, const ComplexField& e0, double lo, double hi, int samples) {
    CompressionResult res;
    PhasePattern wrapped = p;
    wrapped.phase = wrap_phase(p.phase);
    res.dc_fraction_before = zero_order_fraction(e0, wrapped.phase);
    const auto [mn, mx] = std::minmax_element(wrapped.phase.values().begin(), wrapped.phase.values().end());
    if (wrapped.phase.size() == 0 || *mx - *mn < 1e-12) {
        res.phase = wrapped;
        res.factor = 1.0;
        res.dc_fraction = res.dc_fraction_before;
        res.note = "no structure";
        return res;
    }
    double best = std::numeric_limits<double>::infinity();
    PhasePattern trial = wrapped;
    for (int k = 0; k < samples; ++k) {
        const double s = samples > 1 ? lo + (hi - lo) * k / (samples - 1) : hi;
        for (std::size_t i = 0; i < trial.phase.size(); ++i) trial.phase[i] = s * wrapped.phase[i];
        trial = apply_constant_phase_disk(trial, p.disk);
        const double f = zero_order_fraction(e0, trial.phase);
        if (f < best) {
            best = f;
            res.factor = s;
            res.phase = trial;
        }
    }
    res.dc_fraction = best;
    return res;
}

QuantizedHologram quantize_8bit(const RealField& phase) {
    QuantizedHologram q;
    q.levels = Grid<std::uint8_t>(phase.rows(), phase.cols(), phase.pitch(), Plane::SLM);
    for (std::size_t i = 0; i < phase.size(); ++i) {
        const long level = std::lround(wrap_phase(phase[i]) / kTwoPi * 256.0);
        q.levels[i] = static_cast<std::uint8_t>(level % 256);
    }
    return q;
}

RealField dequantize(const QuantizedHologram& q) {
    RealField phi(q.levels.rows(), q.levels.cols(), q.levels.pitch(), Plane::SLM);
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = kTwoPi * q.levels[i] / 256.0;
    return phi;
}

void write_hologram(const std::filesystem::path& path, const QuantizedHologram& q, const HologramInfo& info) {
    GrayImage img;
    img.rows = q.levels.rows();
    img.cols = q.levels.cols();
    img.maxval = 255;
    img.pixels.assign(q.levels.values().begin(), q.levels.values().end());
    write_pgm(path, img);

    nlohmann::json j;
    j["n"] = img.rows;
    j["pad_factor"] = info.pad_factor;
    j["pitch"] = info.pitch;
    j["compression"] = info.compression;
    j["disk"] = {{"center_row", info.disk.center_row},
                 {"center_col", info.disk.center_col},
                 {"radius", info.disk.radius},
                 {"value", info.disk.value}};
    j["reference_disk_value"] = info.reference_disk_value;
    j["cost_history"] = nlohmann::json::array();
    for (const auto& [it, c] : info.cost_history) j["cost_history"].push_back({it, c});
    std::ofstream out(path.string() + ".json");
    if (!out) throw IoError("cannot write hologram sidecar for " + path.string());
    out << j.dump(2) << '\n';
}

std::pair<QuantizedHologram, HologramInfo> read_hologram(const std::filesystem::path& path) {
    const GrayImage img = read_pgm(path);
    if (img.maxval > 255) throw IoError("hologram image must be 8-bit: " + path.string());
    std::ifstream in(path.string() + ".json");
    if (!in) throw IoError("missing hologram sidecar: " + path.string() + ".json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed hologram sidecar: ") + e.what());
    }
    HologramInfo info;
    try {
        info.pad_factor = j.at("pad_factor").get<std::size_t>();
        info.pitch = j.at("pitch").get<double>();
        info.compression = j.at("compression").get<double>();
        info.disk.center_row = j.at("disk").at("center_row").get<std::size_t>();
        info.disk.center_col = j.at("disk").at("center_col").get<std::size_t>();
        info.disk.radius = j.at("disk").at("radius").get<double>();
        info.disk.value = j.at("disk").at("value").get<double>();
        info.reference_disk_value = j.at("reference_disk_value").get<double>();
        for (const auto& e : j.at("cost_history")) info.cost_history.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed hologram sidecar: ") + e.what());
    }
    QuantizedHologram q;
    q.levels = Grid<std::uint8_t>(img.rows, img.cols, info.pitch, Plane::SLM);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) q.levels[i] = static_cast<std::uint8_t>(img.pixels[i]);
    return {q, info};
}

}  // namespace twinbeam
