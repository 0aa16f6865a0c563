#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "twinbeam/pipeline.hpp"

namespace twinbeam {

// ---------------------------------------------------------------- targets

RealField gaussian_blur(const RealField& f, double sigma) {
    if (!(sigma > 0.0)) return f;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& w : k) w /= total;

    const auto rows = static_cast<long>(f.rows()), cols = static_cast<long>(f.cols());
    RealField tmp(f.rows(), f.cols(), f.pitch(), f.plane());
    RealField out(f.rows(), f.cols(), f.pitch(), f.plane());
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const long cc = c + i;
                if (cc >= 0 && cc < cols) acc += k[i + radius] * f(r, cc);
            }
            tmp(r, c) = acc;
        }
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const long rr = r + i;
                if (rr >= 0 && rr < rows) acc += k[i + radius] * tmp(rr, c);
            }
            out(r, c) = acc;
        }
    return out;
}

Mask dilate(const Mask& m, int steps) {
    Mask cur = m;
    const std::size_t rows = m.rows(), cols = m.cols();
    for (int s = 0; s < steps; ++s) {
        Mask next = cur;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                if (cur(r, c)) continue;
                if ((r > 0 && cur(r - 1, c)) || (r + 1 < rows && cur(r + 1, c)) || (c > 0 && cur(r, c - 1)) ||
                    (c + 1 < cols && cur(r, c + 1)))
                    next(r, c) = 1;
            }
        cur = std::move(next);
    }
    return cur;
}

std::pair<RealField, Mask> glyph_image(std::size_t m, const GlyphOptions& opt) {
    if (m < 8) throw ContractError("glyph_image: grid too small");
    const double s = opt.scale, half_t = 0.5 * opt.thickness;
    RealField g(m, m, 1.0, Plane::FarField);
    Mask strokes(m, m);
    const double mid = static_cast<double>(m / 2);
    for (std::size_t r = 0; r < m; ++r) {
        const double y = static_cast<double>(r) - mid;
        for (std::size_t c = 0; c < m; ++c) {
            const double x = static_cast<double>(c) - mid;
            bool on = std::abs(std::hypot(y, x + 16 * s + opt.gap) - 12 * s) <= half_t;  // O
            const double ux = x - 16 * s - opt.gap;
            const bool stem_rows = y >= -17 * s && y <= 2 * s;
            on = on || (stem_rows && (std::abs(ux + 9 * s) <= half_t || std::abs(ux - 9 * s) <= half_t));
            on = on || (y >= 2 * s && std::abs(std::hypot(y - 2 * s, ux) - 9 * s) <= half_t);  // U bowl
            if (on) {
                g(r, c) = 1.0;
                strokes(r, c) = 1;
            }
        }
    }
    return {gaussian_blur(g, opt.blur), strokes};
}

namespace {

Mask complement(const Mask& m) {
    Mask out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
    return out;
}

}  // namespace

TargetSpec glyph_target(std::size_t m, const GlyphOptions& opt) {
    auto [amp, strokes] = glyph_image(m, opt);
    const Mask signal = dilate(strokes, opt.dilation);
    ComplexField t(m, m, 1.0, Plane::FarField);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = amp[i];
    return make_target(std::move(t), signal, complement(signal));
}

TargetSpec image_target(const GrayImage& amplitude, const GrayImage* phase, std::size_t m, double threshold,
                        int dilation) {
    if (amplitude.rows > m || amplitude.cols > m)
        throw BoundsError("image_target: image larger than the far-field grid");
    if (phase && (phase->rows != amplitude.rows || phase->cols != amplitude.cols))
        throw ContractError("image_target: phase image shape differs from amplitude image");
    if (amplitude.maxval == 0) throw ContractError("image_target: zero maxval");
    const std::size_t r0 = m / 2 - amplitude.rows / 2, c0 = m / 2 - amplitude.cols / 2;
    ComplexField t(m, m, 1.0, Plane::FarField);
    Mask core(m, m);
    for (std::size_t r = 0; r < amplitude.rows; ++r)
        for (std::size_t c = 0; c < amplitude.cols; ++c) {
            const std::size_t k = r * amplitude.cols + c;
            const double a = amplitude.pixels[k] / static_cast<double>(amplitude.maxval);
            double ph = 0.0;
            if (phase) ph = 2.0 * std::numbers::pi * phase->pixels[k] / static_cast<double>(phase->maxval);
            t(r0 + r, c0 + c) = std::polar(a, ph);
            if (a > threshold) core(r0 + r, c0 + c) = 1;
        }
    const Mask signal = dilate(core, dilation);
    return make_target(std::move(t), signal, complement(signal));
}

// ---------------------------------------------------------------- config

double PipelineConfig::pump_pitch() const {
    if (pitch > 0.0) return pitch;
    return optics.focal_length * optics.wavelength /
           (static_cast<double>(pad_factor) * static_cast<double>(n) * optics.emccd_pixel);
}

void PipelineConfig::validate() const {
    try {
        optics.validate();
        optimizer.validate();
        detector.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (!is_power_of_two(n) || n < 8) throw ConfigError("grid.n must be a power of two >= 8");
    if (!is_power_of_two(pad_factor)) throw ConfigError("grid.pad_factor must be a power of two");
    if (pitch < 0.0) throw ConfigError("grid.pitch must be >= 0");
    if (target_kind != "glyph" && target_kind != "image") throw ConfigError("target.kind must be glyph or image");
    if (target_kind == "image") {
        if (target_image.empty()) throw ConfigError("target.image is required for kind image");
        if (!std::filesystem::exists(target_image))
            throw ConfigError("target image not found: " + target_image.string());
        if (!target_phase_image.empty() && !std::filesystem::exists(target_phase_image))
            throw ConfigError("target phase image not found: " + target_phase_image.string());
    }
    if (glyph.dilation < 0) throw ConfigError("target.dilation must be >= 0");
    if (init != "random" && init != "defocus") throw ConfigError("optimizer.init must be random or defocus");
    if (!(compress_lo > 0.0 && compress_lo <= compress_hi) || compress_samples < 1)
        throw ConfigError("compression range is invalid");
    if (!(disk_radius >= 0.0) || disk_radius >= static_cast<double>(n) / 2.0)
        throw ConfigError("disk.radius must lie in [0, N/2)");
    if (n_pairs == 0) throw ConfigError("synthesis.n_pairs must be positive");
    if (!(lo_peak_counts > 0.0)) throw ConfigError("synthesis.lo_peak_counts must be positive");
    if (sampler_grid % 2 != 0 || sampler_grid < std::max(detector.rows, detector.half_cols()))
        throw ConfigError("synthesis.sampler_grid must be even and cover the half frame");
    if (schmidt_roi == 0) throw ConfigError("synthesis.schmidt_roi must be positive");
    if (!(schmidt_truncation > 0.0 && schmidt_truncation < 1.0))
        throw ConfigError("synthesis.schmidt_truncation must lie in (0, 1)");
    if (!(max_output_bytes > 0.0)) throw ConfigError("synthesis.max_output_bytes must be positive");
    try {
        analysis.validate(detector.rows, detector.half_cols());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

PipelineConfig default_pipeline_config() {
    PipelineConfig cfg;
    cfg.analysis.patch_rows = 128;
    cfg.analysis.patch_cols = 128;
    cfg.analysis.range_rows = 32;
    cfg.analysis.range_cols = 48;
    return cfg;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const char* sampler_name(SamplerKind k) { return k == SamplerKind::Schmidt ? "schmidt" : "convolution"; }
const char* norm_name(NormalizationMode m) { return m == NormalizationMode::Absolute ? "absolute" : "energy"; }

YAML::Node to_node(const PipelineConfig& c) {
    YAML::Node n;
    auto o = n["optics"];
    o["wavelength"] = c.optics.wavelength;
    o["focal_length"] = c.optics.focal_length;
    o["cell_length"] = c.optics.cell_length;
    o["pump_waist_radius"] = c.optics.pump_waist_radius;
    o["probe_waist_radius"] = c.optics.probe_waist_radius;
    o["probe_pump_angle_deg"] = c.optics.probe_pump_angle / kDeg;
    o["emccd_pixel"] = c.optics.emccd_pixel;
    o["slm_pixel"] = c.optics.slm_pixel;
    o["gain"] = c.optics.gain;

    auto g = n["grid"];
    g["n"] = c.n;
    g["pad_factor"] = c.pad_factor;
    g["pitch"] = c.pitch;

    auto t = n["target"];
    t["kind"] = c.target_kind;
    t["image"] = c.target_image.string();
    t["phase_image"] = c.target_phase_image.string();
    t["threshold"] = c.target_threshold;
    t["dilation"] = c.glyph.dilation;
    t["glyph"]["scale"] = c.glyph.scale;
    t["glyph"]["thickness"] = c.glyph.thickness;
    t["glyph"]["blur"] = c.glyph.blur;
    t["glyph"]["gap"] = c.glyph.gap;

    auto op = n["optimizer"];
    op["d"] = c.optimizer.d;
    op["max_iterations"] = c.optimizer.max_iterations;
    op["initial_step"] = c.optimizer.initial_step;
    op["shrink"] = c.optimizer.shrink;
    op["sufficient_decrease"] = c.optimizer.sufficient_decrease;
    op["max_backtracks"] = c.optimizer.max_backtracks;
    op["restart_period"] = c.optimizer.restart_period;
    op["stagnation_window"] = c.optimizer.stagnation_window;
    op["stagnation_tol"] = c.optimizer.stagnation_tol;
    op["init"] = c.init;
    op["seed"] = c.init_seed;

    auto cp = n["compression"];
    cp["enabled"] = c.compress;
    cp["lo"] = c.compress_lo;
    cp["hi"] = c.compress_hi;
    cp["samples"] = c.compress_samples;

    auto d = n["disk"];
    d["radius"] = c.disk_radius;
    d["reference"] = c.disk_reference;
    d["delta_phase"] = c.delta_phase;

    auto s = n["synthesis"];
    s["n_pairs"] = c.n_pairs;
    s["seed"] = c.seed;
    s["sampler"] = sampler_name(c.sampler);
    s["sampler_grid"] = c.sampler_grid;
    s["schmidt_roi"] = c.schmidt_roi;
    s["schmidt_truncation"] = c.schmidt_truncation;
    s["lo_peak_counts"] = c.lo_peak_counts;
    s["max_output_bytes"] = c.max_output_bytes;

    auto det = n["detector"];
    det["quantum_efficiency"] = c.detector.quantum_efficiency;
    det["excess_noise_factor_sq"] = c.detector.excess_noise_factor_sq;
    det["read_noise"] = c.detector.read_noise;
    det["saturation"] = c.detector.saturation;
    det["rows"] = c.detector.rows;
    det["cols"] = c.detector.cols;
    det["frame_separation"] = c.detector.frame_separation;
    det["poisson_threshold"] = c.detector.poisson_threshold;

    auto a = n["analysis"];
    a["patch_rows"] = c.analysis.patch_rows;
    a["patch_cols"] = c.analysis.patch_cols;
    a["patch_top"] = c.analysis.patch_top;
    a["patch_left"] = c.analysis.patch_left;
    a["range_rows"] = c.analysis.range_rows;
    a["range_cols"] = c.analysis.range_cols;
    a["exclusion_radius"] = c.analysis.exclusion_radius;
    a["normalization"] = norm_name(c.analysis.normalization);

    n["output"]["dir"] = c.output_dir.string();
    return n;
}

template <typename T>
T get(const YAML::Node& root, const char* section, const char* key) {
    try {
        return root[section][key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string("invalid value for ") + section + "." + key);
    }
}

template <typename T>
T get_glyph(const YAML::Node& root, const char* key) {
    try {
        return root["target"]["glyph"][key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string("invalid value for target.glyph.") + key);
    }
}

PipelineConfig from_node(const YAML::Node& n) {
    PipelineConfig c = default_pipeline_config();
    c.optics.wavelength = get<double>(n, "optics", "wavelength");
    c.optics.focal_length = get<double>(n, "optics", "focal_length");
    c.optics.cell_length = get<double>(n, "optics", "cell_length");
    c.optics.pump_waist_radius = get<double>(n, "optics", "pump_waist_radius");
    c.optics.probe_waist_radius = get<double>(n, "optics", "probe_waist_radius");
    c.optics.probe_pump_angle = get<double>(n, "optics", "probe_pump_angle_deg") * kDeg;
    c.optics.emccd_pixel = get<double>(n, "optics", "emccd_pixel");
    c.optics.slm_pixel = get<double>(n, "optics", "slm_pixel");
    c.optics.gain = get<double>(n, "optics", "gain");
    c.detector.pixel = c.optics.emccd_pixel;

    c.n = get<std::size_t>(n, "grid", "n");
    c.pad_factor = get<std::size_t>(n, "grid", "pad_factor");
    c.pitch = get<double>(n, "grid", "pitch");
    c.optimizer.pad_factor = c.pad_factor;

    c.target_kind = get<std::string>(n, "target", "kind");
    c.target_image = get<std::string>(n, "target", "image");
    c.target_phase_image = get<std::string>(n, "target", "phase_image");
    c.target_threshold = get<double>(n, "target", "threshold");
    c.glyph.dilation = get<int>(n, "target", "dilation");
    c.glyph.scale = get_glyph<double>(n, "scale");
    c.glyph.thickness = get_glyph<double>(n, "thickness");
    c.glyph.blur = get_glyph<double>(n, "blur");
    c.glyph.gap = get_glyph<double>(n, "gap");

    c.optimizer.d = get<double>(n, "optimizer", "d");
    c.optimizer.max_iterations = get<int>(n, "optimizer", "max_iterations");
    c.optimizer.initial_step = get<double>(n, "optimizer", "initial_step");
    c.optimizer.shrink = get<double>(n, "optimizer", "shrink");
    c.optimizer.sufficient_decrease = get<double>(n, "optimizer", "sufficient_decrease");
    c.optimizer.max_backtracks = get<int>(n, "optimizer", "max_backtracks");
    c.optimizer.restart_period = get<int>(n, "optimizer", "restart_period");
    c.optimizer.stagnation_window = get<int>(n, "optimizer", "stagnation_window");
    c.optimizer.stagnation_tol = get<double>(n, "optimizer", "stagnation_tol");
    c.init = get<std::string>(n, "optimizer", "init");
    c.init_seed = get<std::uint64_t>(n, "optimizer", "seed");

    c.compress = get<bool>(n, "compression", "enabled");
    c.compress_lo = get<double>(n, "compression", "lo");
    c.compress_hi = get<double>(n, "compression", "hi");
    c.compress_samples = get<int>(n, "compression", "samples");

    c.disk_radius = get<double>(n, "disk", "radius");
    c.disk_reference = get<double>(n, "disk", "reference");
    c.delta_phase = get<double>(n, "disk", "delta_phase");

    c.n_pairs = get<std::size_t>(n, "synthesis", "n_pairs");
    c.seed = get<std::uint64_t>(n, "synthesis", "seed");
    const auto sampler = get<std::string>(n, "synthesis", "sampler");
    if (sampler == "convolution")
        c.sampler = SamplerKind::Convolution;
    else if (sampler == "schmidt")
        c.sampler = SamplerKind::Schmidt;
    else
        throw ConfigError("synthesis.sampler must be convolution or schmidt");
    c.sampler_grid = get<std::size_t>(n, "synthesis", "sampler_grid");
    c.schmidt_roi = get<std::size_t>(n, "synthesis", "schmidt_roi");
    c.schmidt_truncation = get<double>(n, "synthesis", "schmidt_truncation");
    c.lo_peak_counts = get<double>(n, "synthesis", "lo_peak_counts");
    c.max_output_bytes = get<double>(n, "synthesis", "max_output_bytes");

    c.detector.quantum_efficiency = get<double>(n, "detector", "quantum_efficiency");
    c.detector.excess_noise_factor_sq = get<double>(n, "detector", "excess_noise_factor_sq");
    c.detector.read_noise = get<double>(n, "detector", "read_noise");
    c.detector.saturation = get<double>(n, "detector", "saturation");
    c.detector.rows = get<std::size_t>(n, "detector", "rows");
    c.detector.cols = get<std::size_t>(n, "detector", "cols");
    c.detector.frame_separation = get<double>(n, "detector", "frame_separation");
    c.detector.poisson_threshold = get<double>(n, "detector", "poisson_threshold");

    c.analysis.patch_rows = get<std::size_t>(n, "analysis", "patch_rows");
    c.analysis.patch_cols = get<std::size_t>(n, "analysis", "patch_cols");
    c.analysis.patch_top = get<long>(n, "analysis", "patch_top");
    c.analysis.patch_left = get<long>(n, "analysis", "patch_left");
    c.analysis.range_rows = get<int>(n, "analysis", "range_rows");
    c.analysis.range_cols = get<int>(n, "analysis", "range_cols");
    c.analysis.exclusion_radius = get<double>(n, "analysis", "exclusion_radius");
    const auto norm = get<std::string>(n, "analysis", "normalization");
    if (norm == "energy")
        c.analysis.normalization = NormalizationMode::Energy;
    else if (norm == "absolute")
        c.analysis.normalization = NormalizationMode::Absolute;
    else
        throw ConfigError("analysis.normalization must be energy or absolute");

    c.output_dir = get<std::string>(n, "output", "dir");
    c.validate();
    return c;
}

// Copies user values into the defaults tree; any key absent from the
// defaults is rejected.
void merge_strict(YAML::Node base, const YAML::Node& user, const std::string& path) {
    if (!user.IsMap()) throw ConfigError("config section " + (path.empty() ? "<root>" : path) + " must be a map");
    for (const auto& kv : user) {
        const auto key = kv.first.as<std::string>();
        const std::string full = path.empty() ? key : path + "." + key;
        if (!base[key]) throw ConfigError("unknown config key: " + full);
        YAML::Node target = base[key];
        if (target.IsMap())
            merge_strict(target, kv.second, full);
        else if (kv.second.IsMap() || kv.second.IsSequence())
            throw ConfigError("config key " + full + " expects a scalar");
        else
            base[key] = kv.second;
    }
}

void apply_override(YAML::Node root, const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + item);
    const std::string path = item.substr(0, eq), value = item.substr(eq + 1);
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    YAML::Node cur = root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!cur.IsMap() || !cur[parts[i]]) throw ConfigError("unknown config key: " + path);
        YAML::Node next = cur[parts[i]];
        if (i + 1 == parts.size()) {
            if (next.IsMap()) throw ConfigError("override must name a scalar key: " + path);
            cur[parts[i]] = value;
        }
        cur.reset(next);
    }
}

PipelineConfig build_config(const YAML::Node& user, const std::vector<std::string>& overrides,
                            const std::filesystem::path& base) {
    YAML::Node root = to_node(default_pipeline_config());
    if (user && !user.IsNull()) merge_strict(root, user, "");
    for (const auto& o : overrides) apply_override(root, o);
    if (!base.empty())
        for (const char* key : {"image", "phase_image"}) {
            const std::filesystem::path p = root["target"][key].as<std::string>("");
            if (!p.empty() && p.is_relative()) root["target"][key] = (base / p).lexically_normal().string();
        }
    return from_node(root);
}

}  // namespace

PipelineConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides) {
    YAML::Node user;
    try {
        user = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return build_config(user, overrides, {});
}

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    YAML::Node user;
    try {
        user = YAML::Load(ss.str());
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return build_config(user, overrides, std::filesystem::absolute(path).parent_path());
}

std::string dump_config(const PipelineConfig& cfg) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << to_node(cfg);
    return std::string(out.c_str()) + "\n";
}

}  // namespace twinbeam
