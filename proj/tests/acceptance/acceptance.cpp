// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "twinbeam/fft.hpp"
#include "twinbeam/pipeline.hpp"

using namespace twinbeam;
namespace fs = std::filesystem;
using std::numbers::pi;
using clk = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

std::size_t g_pairs = 2000;

// ------------------------------------------------------------------ helpers

ComplexField gaussian_pump(std::size_t n, double pitch, double w) {
    ComplexField f(n, pitch, Plane::CellCenter);
    const auto mid = static_cast<double>(n / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double y = (static_cast<double>(i) - mid) * pitch, x = (static_cast<double>(j) - mid) * pitch;
            f(i, j) = std::exp(-(x * x + y * y) / (w * w));
        }
    return f;
}

ComplexField random_amplitude_pump(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> a(0.5, 1.5), ph(-pi, pi);
    ComplexField f(n, 1.0, Plane::SLM);
    for (auto& v : f.values()) v = std::polar(a(rng), ph(rng));
    return normalize_pump(f);
}

double signal_energy(const RealField& a, const Mask& m) {
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (m[i]) e += a[i] * a[i];
    return e;
}

// Least-squares slope of a against b over the mask (with intercept).
double regression_slope(const RealField& a, const RealField& b, const Mask& m) {
    double sa = 0, sb = 0, n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (m[i]) {
            sa += a[i];
            sb += b[i];
            n += 1;
        }
    sa /= n;
    sb /= n;
    double ab = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (m[i]) {
            ab += (a[i] - sa) * (b[i] - sb);
            bb += (b[i] - sb) * (b[i] - sb);
        }
    return ab / bb;
}

// Full width at half of the centre value along the row and the column
// through xi = 0, averaged.
double fwhm(const RealField& m) {
    const long hr = static_cast<long>(m.rows() / 2), hc = static_cast<long>(m.cols() / 2);
    const double half = 0.5 * m(hr, hc);
    auto walk = [&](long dr, long dc) {
        double prev = m(hr, hc);
        for (long k = 1;; ++k) {
            const long r = hr + k * dr, c = hc + k * dc;
            if (r < 0 || c < 0 || r >= static_cast<long>(m.rows()) || c >= static_cast<long>(m.cols()))
                return static_cast<double>(k);
            const double v = m(r, c);
            if (v < half) return static_cast<double>(k - 1) + (prev - half) / (prev - v);
            prev = v;
        }
    };
    return 0.5 * (walk(0, 1) + walk(0, -1) + walk(1, 0) + walk(-1, 0));
}

TargetSpec rotated_target(const TargetSpec& t) {
    const std::size_t m = t.target.rows();
    ComplexField tt(m, m, t.target.pitch(), t.target.plane());
    Mask s(m, m), n(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t ii = (m - i) % m, jj = (m - j) % m;
            tt(ii, jj) = t.target(i, j);
            s(ii, jj) = t.signal(i, j);
            n(ii, jj) = t.noise(i, j);
        }
    return make_target(std::move(tt), std::move(s), std::move(n));
}

// ------------------------------------------------------------------ shared desk run

struct Encoding {
    TargetSpec target;
    OptimizeOutput opt;
    RenderedTarget rendered;
    double optimize_seconds = 0;
};

struct DeskRun {
    PipelineConfig cfg;
    Encoding enc[2];
    std::optional<DecodeResult> decoded[2];  // delta_phase = 0
    double decode_seconds[2] = {0, 0};

    DeskRun() {
        cfg = default_pipeline_config();
        cfg.n_pairs = g_pairs;
        cfg.analysis.normalization = NormalizationMode::Absolute;
        cfg.validate();
    }

    ComplexField pump(int e, double delta_phase) const {
        const PhasePattern p = hologram_phase(enc[e].opt.quantized, enc[e].opt.info, delta_phase);
        return modulated_pump(pump_amplitude(cfg), p.phase);
    }

    void encode(int e) {
        const auto t0 = clk::now();
        enc[e].target = e == 0 ? build_target(cfg) : rotated_target(build_target(cfg));
        enc[e].opt = run_optimize(cfg, enc[e].target);
        enc[e].optimize_seconds = seconds_since(t0);
    }

    DecodeResult decode(int e, double delta_phase) const {
        return simulate_and_decode(make_simulator(cfg, pump(e, delta_phase), delta_phase), cfg.n_pairs, cfg.analysis);
    }

    const DecodeResult& baseline(int e) {
        if (!decoded[e]) {
            encode(e);
            const auto t0 = clk::now();
            decoded[e] = decode(e, 0.0);
            decode_seconds[e] = seconds_since(t0);
            const CorrelationMap& m = decoded[e]->cross;
            enc[e].rendered = render_target(enc[e].target, m.values.rows(), m.values.cols());
        }
        return *decoded[e];
    }
};

DeskRun& desk() {
    static DeskRun run;
    return run;
}

// ------------------------------------------------------------------ criteria

Outcome c1_convolution_law() {
    SelfConvolutionOptions raw;
    raw.pad_factor = 1;
    raw.check_border = false;
    const std::size_t sizes[] = {8, 16, 32};
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
        const std::size_t n = sizes[k % 3];
        const ComplexField pump = oracle::random_field(n, 1000 + k, 1e-4);
        const ConvolutionMap phi = pump_self_convolution(pump, raw);
        const ComplexField direct = oracle::direct_self_convolution(oracle::direct_dft2(pump, -1));
        const ComplexField scaled = static_cast<double>(n) * phi.field;
        worst = std::max(worst, oracle::max_abs_diff(scaled, direct) / oracle::max_abs(direct));
    }
    return {worst <= 1e-10, fmt("10 pumps (8-32 px), max relative error %.2e (<= 1e-10)", worst)};
}

Outcome c2_gaussian_width() {
    OpticalConfig optics;
    const std::size_t n = 256;
    const double pitch = optics.focal_length * optics.wavelength / (2.0 * n * optics.emccd_pixel);
    const ComplexField pump = gaussian_pump(n, pitch, optics.pump_waist_radius);
    const CorrelationMap m = predict_cross_correlation(pump, 0.0, optics);
    const std::size_t c = m.values.rows() / 2;
    const double peak = m.values(c, c);
    // 1/e amplitude radius from a log-quadratic fit along both axes.
    double sxx = 0, sxy = 0;
    for (int d = -6; d <= 6; ++d) {
        if (d == 0) continue;
        for (const double v : {m.values(c, c + d), m.values(c + d, c)}) {
            sxx += double(d) * d * d * d;
            sxy += double(d) * d * std::log(v / peak);
        }
    }
    const double radius_px = std::sqrt(-sxx / sxy);
    const double expected_px =
        optics.focal_length * std::sqrt(8.0) / (optics.wavenumber() * optics.pump_waist_radius) / optics.emccd_pixel;
    const double err = std::abs(radius_px / expected_px - 1.0);
    return {err <= 0.02,
            fmt("256x256 width %.4f px vs f*sqrt(8)/(k*w) = %.4f px, error %.2f%% (<= 2%%)", radius_px, expected_px,
                100 * err)};
}

Outcome c3_gradient() {
    const double h = 1e-6;
    const std::size_t n = 16;
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const ComplexField e0 = random_amplitude_pump(n, 500 + inst);
        const ComplexField t = oracle::random_field(2 * n, 600 + inst);
        Mask sig(2 * n, 2 * n), noise(2 * n, 2 * n);
        std::mt19937_64 rng(700 + inst);
        for (std::size_t i = 0; i < sig.size(); ++i) {
            sig[i] = rng() % 5 < 2;
            noise[i] = !sig[i];
        }
        const TargetSpec target = make_target(t, sig, noise);
        PhasePattern p{random_initial_phase(n, 800 + inst), default_disk(n)};
        p.disk.radius = 1.0;
        p = apply_constant_phase_disk(p, p.disk);
        const RealField g = cost_gradient(p, e0, target, 10);
        const oracle::ExtendedCost cost(e0, p.phase, target);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (p.disk.contains(k / n, k % n)) {
                if (g[k] != 0.0) return {false, "nonzero gradient on a disk sample"};
                continue;
            }
            const long double fd = (cost(k, h) - cost(k, -h)) / (2.0L * h);
            worst = std::max(worst, static_cast<double>(std::abs((g[k] - fd) / fd)));
        }
    }
    return {worst < 1e-5, fmt("20 instances 16x16, max relative error %.2e (< 1e-5)", worst)};
}

Outcome c4_optimizer() {
    // Planted solution.
    const std::size_t n = 16;
    const ComplexField e0 = random_amplitude_pump(n, 21);
    PhasePattern star{random_initial_phase(n, 22), default_disk(n)};
    star.disk.radius = 1.5;
    star = apply_constant_phase_disk(star, star.disk);
    Mask all(2 * n, 2 * n), none(2 * n, 2 * n);
    for (auto& v : all.values()) v = 1;
    const TargetSpec planted = make_target(forward_model(e0, star.phase), all, none);
    std::mt19937_64 rng(23);
    std::normal_distribution<double> jitter(0.0, 0.2);
    PhasePattern init = star;
    for (auto& v : init.phase.values()) v += jitter(rng);
    init = apply_constant_phase_disk(init, init.disk);
    const OptimizerConfig opt;
    const CGHResult r1 = conjugate_gradient_minimize(e0, planted, init, opt);
    const double c_final = r1.cost_history.back().second, c_bound = 1e-6 * std::pow(10.0, opt.d);

    // 64 x 64 two-spot target: two copies of the natural spot, intensities 3:1.
    const std::size_t n2 = 64, m = 128;
    ComplexField g(n2, 1.0, Plane::SLM);
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            const double y = double(i) - 32, x = double(j) - 32;
            g(i, j) = std::exp(-(x * x + y * y) / 100.0);
        }
    g = normalize_pump(g);
    const ComplexField natural = forward_model(g, RealField(n2));
    ComplexField t(m);
    Mask sig(m, m), noise(m, m);
    const double peak = std::abs(natural(64, 64));
    const double amp[2] = {std::sqrt(3.0), 1.0};
    const int shift[2] = {20, -20};
    for (int s = 0; s < 2; ++s)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const long jj = long(j) - shift[s];
                if (jj < 0 || jj >= long(m)) continue;
                const cplx v = natural(i, std::size_t(jj));
                if (std::abs(v) > 1e-3 * peak) {
                    t(i, j) = amp[s] * v;
                    sig(i, j) = 1;
                }
            }
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = !sig[i];
    const TargetSpec spots = make_target(t, sig, noise);
    PhasePattern start{random_initial_phase(n2, 7), default_disk(n2)};
    start = apply_constant_phase_disk(start, start.disk);
    const CGHResult r2 = conjugate_gradient_minimize(g, spots, start);
    return {c_final < c_bound && r2.final_overlap >= 0.9 && !r2.line_search_failed,
            fmt("planted C = %.2e (< %.0e); two-spot overlap %.4f (>= 0.9)", c_final, c_bound, r2.final_overlap)};
}

Outcome c5_round_trip() {
    DeskRun& d = desk();
    const DecodeResult& r = d.baseline(0);
    const FidelityReport f = fidelity(r.cross, d.enc[0].rendered);
    return {f.coefficient >= 0.8 && !r.negative_flag(),
            fmt("128x128 glyph, %zu pairs: fidelity %.4f (>= 0.8), peak/background %.2f, hologram overlap %.4f, "
                "optimize %.1f s, synthesize+decode %.1f s",
                r.n_pairs, f.coefficient, f.peak_to_background, d.enc[0].opt.result.final_overlap,
                d.enc[0].optimize_seconds, d.decode_seconds[0])};
}

Outcome c6_privacy() {
    DeskRun& d = desk();
    const DecodeResult& a = d.baseline(0);
    const DecodeResult& b = d.baseline(1);
    const double fp = fidelity(a.auto_probe, d.enc[0].rendered).coefficient;
    const double fc = fidelity(a.auto_conj, d.enc[0].rendered).coefficient;
    const double agree_p = oracle::pearson(a.auto_probe.values, b.auto_probe.values);
    const double agree_c = oracle::pearson(a.auto_conj.values, b.auto_conj.values);
    const double cross_b = fidelity(b.cross, d.enc[1].rendered).coefficient;
    return {fp <= 0.1 && fc <= 0.1 && agree_p >= 0.9 && agree_c >= 0.9,
            fmt("auto fidelity probe %.4f, conj %.4f (<= 0.1); auto maps across encodings %.4f / %.4f (>= 0.9); "
                "second encoding cross fidelity %.4f",
                fp, fc, agree_p, agree_c, cross_b)};
}

Outcome c7_quadrature() {
    DeskRun& d = desk();
    const DecodeResult& base = d.baseline(0);
    const Mask& sig = d.enc[0].rendered.signal;
    const RealField& m0 = base.cross.values;
    // Noise-free regressor; slopes against the noisy baseline shrink toward zero.
    const RealField ref = run_predict(d.cfg, d.pump(0, 0.0), 0.0).values;
    const double phases[] = {0.0, pi / 8, pi / 4, 3 * pi / 8, pi / 2};
    std::vector<double> amp;
    double e45 = 0, c90 = 0;
    for (double dp : phases) {
        const RealField m = dp == 0.0 ? m0 : d.decode(0, dp).cross.values;
        amp.push_back(regression_slope(m, ref, sig));
        if (dp == pi / 4) e45 = signal_energy(m, sig) / signal_energy(m0, sig);
        if (dp == pi / 2) c90 = oracle::pearson(m, m0);
    }
    double num = 0, den = 0;
    for (std::size_t k = 0; k < amp.size(); ++k) {
        num += amp[k] * std::cos(2 * phases[k]);
        den += std::cos(2 * phases[k]) * std::cos(2 * phases[k]);
    }
    const double a_fit = num / den;
    double rss = 0;
    for (std::size_t k = 0; k < amp.size(); ++k) rss += std::pow(amp[k] - a_fit * std::cos(2 * phases[k]), 2);
    const double resid = std::sqrt(rss / amp.size()) / std::abs(a_fit);
    return {e45 <= 0.1 && c90 <= -0.9 && resid <= 0.05,
            fmt("pi/4 energy %.4f (<= 0.1); pi/2 correlation %.4f (<= -0.9); amplitudes / fit [%.3f %.3f %.3f %.3f %.3f], "
                "cos fit residual %.2f%% (<= 5%%)",
                e45, c90, amp[0] / a_fit, amp[1] / a_fit, amp[2] / a_fit, amp[3] / a_fit, amp[4] / a_fit,
                100 * resid)};
}

Outcome c8_consistency() {
    DeskRun& d = desk();
    const PipelineConfig& cfg = d.cfg;
    const ComplexField amp = pump_amplitude(cfg);
    ComplexField chirped = amp;
    const auto n = static_cast<double>(cfg.n), w = cfg.optics.pump_waist_radius / cfg.pump_pitch();
    for (std::size_t i = 0; i < cfg.n; ++i)
        for (std::size_t j = 0; j < cfg.n; ++j) {
            const double y = static_cast<double>(i) - n / 2, x = static_cast<double>(j) - n / 2;
            const double phase = pi * (3 * y + 5 * x) / n + 1.5 * (x * x - 0.5 * y * y) / (w * w);
            chirped(i, j) *= std::polar(1.0, phase);
        }
    struct Case {
        const char* name;
        ComplexField pump;
        const DecodeResult* decoded;
    };
    d.baseline(0);
    std::vector<Case> cases = {{"gaussian", amp, nullptr}, {"tilted+astigmatic", chirped, nullptr},
                               {"glyph hologram", d.pump(0, 0.0), &*d.decoded[0]}};
    std::string detail;
    bool pass = true;
    for (auto& c : cases) {
        std::optional<DecodeResult> own;
        if (!c.decoded) own = simulate_and_decode(make_simulator(cfg, c.pump, 0.0), cfg.n_pairs, cfg.analysis);
        const DecodeResult& r = c.decoded ? *c.decoded : *own;
        const CorrelationMap pred = run_predict(cfg, c.pump, 0.0);
        const double corr =
            oracle::pearson(gaussian_blur(r.cross.values, 3.0), gaussian_blur(pred.values, 3.0));
        pass = pass && corr >= 0.95;
        detail += fmt("%s %.4f; ", c.name, corr);
    }
    return {pass, detail + "(each >= 0.95 after sigma = 3 px smoothing)"};
}

Outcome c9_localization() {
    DeskRun& d = desk();
    const DecodeResult& a = d.baseline(0);
    const DecodeResult& b = d.baseline(1);
    auto sampler = std::dynamic_pointer_cast<const ConvolutionSampler>(make_sampler(d.cfg, d.pump(0, 0.0), 0.0));
    const std::vector<double>& lam = sampler->squeezing();
    const double top = std::pow(std::sinh(*std::max_element(lam.begin(), lam.end())), 2);
    std::size_t modes = 0;
    for (double l : lam)
        if (std::pow(std::sinh(l), 2) >= 0.5 * top) ++modes;
    const double wa = fwhm(a.auto_probe.values), wb = fwhm(b.auto_probe.values);
    const double wac = fwhm(a.auto_conj.values), wbc = fwhm(b.auto_conj.values);
    const double dev = std::max(std::abs(wb / wa - 1), std::abs(wbc / wac - 1));
    return {modes >= 100 && dev <= 0.1,
            fmt("%zu modes within half of the brightest (>= 100); auto FWHM probe %.2f vs %.2f px, conj %.2f vs %.2f "
                "px, max change %.2f%% (<= 10%%)",
                modes, wa, wb, wac, wbc, 100 * dev)};
}

Outcome c10_squeezing() {
    DeskRun& d = desk();
    d.baseline(0);
    d.baseline(1);
    const double gain = d.cfg.optics.gain, mean_photons = 1e5;
    const std::size_t samples = 20000;
    std::string detail;
    bool pass = true;
    for (int e = 0; e < 2; ++e) {
        // Stray pump light scales with the hologram's undiffracted fraction.
        const double background = 1e3 * (1.0 + 1e4 * d.enc[e].opt.dc_fraction);
        const SqueezingEstimate s =
            estimate_squeezing(sample_photodiode_trace(gain, 1.0, mean_photons, background, samples, 40 + e));
        const SqueezingEstimate c = estimate_squeezing(
            sample_coherent_trace(gain * mean_photons, (gain - 1) * mean_photons, background, samples, 50 + e));
        pass = pass && std::abs(s.db + 6.2) <= 0.5 && std::abs(c.db) <= 0.3;
        detail += fmt("encoding %d: %.2f dB [%.2f, %.2f], control %.2f dB; ", e + 1, s.db, s.ci_low_db, s.ci_high_db,
                      c.db);
    }
    const double model = temporal_difference_noise(gain).variance_ratio_db;
    return {pass, detail + fmt("model %.3f dB (target -6.2 +- 0.5, control 0 +- 0.3)", model)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome c11_determinism() {
    const fs::path work = fs::temp_directory_path() / "twinbeam_acceptance_determinism";
    fs::remove_all(work);
    fs::create_directories(work);
    std::ofstream(work / "run.yaml") << "synthesis: {n_pairs: 20, seed: 5}\n";
    for (const char* dir : {"first", "second"}) {
        const std::string cmd = "'" TWINBEAM_CLI "' pipeline -c '" + (work / "run.yaml").string() + "' -o '" +
                                (work / dir).string() + "' > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "pipeline run failed"};
    }
    std::size_t files = 0, bytes = 0;
    for (const auto& e : fs::recursive_directory_iterator(work / "first")) {
        if (!e.is_regular_file()) continue;
        const fs::path twin = work / "second" / fs::relative(e.path(), work / "first");
        const std::string a = slurp(e.path());
        if (!fs::exists(twin) || a != slurp(twin))
            return {false, "differs: " + fs::relative(e.path(), work / "first").string()};
        ++files;
        bytes += a.size();
    }
    fs::remove_all(work);
    return {files > 20, fmt("two CLI pipeline runs, %zu files / %zu bytes byte-identical", files, bytes)};
}

Outcome s1_exact_vs_fast() {
    // Small grid where the exact decomposition is tractable.
    PipelineConfig cfg = parse_config(R"(
grid: {n: 64}
optics: {pump_waist_radius: 1.94e-3}
synthesis: {sampler_grid: 64, schmidt_roi: 32, schmidt_truncation: 1e-4}
detector: {rows: 32, cols: 64}
analysis: {patch_rows: 12, patch_cols: 12, range_rows: 8, range_cols: 8}
)");
    const ComplexField pump = pump_amplitude(cfg);
    cfg.sampler = SamplerKind::Convolution;
    const auto fast = make_sampler(cfg, pump, 0.0);
    cfg.sampler = SamplerKind::Schmidt;
    const auto exact = make_sampler(cfg, pump, 0.0);
    const std::size_t draws = 20000;
    MapAverager mf, me;
    for (std::size_t k = 0; k < draws; ++k) {
        auto rf = pair_engine(91, k), re = pair_engine(92, k);
        const QuadratureFields qf = fast->sample(rf), qe = exact->sample(re);
        mf.add(cross_correlation_map(qf.probe, qf.conj, cfg.analysis));
        me.add(cross_correlation_map(qe.probe, qe.conj, cfg.analysis));
    }
    const double corr = oracle::pearson(mf.mean().values, me.mean().values);
    return {corr >= 0.98, fmt("fast vs Schmidt sampler cross maps, %zu draws: correlation %.4f (>= 0.98)", draws, corr)};
}

struct Criterion {
    const char* id;
    const char* name;
    double limit_seconds;  // 0: no limit
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<std::string> only;
    app.add_option("--pairs", g_pairs, "Frame pairs per desk run (pinned value: 2000)");
    app.add_option("--only", only, "Run only these criterion ids");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {"1", "convolution law", 10, c1_convolution_law},
        {"2", "Gaussian closed form", 5, c2_gaussian_width},
        {"3", "gradient correctness", 60, c3_gradient},
        {"4", "optimizer", 300, c4_optimizer},
        {"5", "encode-decode round trip", 1200, c5_round_trip},
        {"6", "privacy", 0, c6_privacy},
        {"7", "quadrature control", 0, c7_quadrature},
        {"8", "synth/predict consistency", 0, c8_consistency},
        {"9", "auto-correlation localization", 0, c9_localization},
        {"10", "squeezing invariance", 0, c10_squeezing},
        {"11", "determinism", 0, c11_determinism},
        {"S1", "exact vs fast sampler (supplementary)", 0, s1_exact_vs_fast},
    };

    int failed = 0;
    const auto start = clk::now();
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = clk::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = seconds_since(t0);
        const bool in_time = c.limit_seconds <= 0 || dt < c.limit_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::string timing = fmt("%.1f s", dt);
        if (c.limit_seconds > 0) timing += fmt(" (< %.0f s)", c.limit_seconds);
        std::printf("[%s] %-3s %s: %s; %s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    timing.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d criteria failed, %.1f s total\n", failed, seconds_since(start));
    return failed == 0 ? 0 : 1;
}
