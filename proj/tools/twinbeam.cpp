#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "twinbeam/pipeline.hpp"

using namespace twinbeam;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Options {
    fs::path config;
    std::vector<std::string> overrides;
    fs::path out;
    fs::path hologram;
    fs::path manifest;
    bool no_target = false;
};

struct Context {
    PipelineConfig cfg;
    fs::path out;
};

Context load(const Options& o) {
    Context c;
    c.cfg = o.config.empty() ? parse_config("", o.overrides) : load_config(o.config, o.overrides);
    c.out = o.out.empty() ? c.cfg.output_dir : o.out;
    fs::create_directories(c.out);
    std::ofstream snap(c.out / "config.yaml");
    if (!snap) throw IoError("cannot write " + (c.out / "config.yaml").string());
    snap << dump_config(c.cfg);
    return c;
}

void write_run_metadata(const fs::path& dir, const std::string& stage, const PipelineConfig& cfg,
                        nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json j = std::move(extra);
    j["tool"] = "twinbeam";
    j["version"] = kVersion;
    j["stage"] = stage;
    j["synthesis_seed"] = cfg.seed;
    j["optimizer_seed"] = cfg.init_seed;
    j["delta_phase"] = cfg.delta_phase;
    j["config"] = "../config.yaml";
    std::ofstream out(dir / "run.json");
    if (!out) throw IoError("cannot write " + (dir / "run.json").string());
    out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Returns true if the line search failed.
bool stage_optimize(const Context& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const TargetSpec target = build_target(c.cfg);
    const OptimizeOutput out = run_optimize(c.cfg, target);
    const fs::path dir = c.out / "optimize";
    write_optimize_outputs(dir, out);
    write_run_metadata(dir, "optimize", c.cfg,
                       {{"iterations", out.result.iterations},
                        {"converged", out.result.converged},
                        {"line_search_failed", out.result.line_search_failed},
                        {"final_overlap", out.result.final_overlap},
                        {"compression", out.info.compression},
                        {"zero_order_fraction", out.dc_fraction}});
    std::printf("optimize: %d iterations, overlap %.4f, zero-order %.3g, %.1f s -> %s\n", out.result.iterations,
                out.result.final_overlap, out.dc_fraction, seconds_since(t0), dir.string().c_str());
    if (out.result.line_search_failed)
        std::fprintf(stderr, "optimize: line search failed; best-so-far hologram written\n");
    return out.result.line_search_failed;
}

ComplexField load_pump(const Context& c, const fs::path& hologram) {
    const auto [q, info] = read_hologram(hologram);
    if (q.levels.rows() != c.cfg.n || q.levels.cols() != c.cfg.n)
        throw ConfigError("hologram is " + std::to_string(q.levels.rows()) + " x " +
                          std::to_string(q.levels.cols()) + " but grid.n is " + std::to_string(c.cfg.n));
    if (info.pitch > 0.0 && std::abs(info.pitch - c.cfg.pump_pitch()) > 1e-9 * c.cfg.pump_pitch())
        throw ConfigError("hologram pitch does not match the optical configuration");
    if (info.pad_factor != c.cfg.pad_factor) throw ConfigError("hologram pad factor does not match grid.pad_factor");
    const PhasePattern p = hologram_phase(q, info, c.cfg.delta_phase);
    return modulated_pump(pump_amplitude(c.cfg), p.phase);
}

fs::path hologram_path(const Options& o, const Context& c) {
    return o.hologram.empty() ? c.out / "optimize" / "hologram.pgm" : o.hologram;
}

void stage_predict(const Options& o, const Context& c) {
    const ComplexField pump = load_pump(c, hologram_path(o, c));
    const CorrelationMap map = run_predict(c.cfg, pump, c.cfg.delta_phase);
    const fs::path dir = c.out / "predict";
    fs::create_directories(dir);
    write_map_csv(dir / "predicted_map.csv", map);
    write_map_image(dir / "predicted_map.pgm", map);
    write_run_metadata(dir, "predict", c.cfg);
    std::printf("predict: %zu x %zu map -> %s\n", map.values.rows(), map.values.cols(), dir.string().c_str());
}

void stage_synthesize(const Options& o, const Context& c) {
    const ComplexField pump = load_pump(c, hologram_path(o, c));
    const fs::path dir = c.out / "frames";
    const SynthesizeOutput s = run_synthesize(c.cfg, pump, c.cfg.delta_phase, dir);
    const double frac = s.manifest.bright_pixels
                            ? static_cast<double>(s.manifest.negative_clamped) / s.manifest.bright_pixels
                            : 0.0;
    std::printf("synthesize: %zu pairs in %.1f s (%.1f pairs/s), negative tally %.2g -> %s\n",
                s.manifest.files.size(), s.seconds, s.manifest.files.size() / std::max(s.seconds, 1e-9), frac,
                dir.string().c_str());
    if (frac >= 1e-3) std::fprintf(stderr, "synthesize: negative-count tally above 1e-3\n");
}

void stage_decode(const Options& o, const Context& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path manifest = o.manifest.empty() ? c.out / "frames" / "manifest.json" : o.manifest;
    const DecodeResult r = run_decode(manifest, c.cfg.analysis);
    const fs::path dir = c.out / "report";
    std::optional<TargetSpec> target;
    if (!o.no_target) target = build_target(c.cfg);
    write_decode_outputs(dir, r, target ? &*target : nullptr);
    write_run_metadata(dir, "decode", c.cfg, {{"n_pairs", r.n_pairs}, {"negative_flag", r.negative_flag()}});
    std::printf("decode: %zu pairs in %.1f s -> %s\n", r.n_pairs, seconds_since(t0), dir.string().c_str());
    if (target) {
        const RenderedTarget rt = render_target(*target, r.cross.values.rows(), r.cross.values.cols());
        std::printf("decode: fidelity %.4f\n", fidelity(r.cross, rt).coefficient);
    }
    if (r.negative_flag()) std::fprintf(stderr, "decode: negative-count tally above 1e-3\n");
}

template <typename F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const WraparoundError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kNumerical;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kNumerical;
    } catch (const Error& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kConfig;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kInternal;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twin-beam correlation imaging: encode, predict, synthesize, decode"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "YAML configuration file");
        sub->add_option("-s,--set", o.overrides, "Override a config key, e.g. disk.delta_phase=0.785");
        sub->add_option("-o,--out", o.out, "Output directory (default: output.dir)");
    };
    auto* opt = app.add_subcommand("optimize", "Compute the pump hologram for the target");
    auto* pred = app.add_subcommand("predict", "Predict the cross-correlation map of a hologram");
    auto* syn = app.add_subcommand("synthesize", "Simulate camera frame pairs for a hologram");
    auto* dec = app.add_subcommand("decode", "Correlation maps, fidelity and squeezing from frames");
    auto* pipe = app.add_subcommand("pipeline", "Run all stages");
    for (auto* s : {opt, pred, syn, dec, pipe}) common(s);
    for (auto* s : {pred, syn}) s->add_option("--hologram", o.hologram, "Hologram (default: <out>/optimize)");
    dec->add_option("--manifest", o.manifest, "Frame manifest (default: <out>/frames/manifest.json)");
    for (auto* s : {dec, pipe}) s->add_flag("--no-target", o.no_target, "Skip the fidelity report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    return guarded([&] {
        const Context c = load(o);
        if (opt->parsed()) return stage_optimize(c) ? kNumerical : kOk;
        if (pred->parsed()) {
            stage_predict(o, c);
            return kOk;
        }
        if (syn->parsed()) {
            stage_synthesize(o, c);
            return kOk;
        }
        if (dec->parsed()) {
            stage_decode(o, c);
            return kOk;
        }
        const bool failed = stage_optimize(c);
        stage_predict(o, c);
        stage_synthesize(o, c);
        stage_decode(o, c);
        return failed ? kNumerical : kOk;
    });
}
