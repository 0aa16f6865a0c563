#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "twinbeam/fft.hpp"
#include "twinbeam/synth.hpp"

using namespace twinbeam;
using std::numbers::pi;
using oracle::max_abs;
using oracle::pearson;

namespace {

ComplexField gaussian_pump(std::size_t n, double pitch, double w) {
    ComplexField f(n, pitch, Plane::CellCenter);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double y = (static_cast<double>(i) - n / 2) * pitch;
            const double x = (static_cast<double>(j) - n / 2) * pitch;
            f(i, j) = std::exp(-(x * x + y * y) / (w * w));
        }
    return f;
}

double desk_pitch(const OpticalConfig& cfg, std::size_t n) {
    return cfg.focal_length * cfg.wavelength / (2.0 * n * cfg.emccd_pixel);
}

double sample_corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double sample_var(const std::vector<double>& a) {
    const double n = static_cast<double>(a.size());
    const double m = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double s = 0;
    for (double v : a) s += (v - m) * (v - m);
    return s / (n - 1);
}

TwoPhotonKernel rank_one_kernel(const std::vector<cplx>& u, const std::vector<cplx>& v, std::size_t r, std::size_t c,
                                double s) {
    TwoPhotonKernel k;
    k.roi_rows = r;
    k.roi_cols = c;
    k.matrix = ComplexField(r * c, r * c);
    for (std::size_t a = 0; a < r * c; ++a)
        for (std::size_t b = 0; b < r * c; ++b) k.matrix(a, b) = s * u[a] * v[b];
    return k;
}

std::vector<cplx> normalized_gaussian(std::size_t r, std::size_t c, double w, double cr, double cc) {
    std::vector<cplx> v(r * c);
    double norm = 0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double dr = i - cr, dc = j - cc;
            v[i * c + j] = std::exp(-(dr * dr + dc * dc) / (w * w));
            norm += std::norm(v[i * c + j]);
        }
    for (auto& x : v) x /= std::sqrt(norm);
    return v;
}

}  // namespace

TEST_CASE("kernel samples Phi at the summed coordinate") {
    OpticalConfig cfg;
    const std::size_t n = 64;
    const auto pump = gaussian_pump(n, desk_pitch(cfg, n), 8 * desk_pitch(cfg, n));
    SelfConvolutionOptions so;
    so.crop_back = false;
    const auto phi = pump_self_convolution(pump, so);
    KernelOptions ko;
    ko.roi_rows = 5;
    ko.roi_cols = 6;
    const auto K = build_kernel(phi, cfg, ko);
    REQUIRE(K.matrix.rows() == 30);
    // Far-field pitch is one pixel, so entries are exact samples of Phi.
    const std::size_t m = phi.field.n();
    for (std::size_t i1 = 0; i1 < 5; ++i1)
        for (std::size_t j1 = 0; j1 < 6; ++j1)
            for (std::size_t i2 = 0; i2 < 5; ++i2)
                for (std::size_t j2 = 0; j2 < 6; ++j2) {
                    const long sr = static_cast<long>(i1 + i2) - 4, sc = static_cast<long>(j1 + j2) - 5;
                    const cplx want = phi.field(m / 2 + sr, m / 2 + sc);
                    CHECK(std::abs(K.matrix(i1 * 6 + j1, i2 * 6 + j2) - want) < 1e-12 * max_abs(phi.field));
                }

    ko.apply_sinc = true;
    const auto Ks = build_kernel(phi, cfg, ko);
    for (std::size_t k = 0; k < Ks.matrix.size(); ++k) {
        CHECK(std::abs(Ks.matrix[k]) <= std::abs(K.matrix[k]) + 1e-15);
        CHECK(std::abs(Ks.matrix[k]) >= 0.99 * std::abs(K.matrix[k]));
    }

    ko.roi_rows = 65;
    ko.roi_cols = 64;
    CHECK_THROWS_AS(build_kernel(phi, cfg, ko), ContractError);
}

TEST_CASE("Schmidt decomposition of a double Gaussian") {
    // exp(-alpha (x+y)^2 - beta (x-y)^2): singular values fall geometrically
    // with ratio (sqrt(alpha) - sqrt(beta)) / (sqrt(alpha) + sqrt(beta)).
    const double alpha = 0.05, beta = 0.002;
    const double mu = (std::sqrt(alpha) - std::sqrt(beta)) / (std::sqrt(alpha) + std::sqrt(beta));
    const std::size_t n = 120;
    TwoPhotonKernel K;
    K.roi_rows = 1;
    K.roi_cols = n;
    K.matrix = ComplexField(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = i - 0.5 * (n - 1), y = j - 0.5 * (n - 1);
            K.matrix(i, j) = std::exp(-alpha * (x + y) * (x + y) - beta * (x - y) * (x - y));
        }
    SchmidtOptions so;
    so.truncation = 1e-6;
    const auto model = schmidt_decompose(K, so);
    for (int k = 1; k <= 6; ++k)
        CHECK(model.singular_values[k] / model.singular_values[k - 1] == doctest::Approx(mu).epsilon(1e-4));
    CHECK(model.schmidt_number() == doctest::Approx((1 + mu) / (1 - mu)).epsilon(1e-4));

    // Orthonormal modes.
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) {
            cplx pu{}, pv{};
            for (std::size_t p = 0; p < n; ++p) {
                pu += std::conj(model.probe_modes[a][p]) * model.probe_modes[b][p];
                pv += std::conj(model.conj_modes[a][p]) * model.conj_modes[b][p];
            }
            CHECK(std::abs(pu - (a == b ? 1.0 : 0.0)) < 1e-10);
            CHECK(std::abs(pv - (a == b ? 1.0 : 0.0)) < 1e-10);
        }

    // Kept modes rebuild F.
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx acc{};
            for (std::size_t k = 0; k < model.kept; ++k)
                acc += model.singular_values[k] * model.probe_modes[k][i] * model.conj_modes[k][j];
            worst = std::max(worst, std::abs(acc - K.matrix(i, j)));
        }
    CHECK(worst < 1e-5);

    // Squeezing of the brightest mode reaches the gain.
    CHECK(std::pow(std::cosh(model.squeezing[0]), 2) == doctest::Approx(2.6).epsilon(1e-12));
    CHECK(model.squeezing[1] < model.squeezing[0]);

    TwoPhotonKernel zero;
    zero.roi_rows = 2;
    zero.roi_cols = 2;
    zero.matrix = ComplexField(4, 4);
    CHECK_THROWS_AS(schmidt_decompose(zero), ContractError);
}

TEST_CASE("point-like Phi gives the anti-diagonal kernel") {
    OpticalConfig cfg;
    ConvolutionMap phi;
    phi.field = ComplexField(32, 1.0, Plane::FarField);
    phi.field(16, 16) = 1.0;
    phi.q_pitch = cfg.wavenumber() * cfg.emccd_pixel / cfg.focal_length;
    KernelOptions ko;
    ko.roi_rows = 3;
    ko.roi_cols = 4;
    const auto K = build_kernel(phi, cfg, ko);
    for (std::size_t a = 0; a < 12; ++a)
        for (std::size_t b = 0; b < 12; ++b) {
            const bool anti = (a / 4 + b / 4 == 2) && (a % 4 + b % 4 == 3);
            CHECK(std::abs(K.matrix(a, b) - (anti ? 1.0 : 0.0)) < 1e-12);
        }
    const auto model = schmidt_decompose(K, {});
    CHECK(model.kept == 12);
    CHECK(model.schmidt_number() == doctest::Approx(12.0));

    // A broad Gaussian Phi has many significant modes.
    for (std::size_t i = 0; i < 32; ++i)
        for (std::size_t j = 0; j < 32; ++j)
            phi.field(i, j) = std::exp(-(std::pow(i - 16.0, 2) + std::pow(j - 16.0, 2)) / 2.0);
    CHECK(schmidt_decompose(build_kernel(phi, cfg, ko), {}).schmidt_number() > 1.5);
}

TEST_CASE("single Schmidt pair correlates as tanh(2 lambda)") {
    const std::size_t r = 4, c = 4;
    const auto u = normalized_gaussian(r, c, 1.5, 1.2, 1.7);
    const auto v = normalized_gaussian(r, c, 2.0, 2.1, 1.4);
    const auto model = schmidt_decompose(rank_one_kernel(u, v, r, c, 3.0), {});
    REQUIRE(model.kept == 1);
    const double lambda = std::asinh(std::sqrt(1.6));
    CHECK(model.squeezing[0] == doctest::Approx(lambda).epsilon(1e-12));

    std::mt19937_64 rng(11);
    for (double dphi : {0.0, pi / 4, pi / 2}) {
        std::vector<double> xp, xc;
        for (int k = 0; k < 20000; ++k) {
            const auto q = sample_quadrature_fields(model, dphi, rng);
            double p = 0, cc = 0;
            for (std::size_t s = 0; s < r * c; ++s) {
                p += u[s].real() * q.probe[s];
                cc += v[s].real() * q.conj[s];
            }
            xp.push_back(p);
            xc.push_back(cc);
        }
        const double rho = sample_corr(xp, xc);
        if (dphi == 0.0)
            CHECK(rho == doctest::Approx(std::tanh(2 * lambda)).epsilon(0.01));
        else if (dphi == pi / 2)
            CHECK(rho == doctest::Approx(-std::tanh(2 * lambda)).epsilon(0.01));
        else
            CHECK(std::abs(rho) < 0.03);
        // Mode quadrature variance cosh(2 lambda)/2.
        CHECK(sample_var(xp) == doctest::Approx(0.5 * std::cosh(2 * lambda)).epsilon(0.04));
    }
}

TEST_CASE("vacuum fills modes outside the kernel") {
    const std::size_t r = 6, c = 6;
    // Mode confined to the top-left 2x2 block.
    std::vector<cplx> u(r * c, 0.0);
    u[0] = u[1] = u[c] = u[c + 1] = 0.5;
    const auto model = schmidt_decompose(rank_one_kernel(u, u, r, c, 1.0), {});
    std::mt19937_64 rng(5);
    std::vector<double> far, near;
    for (int k = 0; k < 20000; ++k) {
        const auto q = sample_quadrature_fields(model, 0.0, rng);
        far.push_back(q.probe(4, 4));
        near.push_back(q.probe(0, 0));
    }
    CHECK(sample_var(far) == doctest::Approx(0.5).epsilon(0.04));
    // Pixel variance inside the mode: 1/2 + |u|^2 (cosh 2 lambda - 1)/2.
    const double lambda = model.squeezing[0];
    CHECK(sample_var(near) == doctest::Approx(0.5 + 0.25 * 0.5 * (std::cosh(2 * lambda) - 1)).epsilon(0.04));
}

TEST_CASE("convolution sampler cross-covariance follows Phi") {
    const std::size_t m = 32;
    // Complex Phi on a pixel grid.
    ComplexField phi(m, 1.0, Plane::FarField);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double y = static_cast<double>(i) - m / 2, x = static_cast<double>(j) - m / 2;
            phi(i, j) = std::exp(-((x - 3) * (x - 3) + y * y) / 4.0) +
                        cplx(0, 0.7) * std::exp(-((x + 2) * (x + 2) + (y - 3) * (y - 3)) / 3.0);
        }
    const int h = 6;
    for (double dphi : {0.0, pi / 4}) {
        ConvolutionSampler s(phi, 2.6, dphi, m, m);
        std::mt19937_64 rng(21);
        RealField acc(2 * h + 1, 2 * h + 1);
        const int draws = 600;
        for (int d = 0; d < draws; ++d) {
            const auto q = s.sample(rng);
            const RealField aligned = rotate180(q.conj);
            for (int di = -h; di <= h; ++di)
                for (int dj = -h; dj <= h; ++dj) {
                    double sum = 0;
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < m; ++j)
                            sum += q.probe(i, j) * aligned((i - di + m) % m, (j - dj + m) % m);
                    acc(di + h, dj + h) += sum / draws;
                }
        }
        RealField want(2 * h + 1, 2 * h + 1);
        const cplx rot = std::polar(1.0, -2 * dphi);
        for (int di = -h; di <= h; ++di)
            for (int dj = -h; dj <= h; ++dj) want(di + h, dj + h) = (rot * phi(m / 2 + di, m / 2 + dj)).real();
        CHECK(pearson(acc, want) > 0.9);
    }
}

TEST_CASE("LO-projected twin-beam difference is squeezed") {
    const std::size_t m = 64;
    ComplexField phi(m, 1.0, Plane::FarField);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double y = static_cast<double>(i) - m / 2, x = static_cast<double>(j) - m / 2;
            phi(i, j) = std::exp(-(x * x + y * y) / 2.0);
        }
    const double gain = 2.6;
    ConvolutionSampler s(phi, gain, 0.0, m, m);
    LocalOscillator lo;
    lo.waist_px = 10;
    lo.peak_counts = 1.0;
    lo.conj_ratio = (gain - 1) / gain;
    DetectorModel det;
    det.rows = m;
    det.cols = 2 * m;
    const RealField mp = lo_mean_counts(lo, det, 0), mc = lo_mean_counts(lo, det, 1);
    double total = 0;
    for (std::size_t k = 0; k < mp.size(); ++k) total += mp[k] + mc[k];
    std::mt19937_64 rng(3);
    std::vector<double> diff;
    for (int d = 0; d < 3000; ++d) {
        const auto q = s.sample(rng);
        double x = 0;
        for (std::size_t k = 0; k < mp.size(); ++k)
            x += std::sqrt(2 * mp[k]) * q.probe[k] - std::sqrt(2 * mc[k]) * q.conj[k];
        diff.push_back(x);
    }
    const double db = 10 * std::log10(sample_var(diff) / total);
    CHECK(db == doctest::Approx(10 * std::log10(1 / (2 * gain - 1))).epsilon(0.08));

    VacuumSampler vac(m, m);
    diff.clear();
    for (int d = 0; d < 3000; ++d) {
        const auto q = vac.sample(rng);
        double x = 0;
        for (std::size_t k = 0; k < mp.size(); ++k)
            x += std::sqrt(2 * mp[k]) * q.probe[k] - std::sqrt(2 * mc[k]) * q.conj[k];
        diff.push_back(x);
    }
    CHECK(std::abs(10 * std::log10(sample_var(diff) / total)) < 0.25);
}

TEST_CASE("Schmidt sampler embeds the ROI at the frame centre") {
    const std::size_t r = 4, c = 4;
    const auto u = normalized_gaussian(r, c, 1.5, 1.5, 1.5);
    const auto model = schmidt_decompose(rank_one_kernel(u, u, r, c, 1.0), {});
    CHECK_THROWS_AS(SchmidtSampler(model, 0.0, 9, 10), ContractError);
    SchmidtSampler s(model, 0.0, 10, 12);
    std::mt19937_64 rng(8);
    std::vector<double> xp, xc;
    for (int k = 0; k < 5000; ++k) {
        const auto q = s.sample(rng);
        double p = 0, cc = 0;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                p += u[i * c + j].real() * q.probe(3 + i, 4 + j);
                cc += u[i * c + j].real() * q.conj(3 + i, 4 + j);
            }
        xp.push_back(p);
        xc.push_back(cc);
    }
    CHECK(sample_corr(xp, xc) == doctest::Approx(std::tanh(2 * model.squeezing[0])).epsilon(0.02));
}

TEST_CASE("local oscillator geometry") {
    OpticalConfig cfg;
    const auto lo = LocalOscillator::from_optics(cfg);
    CHECK(lo.waist_px == doctest::Approx(39.55).epsilon(1e-3));
    CHECK(lo.conj_ratio == doctest::Approx(1.6 / 2.6));
    DetectorModel det;
    const auto mp = lo_mean_counts(lo, det, 0);
    CHECK(mp.rows() == 170);
    CHECK(mp.cols() == 256);
    // Geometric centre between pixels 84/85 and 127/128.
    CHECK(mp(84, 127) == doctest::Approx(mp(85, 128)));
    CHECK(mp(84, 127) == doctest::Approx(5e4 * std::exp(-2 * 0.5 / (lo.waist_px * lo.waist_px))));
    const auto mc = lo_mean_counts(lo, det, 1);
    CHECK(mc(84, 127) / mp(84, 127) == doctest::Approx(1.6 / 2.6));
}

TEST_CASE("detector statistics") {
    DetectorModel det;
    det.rows = 4;
    det.cols = 8;
    det.quantum_efficiency = 1.0;
    det.excess_noise_factor_sq = 1.0;
    LocalOscillator lo;
    lo.waist_px = 1e6;  // flat
    lo.peak_counts = 10.0;
    lo.conj_ratio = 1.0;

    SUBCASE("Poisson below threshold") {
        std::mt19937_64 rng(1);
        std::vector<double> v;
        for (int k = 0; k < 4000; ++k) {
            const auto fp = render_frame_pair(lo, nullptr, nullptr, det, rng);
            v.push_back(fp.frames[0](1, 1));
            v.push_back(fp.frames[1](2, 6));
        }
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        CHECK(mean == doctest::Approx(10.0).epsilon(0.02));
        CHECK(sample_var(v) == doctest::Approx(10.0).epsilon(0.06));
    }
    SUBCASE("shot noise with vacuum, loss and excess noise") {
        lo.peak_counts = 400.0;
        for (double qe : {1.0, 0.6})
            for (double f2 : {1.0, 2.0}) {
                det.quantum_efficiency = qe;
                det.excess_noise_factor_sq = f2;
                VacuumSampler vac(4, 4);
                std::mt19937_64 rng(2);
                std::vector<double> v;
                for (int k = 0; k < 3000; ++k) {
                    const auto a = vac.sample(rng), b = vac.sample(rng);
                    const auto fp = render_frame_pair(lo, &a, &b, det, rng);
                    v.push_back(fp.frames[0](0, 0));
                    v.push_back(fp.frames[1](3, 7));
                    CHECK(fp.bright_pixels == 64);
                }
                CHECK(sample_var(v) == doctest::Approx(f2 * 400.0 + 1.0 / 12).epsilon(0.07));
            }
    }
    SUBCASE("deterministic mean with zero fluctuations") {
        lo.peak_counts = 1234.4;
        QuadratureFields zero{RealField(4, 4), RealField(4, 4)};
        std::mt19937_64 rng(3);
        const auto fp = render_frame_pair(lo, &zero, &zero, det, rng);
        for (std::size_t k = 0; k < 32; ++k) CHECK(fp.frames[0][k] == 1234);
    }
    SUBCASE("negative expected counts are tallied and clamped") {
        lo.peak_counts = 30.0;
        QuadratureFields big{RealField(4, 4), RealField(4, 4)};
        for (auto& x : big.probe.values()) x = -10.0;
        std::mt19937_64 rng(4);
        const auto fp = render_frame_pair(lo, &big, &big, det, rng);
        CHECK(fp.negative_clamped == 32);
        CHECK(fp.frames[0](0, 0) == 0);
        CHECK(fp.frames[0](0, 5) == 30);
    }
    SUBCASE("saturation") {
        lo.peak_counts = 2e5;
        std::mt19937_64 rng(5);
        const auto fp = render_frame_pair(lo, nullptr, nullptr, det, rng);
        CHECK(fp.frames[0](0, 0) == 65535);
    }
    SUBCASE("validation") {
        det.frame_separation = 50e-6;
        std::mt19937_64 rng(6);
        CHECK_THROWS_AS(render_frame_pair(lo, nullptr, nullptr, det, rng), ConfigError);
        det.frame_separation = 60e-6;
        QuadratureFields wrong{RealField(3, 4), RealField(3, 4)};
        CHECK_THROWS_AS(render_frame_pair(lo, &wrong, &wrong, det, rng), ContractError);
    }
}

TEST_CASE("acquisition is deterministic per pair") {
    DetectorModel det;
    det.rows = 16;
    det.cols = 32;
    LocalOscillator lo;
    lo.waist_px = 6;
    auto sampler = std::make_shared<VacuumSampler>(16, 16);
    AcquisitionSimulator sim(sampler, lo, det, 42);
    const auto a = sim.pair(7), b = sim.pair(7), c = sim.pair(8);
    CHECK(a.frames[0].values() == b.frames[0].values());
    CHECK(a.frames[1].values() == b.frames[1].values());
    CHECK(a.frames[0].values() != c.frames[0].values());
    CHECK(a.timestamps[1] - a.timestamps[0] == doctest::Approx(60e-6));
    std::vector<std::uint64_t> seen;
    simulate_acquisition(sim, 3, [&](const FramePair& p) { seen.push_back(p.pair_index); }, 7);
    CHECK(seen == std::vector<std::uint64_t>{7, 8, 9});
    AcquisitionSimulator other(sampler, lo, det, 43);
    CHECK(other.pair(7).frames[0].values() != a.frames[0].values());
    CHECK_THROWS_AS(AcquisitionSimulator(std::make_shared<VacuumSampler>(16, 15), lo, det, 1), ContractError);
}

TEST_CASE("temporal intensity-difference noise") {
    const auto t = temporal_difference_noise(2.6);
    CHECK(t.variance_ratio == doctest::Approx(1 / 4.2));
    CHECK(t.variance_ratio_db == doctest::Approx(-6.232).epsilon(1e-3));
    CHECK(temporal_difference_noise(2.6, 0.5).variance_ratio == doctest::Approx(0.5 / 4.2 + 0.5));
    CHECK_THROWS_AS(temporal_difference_noise(1.0), DomainError);
    CHECK_THROWS_AS(temporal_difference_noise(2.0, 0.0), DomainError);

    auto ratio = [](const PhotodiodeTrace& tr) {
        std::vector<double> d;
        double sum = 0;
        for (std::size_t k = 0; k < tr.probe.size(); ++k) {
            d.push_back(tr.probe[k] - tr.conj[k]);
            sum += tr.probe[k] + tr.conj[k];
        }
        const double n = static_cast<double>(tr.probe.size());
        return (sample_var(d) - 2 * tr.background_mean) / (sum / n - 2 * tr.background_mean);
    };
    for (double eta : {1.0, 0.8}) {
        const auto tr = sample_photodiode_trace(2.6, eta, 1e6, 50.0, 200000, 9);
        CHECK(ratio(tr) == doctest::Approx(temporal_difference_noise(2.6, eta).variance_ratio).epsilon(0.02));
    }
    CHECK(ratio(sample_coherent_trace(2.6e6, 1.6e6, 50.0, 200000, 10)) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("frame pair and manifest round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "twinbeam_synth_test";
    std::filesystem::create_directories(dir);
    FramePair p;
    for (auto& f : p.frames) f = Grid<std::uint16_t>(3, 4, 16e-6, Plane::FarField);
    for (std::size_t k = 0; k < 12; ++k) {
        p.frames[0][k] = static_cast<std::uint16_t>(k * 5000);
        p.frames[1][k] = static_cast<std::uint16_t>(65535 - k);
    }
    p.seed_base = 0x1234567890abcdefULL;
    p.pair_index = 77;
    p.timestamps[0] = 0.5;
    p.timestamps[1] = 0.50006;
    p.negative_clamped = 3;
    p.bright_pixels = 9;
    write_frame_pair(dir / "p.tbfp", p);
    CHECK(std::filesystem::file_size(dir / "p.tbfp") == 64 + 2 * 12 * 2);
    const auto q = read_frame_pair(dir / "p.tbfp");
    CHECK(q.frames[0].values() == p.frames[0].values());
    CHECK(q.frames[1].values() == p.frames[1].values());
    CHECK(q.seed_base == p.seed_base);
    CHECK(q.pair_index == 77);
    CHECK(q.timestamps[1] == 0.50006);
    CHECK(q.negative_clamped == 3);
    CHECK(q.bright_pixels == 9);

    FrameManifest m;
    m.rows = 3;
    m.cols = 4;
    m.seed_base = 99;
    m.delta_phase = 0.25;
    m.files = {"p.tbfp"};
    write_manifest(dir / "manifest.json", m);
    const auto m2 = read_manifest(dir / "manifest.json");
    CHECK(m2.files == m.files);
    CHECK(m2.delta_phase == 0.25);
    CHECK(m2.seed_base == 99);

    {
        std::ofstream bad(dir / "bad.tbfp", std::ios::binary);
        bad << "TBFX";
    }
    CHECK_THROWS_AS(read_frame_pair(dir / "bad.tbfp"), IoError);
    CHECK_THROWS_AS(read_manifest(dir / "missing.json"), IoError);
    std::filesystem::remove_all(dir);
}
