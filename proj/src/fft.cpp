#include "twinbeam/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace twinbeam {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan is. Plans
// are created once per (rows, cols, sign) with FFTW_ESTIMATE, which makes the
// chosen algorithm, and therefore the rounding, independent of timing.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t rows, std::size_t cols, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(rows, cols, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * rows * cols));
        fftw_plan p = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                                       sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mu_;
    std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

ComplexField centered_transform(const ComplexField& f, int sign) {
    require_transform_grid(f, sign < 0 ? "dft2_centered" : "idft2_centered");
    require_finite(f, sign < 0 ? "dft2_centered" : "idft2_centered");
    const std::size_t n = f.n();
    ComplexField work = fftshift(f);
    fft2_inplace(work.span(), n, n, sign);
    ComplexField out = fftshift(work);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out.values()) v *= scale;
    out.set_pitch(2.0 * std::numbers::pi / (static_cast<double>(n) * f.pitch()));
    return out;
}

}  // namespace

void fft2_inplace(std::span<cplx> data, std::size_t rows, std::size_t cols, int sign) {
    if (data.size() != rows * cols) throw ContractError("fft2_inplace: buffer size mismatch");
    fftw_plan p = PlanCache::instance().get(rows, cols, sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
}

ComplexField dft2_centered(const ComplexField& f) {
    ComplexField out = centered_transform(f, kForwardSign);
    out.set_plane(Plane::FarField);
    return out;
}

ComplexField idft2_centered(const ComplexField& F) {
    ComplexField out = centered_transform(F, -kForwardSign);
    out.set_plane(Plane::CellCenter);
    return out;
}

template <typename T>
Grid<T> fftshift(const Grid<T>& f) {
    const std::size_t r = f.rows(), c = f.cols();
    const std::size_t hr = r / 2, hc = c / 2;
    Grid<T> out(r, c, f.pitch(), f.plane());
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t ii = (i + hr) % r;
        for (std::size_t j = 0; j < c; ++j) out(ii, (j + hc) % c) = f(i, j);
    }
    return out;
}

template <typename T>
Grid<T> rotate180(const Grid<T>& f) {
    Grid<T> out(f.rows(), f.cols(), f.pitch(), f.plane());
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) out[n - 1 - i] = f[i];
    return out;
}

template <typename T>
Grid<T> embed_and_crop(const Grid<T>& f, std::size_t new_rows, std::size_t new_cols) {
    if (new_rows < 1 || new_cols < 1) throw SizingError("embed_and_crop: empty target");
    Grid<T> out(new_rows, new_cols, f.pitch(), f.plane());
    // Offsets chosen so that the center sample (r/2, c/2) stays centered.
    const auto off_r = static_cast<std::ptrdiff_t>(new_rows / 2) - static_cast<std::ptrdiff_t>(f.rows() / 2);
    const auto off_c = static_cast<std::ptrdiff_t>(new_cols / 2) - static_cast<std::ptrdiff_t>(f.cols() / 2);
    for (std::size_t i = 0; i < new_rows; ++i) {
        const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) - off_r;
        if (si < 0 || si >= static_cast<std::ptrdiff_t>(f.rows())) continue;
        for (std::size_t j = 0; j < new_cols; ++j) {
            const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j) - off_c;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(f.cols())) continue;
            out(i, j) = f(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
        }
    }
    return out;
}

template <typename T>
Grid<T> embed_and_crop(const Grid<T>& f, std::size_t new_n) {
    if (new_n < 8) throw SizingError("embed_and_crop: new size must be >= 8");
    return embed_and_crop(f, new_n, new_n);
}

template Grid<cplx> fftshift(const Grid<cplx>&);
template Grid<double> fftshift(const Grid<double>&);
template Grid<cplx> rotate180(const Grid<cplx>&);
template Grid<double> rotate180(const Grid<double>&);
template Grid<cplx> embed_and_crop(const Grid<cplx>&, std::size_t);
template Grid<double> embed_and_crop(const Grid<double>&, std::size_t);
template Grid<cplx> embed_and_crop(const Grid<cplx>&, std::size_t, std::size_t);
template Grid<double> embed_and_crop(const Grid<double>&, std::size_t, std::size_t);

}  // namespace twinbeam
