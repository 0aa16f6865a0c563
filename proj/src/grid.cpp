#include "twinbeam/grid.hpp"

#include <cmath>
#include <string>

namespace twinbeam {

std::string_view plane_name(Plane p) {
    switch (p) {
        case Plane::SLM: return "SLM";
        case Plane::CellCenter: return "CellCenter";
        case Plane::FarField: return "FarField";
    }
    return "unknown";
}

template <typename T>
void require_transform_grid(const Grid<T>& f, std::string_view what) {
    if (!f.square() || !is_power_of_two(f.rows()) || f.rows() < 8) {
        throw SizingError(std::string(what) + ": grid must be square, power of two and >= 8, got " +
                          std::to_string(f.rows()) + "x" + std::to_string(f.cols()));
    }
}

template void require_transform_grid(const Grid<cplx>&, std::string_view);
template void require_transform_grid(const Grid<double>&, std::string_view);

void require_finite(const ComplexField& f, std::string_view what) {
    if (!(f.pitch() > 0.0) || !std::isfinite(f.pitch()))
        throw ContractError(std::string(what) + ": pitch must be positive");
    for (const auto& v : f.values())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ContractError(std::string(what) + ": non-finite amplitude");
}

void require_finite(const RealField& f, std::string_view what) {
    if (!(f.pitch() > 0.0) || !std::isfinite(f.pitch()))
        throw ContractError(std::string(what) + ": pitch must be positive");
    for (double v : f.values())
        if (!std::isfinite(v)) throw ContractError(std::string(what) + ": non-finite value");
}

double energy(const ComplexField& f) {
    double s = 0.0;
    for (const auto& v : f.values()) s += std::norm(v);
    return s;
}

double energy(const RealField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return s;
}

namespace {
template <typename Op>
RealField map_complex(const ComplexField& f, Op op) {
    RealField out(f.rows(), f.cols(), f.pitch(), f.plane());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = op(f[i]);
    return out;
}

template <typename T>
void require_same(const Grid<T>& a, const Grid<T>& b) {
    if (!a.same_shape(b)) throw ContractError("grid shape mismatch");
}
}  // namespace

RealField real_part(const ComplexField& f) {
    return map_complex(f, [](cplx v) { return v.real(); });
}
RealField imag_part(const ComplexField& f) {
    return map_complex(f, [](cplx v) { return v.imag(); });
}
RealField abs2(const ComplexField& f) {
    return map_complex(f, [](cplx v) { return std::norm(v); });
}

ComplexField to_complex(const RealField& f) {
    ComplexField out(f.rows(), f.cols(), f.pitch(), f.plane());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
    return out;
}

RealField operator-(const RealField& a, const RealField& b) {
    require_same(a, b);
    RealField out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
    return out;
}

RealField operator+(const RealField& a, const RealField& b) {
    require_same(a, b);
    RealField out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
    return out;
}

RealField operator*(double s, const RealField& a) {
    RealField out = a;
    for (auto& v : out.values()) v *= s;
    return out;
}

ComplexField operator*(cplx s, const ComplexField& a) {
    ComplexField out = a;
    for (auto& v : out.values()) v *= s;
    return out;
}

ComplexField operator+(const ComplexField& a, const ComplexField& b) {
    require_same(a, b);
    ComplexField out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
    return out;
}

}  // namespace twinbeam
