#pragma once

#include <complex>
#include <concepts>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "twinbeam/errors.hpp"

namespace twinbeam {

using cplx = std::complex<double>;

// Which optical plane a grid is sampled in. SLM and CellCenter grids are
// indexed by transverse position rho; FarField grids by transverse momentum
// (pitch in rad/m) or, after kmap_to_farfield, by camera position (pitch in m).
enum class Plane : unsigned char { SLM = 0, CellCenter = 1, FarField = 2 };

std::string_view plane_name(Plane p);

/// Row-major sampled field with a physical pitch and plane tag.
///
/// Transforms require square power-of-two grids; non-square grids are
/// only produced at the crop/export boundary (camera frames, correlation maps).
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, double pitch = 1.0, Plane plane = Plane::CellCenter)
        : rows_(rows), cols_(cols), pitch_(pitch), plane_(plane), data_(rows * cols, T{}) {}
    Grid(std::size_t n, double pitch = 1.0, Plane plane = Plane::CellCenter)
        : Grid(n, n, pitch, plane) {}
    // Two integer arguments always mean rows x cols.
    template <std::integral I, std::integral J>
    Grid(I rows, J cols) : Grid(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), 1.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    // Side length of a square grid.
    std::size_t n() const { return rows_; }
    bool square() const { return rows_ == cols_; }

    double pitch() const { return pitch_; }
    Plane plane() const { return plane_; }
    void set_pitch(double p) { pitch_ = p; }
    void set_plane(Plane p) { plane_ = p; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double pitch_ = 1.0;
    Plane plane_ = Plane::CellCenter;
    std::vector<T> data_;
};

using ComplexField = Grid<cplx>;
using RealField = Grid<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Throws SizingError unless f is square, power of two and N >= 8.
template <typename T>
void require_transform_grid(const Grid<T>& f, std::string_view what);

// Throws ContractError unless pitch > 0 and every sample is finite.
void require_finite(const ComplexField& f, std::string_view what);
void require_finite(const RealField& f, std::string_view what);

double energy(const ComplexField& f);
double energy(const RealField& f);

RealField real_part(const ComplexField& f);
RealField imag_part(const ComplexField& f);
RealField abs2(const ComplexField& f);
ComplexField to_complex(const RealField& f);

RealField operator-(const RealField& a, const RealField& b);
RealField operator+(const RealField& a, const RealField& b);
RealField operator*(double s, const RealField& a);
ComplexField operator*(cplx s, const ComplexField& a);
ComplexField operator+(const ComplexField& a, const ComplexField& b);

}  // namespace twinbeam
