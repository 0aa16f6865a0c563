#pragma once

#include <cstddef>
#include <span>

#include "twinbeam/grid.hpp"

namespace twinbeam {

// Transform convention used everywhere in the library:
//   forward  F[k] = (1/N) sum_m f[m] exp(-2 pi i k.m / N)
//   inverse  f[m] = (1/N) sum_k F[k] exp(+2 pi i k.m / N)
// with m, k the centered indices (index - N/2). The inverse carries the
// exp(+i k.rho) synthesis kernel of the angular-spectrum expansion, the
// 1/N per axis makes both unitary, and DC sits at index (N/2, N/2).
inline constexpr int kForwardSign = -1;

/// Unitary centered 2-D DFT. Output pitch is 2*pi/(N*pitch) (rad/m) and the
/// plane tag becomes FarField.
ComplexField dft2_centered(const ComplexField& f);

/// Exact inverse of dft2_centered. Output pitch is 2*pi/(N*pitch) and the
/// plane tag becomes CellCenter.
ComplexField idft2_centered(const ComplexField& F);

/// Unnormalized in-place 2-D DFT of any rows x cols array, DC at index 0.
/// sign = -1 forward, +1 backward. Used by the correlation engines.
void fft2_inplace(std::span<cplx> data, std::size_t rows, std::size_t cols, int sign);

/// Swap quadrants so index (N/2, N/2) moves to (0, 0); its own inverse for even sizes.
template <typename T>
Grid<T> fftshift(const Grid<T>& f);

/// (i, j) -> (rows-1-i, cols-1-j). Works on any shape.
template <typename T>
Grid<T> rotate180(const Grid<T>& f);

/// Centered zero-pad (new_n > n) or centered crop (new_n < n) of a square
/// grid. Sample (n/2, n/2) maps to (new_n/2, new_n/2). Pitch and plane kept.
template <typename T>
Grid<T> embed_and_crop(const Grid<T>& f, std::size_t new_n);

/// Centered rectangular crop/pad to rows x cols using the same centering rule.
template <typename T>
Grid<T> embed_and_crop(const Grid<T>& f, std::size_t new_rows, std::size_t new_cols);

}  // namespace twinbeam
