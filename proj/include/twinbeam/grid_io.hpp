#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "twinbeam/grid.hpp"

namespace twinbeam {

// Binary grid container, little-endian:
//   offset 0   char[4]  "TBFG"
//   offset 4   u32      version (1)
//   offset 8   u32      N
//   offset 12  f64      pitch
//   offset 20  u8       plane (0 SLM, 1 CellCenter, 2 FarField)
//   offset 21  u8       kind (0 complex, 1 real; real grids store im = 0)
//   offset 22  zero padding up to 32
//   offset 32  N*N (re, im) f64 pairs, row-major
inline constexpr std::uint32_t kGridFormatVersion = 1;

void write_grid(const std::filesystem::path& path, const ComplexField& f);
void write_grid(const std::filesystem::path& path, const RealField& f);
ComplexField read_grid(const std::filesystem::path& path);

struct GrayImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    unsigned maxval = 255;
    std::vector<std::uint16_t> pixels;  // row-major
};

/// Binary portable graymap (P5), 8- or 16-bit depending on maxval.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

struct PgmScale {
    double min = 0.0;
    double max = 0.0;
};

/// 16-bit linear export of a real grid; value = min + level*(max-min)/65535.
PgmScale write_pgm_scaled(const std::filesystem::path& path, const RealField& f);

}  // namespace twinbeam
