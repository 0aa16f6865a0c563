#include "twinbeam/grid_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace twinbeam {

static_assert(std::endian::native == std::endian::little, "grid I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::vector<char>& buf, std::size_t off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

void write_bytes(const std::filesystem::path& path, const std::vector<char>& header,
                 const void* payload, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<char> make_header(std::size_t n, double pitch, Plane plane, std::uint8_t kind) {
    std::vector<char> h(32, 0);
    std::memcpy(h.data(), "TBFG", 4);
    put<std::uint32_t>(h, 4, kGridFormatVersion);
    put<std::uint32_t>(h, 8, static_cast<std::uint32_t>(n));
    put<double>(h, 12, pitch);
    put<std::uint8_t>(h, 20, static_cast<std::uint8_t>(plane));
    put<std::uint8_t>(h, 21, kind);
    return h;
}

}  // namespace

void write_grid(const std::filesystem::path& path, const ComplexField& f) {
    if (!f.square()) throw ContractError("write_grid: grid must be square");
    auto h = make_header(f.n(), f.pitch(), f.plane(), 0);
    write_bytes(path, h, f.data(), f.size() * sizeof(cplx));
}

void write_grid(const std::filesystem::path& path, const RealField& f) {
    if (!f.square()) throw ContractError("write_grid: grid must be square");
    auto h = make_header(f.n(), f.pitch(), f.plane(), 1);
    ComplexField c = to_complex(f);
    write_bytes(path, h, c.data(), c.size() * sizeof(cplx));
}

ComplexField read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<char> h(32);
    in.read(h.data(), 32);
    if (!in || std::memcmp(h.data(), "TBFG", 4) != 0) throw IoError("not a TBFG grid: " + path.string());
    if (get<std::uint32_t>(h, 4) != kGridFormatVersion) throw IoError("unsupported TBFG version");
    const std::size_t n = get<std::uint32_t>(h, 8);
    const double pitch = get<double>(h, 12);
    const auto plane = get<std::uint8_t>(h, 20);
    if (plane > 2) throw IoError("bad plane tag in " + path.string());
    ComplexField f(n, pitch, static_cast<Plane>(plane));
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(cplx)));
    if (!in) throw IoError("truncated grid payload: " + path.string());
    return f;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    if (img.pixels.size() != img.rows * img.cols) throw ContractError("write_pgm: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "P5\n" << img.cols << " " << img.rows << "\n" << img.maxval << "\n";
    if (img.maxval < 256) {
        std::vector<unsigned char> bytes(img.pixels.begin(), img.pixels.end());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    } else {
        // 16-bit PGM samples are big-endian.
        std::vector<unsigned char> bytes(img.pixels.size() * 2);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            bytes[2 * i] = static_cast<unsigned char>(img.pixels[i] >> 8);
            bytes[2 * i + 1] = static_cast<unsigned char>(img.pixels[i] & 0xff);
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    auto token = [&in]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(c);
        }
        return t;
    };
    if (token() != "P5") throw IoError("not a binary PGM (P5): " + path.string());
    GrayImage img;
    try {
        img.cols = std::stoul(token());
        img.rows = std::stoul(token());
        img.maxval = static_cast<unsigned>(std::stoul(token()));
    } catch (const std::exception&) {
        throw IoError("malformed PGM header: " + path.string());
    }
    if (img.maxval == 0 || img.maxval > 65535) throw IoError("bad PGM maxval");
    img.pixels.resize(img.rows * img.cols);
    if (img.maxval < 256) {
        std::vector<unsigned char> bytes(img.pixels.size());
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!in) throw IoError("truncated PGM: " + path.string());
        std::copy(bytes.begin(), bytes.end(), img.pixels.begin());
    } else {
        std::vector<unsigned char> bytes(img.pixels.size() * 2);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!in) throw IoError("truncated PGM: " + path.string());
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            img.pixels[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
    }
    return img;
}

PgmScale write_pgm_scaled(const std::filesystem::path& path, const RealField& f) {
    PgmScale s;
    if (f.size() > 0) {
        auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
        s.min = *lo;
        s.max = *hi;
    }
    GrayImage img;
    img.rows = f.rows();
    img.cols = f.cols();
    img.maxval = 65535;
    img.pixels.resize(f.size());
    const double span = s.max - s.min;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = span > 0.0 ? (f[i] - s.min) / span : 0.0;
        img.pixels[i] = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
    }
    write_pgm(path, img);
    return s;
}

}  // namespace twinbeam
