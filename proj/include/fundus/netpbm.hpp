#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fundus/error.hpp"
#include "fundus/image.hpp"

namespace fundus {

/**
 * Binary netpbm I/O. The native raster formats are PGM ("P5") for
 * grayscale and PPM ("P6") for RGB, both with maxval 255.
 *
 * Writers emit the canonical form
 *
 *     P5\n<width> <height>\n255\n<raw row-major bytes>
 *
 * and readers accept standard headers (runs of whitespace, '#' comments)
 * but reject any maxval other than 255 and any payload whose length does
 * not match the header exactly. On canonical data write(read(b)) == b.
 */

namespace detail {

struct PnmHeader {
    int width = 0;
    int height = 0;
    std::size_t payload_offset = 0;
};

inline bool is_pnm_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

inline void skip_space_and_comments(const std::vector<std::uint8_t>& b, std::size_t& pos) {
    while (pos < b.size()) {
        if (is_pnm_space(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n')
                ++pos;
        } else {
            break;
        }
    }
}

inline long read_pnm_int(const std::vector<std::uint8_t>& b, std::size_t& pos,
                         const char* field) {
    skip_space_and_comments(b, pos);
    if (pos >= b.size() || b[pos] < '0' || b[pos] > '9')
        throw parse_error(std::string("pnm: missing or non-numeric ") + field);
    long v = 0;
    while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
        v = v * 10 + (b[pos] - '0');
        if (v > 1'000'000'000L)
            throw parse_error(std::string("pnm: ") + field + " out of range");
        ++pos;
    }
    return v;
}

inline PnmHeader parse_pnm_header(const std::vector<std::uint8_t>& bytes,
                                  char expected_kind) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != expected_kind)
        throw parse_error(std::string("pnm: bad magic, expected \"P") + expected_kind + "\"");
    std::size_t pos = 2;
    PnmHeader h;
    long w = read_pnm_int(bytes, pos, "width");
    long ht = read_pnm_int(bytes, pos, "height");
    long maxval = read_pnm_int(bytes, pos, "maxval");
    if (w < 1)
        throw parse_error("pnm: width must be at least 1");
    if (ht < 1)
        throw parse_error("pnm: height must be at least 1");
    if (maxval != 255)
        throw parse_error("pnm: maxval must be 255, got " + std::to_string(maxval));
    if (pos >= bytes.size() || !is_pnm_space(bytes[pos]))
        throw parse_error("pnm: missing whitespace after maxval");
    ++pos;  // exactly one separator byte before the raster
    h.width = static_cast<int>(w);
    h.height = static_cast<int>(ht);
    h.payload_offset = pos;
    return h;
}

inline void check_payload(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                          std::size_t expected) {
    const std::size_t got = bytes.size() - offset;
    if (got < expected)
        throw parse_error("pnm: payload truncated, expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(got));
    if (got > expected)
        throw parse_error("pnm: payload has " + std::to_string(got - expected) +
                          " trailing bytes");
}

inline void append_header(std::vector<std::uint8_t>& out, char kind, int w, int h) {
    std::string header = std::string("P") + kind + "\n" + std::to_string(w) + " " +
                         std::to_string(h) + "\n255\n";
    out.insert(out.end(), header.begin(), header.end());
}

}  // namespace detail

inline GrayImage read_pgm(const std::vector<std::uint8_t>& bytes) {
    auto h = detail::parse_pnm_header(bytes, '5');
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    detail::check_payload(bytes, h.payload_offset, n);
    GrayImage img(h.width, h.height);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), n,
                img.data.begin());
    return img;
}

inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
    std::vector<std::uint8_t> out;
    out.reserve(img.data.size() + 32);
    detail::append_header(out, '5', img.width, img.height);
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

inline RgbImage read_ppm(const std::vector<std::uint8_t>& bytes) {
    auto h = detail::parse_pnm_header(bytes, '6');
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
    detail::check_payload(bytes, h.payload_offset, n);
    RgbImage img(h.width, h.height);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), n,
                img.data.begin());
    return img;
}

inline std::vector<std::uint8_t> write_ppm(const RgbImage& img) {
    std::vector<std::uint8_t> out;
    out.reserve(img.data.size() + 32);
    detail::append_header(out, '6', img.width, img.height);
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

// --- file helpers ---

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        throw std::runtime_error("read failed: " + path.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot create file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_file_text(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline GrayImage load_pgm(const std::filesystem::path& path) {
    return read_pgm(read_file_bytes(path));
}

inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
    write_file_bytes(path, write_pgm(img));
}

inline RgbImage load_ppm(const std::filesystem::path& path) {
    return read_ppm(read_file_bytes(path));
}

inline void save_ppm(const std::filesystem::path& path, const RgbImage& img) {
    write_file_bytes(path, write_ppm(img));
}

/// Loads either raster kind as RGB; a PGM is replicated across the three
/// channels. Dispatches on the magic bytes, not the file name.
inline RgbImage load_image_any(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        GrayImage g = read_pgm(bytes);
        RgbImage rgb(g.width, g.height);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            rgb.data[3 * i] = g.data[i];
            rgb.data[3 * i + 1] = g.data[i];
            rgb.data[3 * i + 2] = g.data[i];
        }
        return rgb;
    }
    return read_ppm(bytes);
}

/// Loads a mask raster: any nonzero pixel counts as true.
inline BinaryMask load_mask_pgm(const std::filesystem::path& path) {
    GrayImage g = load_pgm(path);
    BinaryMask m(g.width, g.height, false);
    for (std::size_t i = 0; i < g.data.size(); ++i)
        m.data[i] = g.data[i] != 0 ? 1 : 0;
    return m;
}

inline void save_mask_pgm(const std::filesystem::path& path, const BinaryMask& m) {
    GrayImage g(m.width, m.height);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        g.data[i] = m.data[i] ? 255 : 0;
    save_pgm(path, g);
}

}  // namespace fundus
