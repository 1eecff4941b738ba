#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fundus {

/**
 * @brief 8-bit grayscale image, row-major.
 *
 * Pixel (x, y) lives at data[y * width + x]. x is the column, y the row.
 * Every stored value is in [0, 255]; width and height are at least 1 for
 * any non-empty image.
 */
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;

    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          data(checked_size(w, h), fill) {}

    GrayImage(int w, int h, std::vector<std::uint8_t> pixels)
        : width(w), height(h), data(std::move(pixels)) {
        if (data.size() != checked_size(w, h))
            throw std::invalid_argument("GrayImage: data length does not match width*height");
    }

    std::uint8_t at(int x, int y) const { return data[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return data[index(x, y)]; }

    std::size_t pixel_count() const { return data.size(); }

    bool same_size(int w, int h) const { return width == w && height == h; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }

    static std::size_t checked_size(int w, int h) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("image dimensions must be at least 1x1");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }
};

/**
 * @brief 8-bit RGB image, row-major interleaved triples.
 *
 * data holds width * height * 3 bytes as (r, g, b) per pixel.
 */
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImage() = default;

    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          data(GrayImage::checked_size(w, h) * 3, fill) {}

    RgbImage(int w, int h, std::vector<std::uint8_t> rgb)
        : width(w), height(h), data(std::move(rgb)) {
        if (data.size() != GrayImage::checked_size(w, h) * 3)
            throw std::invalid_argument("RgbImage: data length does not match width*height*3");
    }

    std::uint8_t r(int x, int y) const { return data[index(x, y)]; }
    std::uint8_t g(int x, int y) const { return data[index(x, y) + 1]; }
    std::uint8_t b(int x, int y) const { return data[index(x, y) + 2]; }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::size_t i = index(x, y);
        data[i] = r;
        data[i + 1] = g;
        data[i + 2] = b;
    }

    std::size_t pixel_count() const { return data.size() / 3; }

    std::size_t index(int x, int y) const {
        return 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(x));
    }
};

/**
 * @brief Per-pixel boolean mask; true marks a pixel inside the region of
 * validity (field of view, anatomy, lesion ground truth).
 *
 * Dimensions always match the image the mask qualifies.
 */
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 0 or 1

    BinaryMask() = default;

    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h),
          data(GrayImage::checked_size(w, h), fill ? 1 : 0) {}

    bool at(int x, int y) const { return data[index(x, y)] != 0; }
    void set(int x, int y, bool v) { data[index(x, y)] = v ? 1 : 0; }

    std::size_t count_true() const {
        return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t(1)));
    }

    bool same_size(int w, int h) const { return width == w && height == h; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
};

/// Luma conversion: round(0.299 r + 0.587 g + 0.114 b) per pixel, clamped to [0, 255].
inline GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        double y = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] +
                   0.114 * img.data[3 * i + 2];
        long v = std::lround(y);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
    return out;
}

/// Extracts the green channel unchanged.
inline GrayImage green_plane(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = img.data[3 * i + 1];
    return out;
}

/**
 * @brief Field-of-view mask: the largest 8-connected component of pixels
 * strictly brighter than the threshold.
 *
 * Fundus photographs carry a near-black surround outside the circular
 * illuminated area; statistics must exclude it. If no pixel exceeds the
 * threshold the whole frame is treated as valid (all-true mask).
 */
inline BinaryMask fov_mask(const GrayImage& img, int threshold = 10) {
    if (threshold < 0 || threshold > 255)
        throw std::invalid_argument("fov_mask: threshold must be in [0,255]");
    const int w = img.width;
    const int h = img.height;
    const std::size_t n = img.data.size();

    std::vector<std::uint8_t> above(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        above[i] = img.data[i] > threshold ? 1 : 0;
        any = any || above[i];
    }
    if (!any)
        return BinaryMask(w, h, true);

    // Flood fill per component in scan order; keep the largest. A strict
    // size comparison makes ties resolve to the earliest component.
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::size_t> stack;
    std::int32_t next_id = 0;
    std::size_t best_size = 0;
    std::int32_t best_id = -1;
    const int dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    const int dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    for (std::size_t start = 0; start < n; ++start) {
        if (!above[start] || comp[start] >= 0)
            continue;
        const std::int32_t id = next_id++;
        std::size_t size = 0;
        comp[start] = id;
        stack.assign(1, start);
        while (!stack.empty()) {
            std::size_t cur = stack.back();
            stack.pop_back();
            ++size;
            int cx = static_cast<int>(cur % static_cast<std::size_t>(w));
            int cy = static_cast<int>(cur / static_cast<std::size_t>(w));
            for (int k = 0; k < 8; ++k) {
                int nx = cx + dx[k];
                int ny = cy + dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                if (above[ni] && comp[ni] < 0) {
                    comp[ni] = id;
                    stack.push_back(ni);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_id = id;
        }
    }

    BinaryMask mask(w, h, false);
    for (std::size_t i = 0; i < n; ++i)
        mask.data[i] = (comp[i] == best_id) ? 1 : 0;
    return mask;
}

}  // namespace fundus
