#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fundus/grid.hpp"
#include "fundus/image.hpp"
#include "fundus/preprocess.hpp"

namespace fundus {

/// Candidate-extraction parameters: statistics region pitch s, minimum
/// component cardinality n, and pixel connectivity.
struct PrefilterParams {
    int region_size = 75;
    int min_cardinality = 30;
    int connectivity = 8;
};

inline void validate(const PrefilterParams& p) {
    if (p.region_size < 2)
        throw std::invalid_argument("PrefilterParams: region_size must be at least 2");
    if (p.min_cardinality < 1)
        throw std::invalid_argument("PrefilterParams: min_cardinality must be at least 1");
    if (p.connectivity != 4 && p.connectivity != 8)
        throw std::invalid_argument("PrefilterParams: connectivity must be 4 or 8");
}

enum class PixelLabel : std::uint8_t { Unlabeled = 0, High = 1, Low = 2 };

/// Per-pixel {High, Low, Unlabeled} assignment. Out-of-FOV and
/// anatomy-masked pixels are always Unlabeled.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<PixelLabel> data;

    LabelMap() = default;

    LabelMap(int w, int h)
        : width(w), height(h),
          data(GrayImage::checked_size(w, h), PixelLabel::Unlabeled) {}

    PixelLabel at(int x, int y) const { return data[index(x, y)]; }
    void set(int x, int y, PixelLabel l) { data[index(x, y)] = l; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
};

/// Population mean and standard deviation of one region's valid pixels.
/// A region with no valid pixels keeps mean = sigma = 0 and contributes no
/// labels.
struct RegionStats {
    double mean = 0.0;
    double sigma = 0.0;
    long long valid_pixels = 0;
};

/// The statistics regions form the same ceil-division grid as subimages.
struct RegionStatsGrid {
    int region_size = 0;
    TileGrid grid;
    std::vector<RegionStats> stats;

    int region_index(int x, int y) const {
        return (y / region_size) * grid.cols + (x / region_size);
    }

    const RegionStats& at_pixel(int x, int y) const {
        return stats[static_cast<std::size_t>(region_index(x, y))];
    }
};

/// Externally supplied anatomical-structure masks (true = pixel belongs to
/// the structure and must be excluded). All optional.
struct AnatomyMasks {
    std::optional<BinaryMask> vessels;
    std::optional<BinaryMask> optic_disc;
    std::optional<BinaryMask> macula;
};

/// One connected component of identically labeled pixels.
struct CandidateRegion {
    PixelLabel label = PixelLabel::Unlabeled;
    std::vector<std::pair<int, int>> pixels;  // (x, y), scan order
    TileRect bounding_box;
    std::vector<int> source_region_indices;   // ascending, from the stats grid

    long long pixel_count() const { return static_cast<long long>(pixels.size()); }
};

/// Per-region population mean and standard deviation over valid pixels.
inline RegionStatsGrid region_stats(const GrayImage& img, const BinaryMask& valid, int s) {
    if (s < 2)
        throw std::invalid_argument("region_stats: region size must be at least 2");
    if (!valid.same_size(img.width, img.height))
        throw std::invalid_argument("region_stats: mask dimensions do not match image");
    RegionStatsGrid out;
    out.region_size = s;
    out.grid = make_tile_grid(img.width, img.height, s);
    out.stats.resize(out.grid.tiles.size());
    for (std::size_t i = 0; i < out.grid.tiles.size(); ++i) {
        const TileRect& r = out.grid.tiles[i];
        double sum = 0.0, sumsq = 0.0;
        long long count = 0;
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x) {
                if (!valid.at(x, y))
                    continue;
                const double v = img.at(x, y);
                sum += v;
                sumsq += v * v;
                ++count;
            }
        RegionStats& st = out.stats[i];
        st.valid_pixels = count;
        if (count > 0) {
            st.mean = sum / static_cast<double>(count);
            double var = sumsq / static_cast<double>(count) - st.mean * st.mean;
            st.sigma = var > 0.0 ? std::sqrt(var) : 0.0;
        }
    }
    return out;
}

/// Strict per-pixel labeling against the pixel's own region statistics:
/// High if I - mu > sigma, Low if I - mu < -sigma, otherwise Unlabeled.
inline LabelMap label_pixels(const GrayImage& img, const RegionStatsGrid& stats,
                             const BinaryMask& valid) {
    if (!valid.same_size(img.width, img.height))
        throw std::invalid_argument("label_pixels: mask dimensions do not match image");
    if (stats.grid.cols != (img.width + stats.region_size - 1) / stats.region_size ||
        stats.grid.rows != (img.height + stats.region_size - 1) / stats.region_size)
        throw std::invalid_argument("label_pixels: stats grid does not match image");
    LabelMap out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (!valid.at(x, y))
                continue;
            const RegionStats& st = stats.at_pixel(x, y);
            if (st.valid_pixels == 0)
                continue;
            const double d = static_cast<double>(img.at(x, y)) - st.mean;
            if (d > st.sigma)
                out.set(x, y, PixelLabel::High);
            else if (d < -st.sigma)
                out.set(x, y, PixelLabel::Low);
        }
    return out;
}

/// valid = fov AND NOT vessels AND NOT optic_disc AND NOT macula; absent
/// anatomy masks exclude nothing.
inline BinaryMask combined_valid_mask(const BinaryMask& fov, const AnatomyMasks& anat) {
    BinaryMask out = fov;
    auto apply = [&out](const std::optional<BinaryMask>& m, const char* name) {
        if (!m)
            return;
        if (!m->same_size(out.width, out.height))
            throw std::invalid_argument(std::string("combined_valid_mask: ") + name +
                                        " mask dimensions do not match");
        for (std::size_t i = 0; i < out.data.size(); ++i)
            if (m->data[i])
                out.data[i] = 0;
    };
    apply(anat.vessels, "vessels");
    apply(anat.optic_disc, "optic_disc");
    apply(anat.macula, "macula");
    return out;
}

/**
 * @brief Connected components of identically labeled pixels with
 * cardinality at least min_cardinality.
 *
 * Components may cross statistics-region boundaries. Output order follows
 * the scan order of each component's first pixel; pixel lists are in scan
 * order; both are deterministic.
 */
inline std::vector<CandidateRegion> connected_components(const LabelMap& labels,
                                                         const PrefilterParams& p) {
    validate(p);
    const int w = labels.width;
    const int h = labels.height;
    const int cols = (w + p.region_size - 1) / p.region_size;
    static const int dx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static const int dx4[4] = {0, -1, 1, 0};
    static const int dy4[4] = {-1, 0, 0, 1};
    const int* dx = p.connectivity == 8 ? dx8 : dx4;
    const int* dy = p.connectivity == 8 ? dy8 : dy4;
    const int ndir = p.connectivity;

    std::vector<std::uint8_t> visited(labels.data.size(), 0);
    std::vector<std::size_t> stack;
    std::vector<CandidateRegion> out;
    for (std::size_t start = 0; start < labels.data.size(); ++start) {
        if (visited[start] || labels.data[start] == PixelLabel::Unlabeled)
            continue;
        const PixelLabel lab = labels.data[start];
        visited[start] = 1;
        stack.assign(1, start);
        std::vector<std::pair<int, int>> pixels;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            const int cx = static_cast<int>(cur % static_cast<std::size_t>(w));
            const int cy = static_cast<int>(cur / static_cast<std::size_t>(w));
            pixels.emplace_back(cx, cy);
            for (int k = 0; k < ndir; ++k) {
                const int nx = cx + dx[k];
                const int ny = cy + dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                if (!visited[ni] && labels.data[ni] == lab) {
                    visited[ni] = 1;
                    stack.push_back(ni);
                }
            }
        }
        if (static_cast<int>(pixels.size()) < p.min_cardinality)
            continue;
        std::sort(pixels.begin(), pixels.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });
        CandidateRegion c;
        c.label = lab;
        int x0 = w, y0 = h, x1 = -1, y1 = -1;
        std::vector<int> regions;
        for (const auto& [px, py] : pixels) {
            x0 = std::min(x0, px);
            y0 = std::min(y0, py);
            x1 = std::max(x1, px);
            y1 = std::max(y1, py);
            regions.push_back((py / p.region_size) * cols + (px / p.region_size));
        }
        std::sort(regions.begin(), regions.end());
        regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
        c.pixels = std::move(pixels);
        c.bounding_box = TileRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
        c.source_region_indices = std::move(regions);
        out.push_back(std::move(c));
    }
    return out;
}

struct PrefilterResult {
    std::vector<CandidateRegion> candidates;
    double retained_fraction = 0.0;
};

/**
 * @brief Full phase-2 candidate extraction on one image.
 *
 * Conditioning chain, validity masking, per-region statistics, strict
 * labeling, and cardinality-filtered components. retained_fraction is the
 * unioned candidate bounding-box area over the image area, matching the
 * rectangular crops downstream detectors consume.
 */
inline PrefilterResult prefilter_image(const RgbImage& img, const AnatomyMasks& anat,
                                       const PrefilterPreprocessParams& pp = {},
                                       const PrefilterParams& p = {},
                                       const BinaryMask* fov = nullptr,
                                       int fov_threshold = 10) {
    validate(p);
    const GrayImage green = green_plane(img);
    BinaryMask mask = fov ? *fov : fov_mask(green, fov_threshold);
    if (!mask.same_size(img.width, img.height))
        throw std::invalid_argument("prefilter_image: fov mask dimensions do not match image");
    const GrayImage processed = prefilter_preprocess(img, pp, &mask);
    const BinaryMask valid = combined_valid_mask(mask, anat);
    const RegionStatsGrid stats = region_stats(processed, valid, p.region_size);
    const LabelMap labels = label_pixels(processed, stats, valid);

    PrefilterResult result;
    result.candidates = connected_components(labels, p);

    std::vector<std::uint8_t> covered(static_cast<std::size_t>(img.width) * img.height, 0);
    for (const CandidateRegion& c : result.candidates) {
        const TileRect& b = c.bounding_box;
        for (int y = b.y; y < b.y + b.h; ++y)
            for (int x = b.x; x < b.x + b.w; ++x)
                covered[static_cast<std::size_t>(y) * img.width + x] = 1;
    }
    long long area = 0;
    for (std::uint8_t v : covered)
        area += v;
    result.retained_fraction =
        static_cast<double>(area) / (static_cast<double>(img.width) * img.height);
    return result;
}

}  // namespace fundus
