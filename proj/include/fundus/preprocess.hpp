#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fundus/image.hpp"

namespace fundus {

/// Contrast-limited adaptive histogram equalization parameters. The image is
/// split into tile_grid x tile_grid tiles; each tile histogram is clipped at
/// clip_fraction of the tile's in-mask pixel count.
struct AheParams {
    int tile_grid = 8;
    double clip_fraction = 0.01;
};

/// Parameters of the candidate-extraction preprocessing chain. The
/// background estimate uses a strong median of size background_median, the
/// denoising pass a median of size denoise_median; both must be odd.
struct PrefilterPreprocessParams {
    int background_median = 25;
    int denoise_median = 13;
    double unsharp_amount = 1.0;
    double unsharp_radius = 2.0;
};

/// Side length of the pre-screening working image.
inline constexpr int kPrescreenSize = 90;

namespace detail {

/// Cumulative-histogram equalization mapping over a (possibly fractional)
/// 256-bin histogram: v -> round((cdf(v) - cdf_min) / (total - cdf_min) * 255).
/// A histogram with at most one occupied bin maps to the identity.
inline std::array<std::uint8_t, 256> equalization_map(const std::array<double, 256>& hist,
                                                      double total) {
    std::array<std::uint8_t, 256> map{};
    int first_occupied = -1;
    int occupied = 0;
    for (int v = 0; v < 256; ++v) {
        if (hist[static_cast<std::size_t>(v)] > 0.0) {
            ++occupied;
            if (first_occupied < 0)
                first_occupied = v;
        }
    }
    const double cdf_min = first_occupied >= 0 ? hist[static_cast<std::size_t>(first_occupied)] : 0.0;
    const double denom = total - cdf_min;
    if (occupied <= 1 || denom <= 0.0) {
        for (int v = 0; v < 256; ++v)
            map[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
        return map;
    }
    double cdf = 0.0;
    for (int v = 0; v < 256; ++v) {
        cdf += hist[static_cast<std::size_t>(v)];
        long out = std::lround((cdf - cdf_min) / denom * 255.0);
        map[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(std::clamp(out, 0L, 255L));
    }
    return map;
}

inline void require_same_size(const GrayImage& img, const BinaryMask& mask, const char* op) {
    if (!mask.same_size(img.width, img.height))
        throw std::invalid_argument(std::string(op) + ": mask dimensions do not match image");
}

/// Separable Gaussian blur, kernel truncated at ceil(3*sigma) per axis,
/// normalized to unit sum, replicate borders. Kept in double precision.
inline std::vector<double> gaussian_blur(const GrayImage& img, double sigma) {
    const int w = img.width;
    const int h = img.height;
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (double& v : kernel)
        v /= sum;

    std::vector<double> tmp(img.data.size());
    std::vector<double> out(img.data.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                int sx = std::clamp(x + i, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(i + r)] * img.at(sx, y);
            }
            tmp[img.index(x, y)] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                int sy = std::clamp(y + i, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(i + r)] * tmp[img.index(x, sy)];
            }
            out[img.index(x, y)] = acc;
        }
    }
    return out;
}

}  // namespace detail

/**
 * @brief Global histogram equalization over in-mask pixels.
 *
 * out = round((cdf(v) - cdf_min) / (N - cdf_min) * 255) for in-mask pixels;
 * out-of-mask pixels pass through unchanged. A single-valued masked region
 * equalizes to itself (identity), not to white.
 */
inline GrayImage hist_equalize(const GrayImage& img, const BinaryMask& mask) {
    detail::require_same_size(img, mask, "hist_equalize");
    std::array<double, 256> hist{};
    std::size_t count = 0;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (mask.data[i]) {
            hist[img.data[i]] += 1.0;
            ++count;
        }
    }
    if (count == 0)
        throw std::invalid_argument("hist_equalize: no pixels in field of view");
    const auto map = detail::equalization_map(hist, static_cast<double>(count));
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = mask.data[i] ? map[img.data[i]] : img.data[i];
    return out;
}

/**
 * @brief Contrast-limited adaptive histogram equalization.
 *
 * Per-tile histograms (in-mask pixels only) are clipped at
 * clip_fraction * tile mask count with the excess redistributed uniformly
 * over all 256 bins; tile mappings are computed as in hist_equalize and
 * each pixel blends the four surrounding tile mappings bilinearly (edge
 * tiles replicate). With tile_grid=1 and clip_fraction=1 this degenerates
 * to hist_equalize exactly.
 */
inline GrayImage ahe(const GrayImage& img, const BinaryMask& mask, const AheParams& p = {}) {
    detail::require_same_size(img, mask, "ahe");
    if (p.tile_grid < 1)
        throw std::invalid_argument("ahe: tile_grid must be at least 1");
    if (!(p.clip_fraction > 0.0) || p.clip_fraction > 1.0)
        throw std::invalid_argument("ahe: clip_fraction must be in (0,1]");
    const int w = img.width;
    const int h = img.height;
    const int g = p.tile_grid;
    if (w < g || h < g)
        throw std::invalid_argument("ahe: image smaller than tile grid");
    if (mask.count_true() == 0)
        throw std::invalid_argument("ahe: no pixels in field of view");

    auto tile_lo = [](int j, int extent, int grid) {
        return static_cast<int>(static_cast<long long>(j) * extent / grid);
    };

    std::vector<std::array<std::uint8_t, 256>> maps(static_cast<std::size_t>(g) * g);
    std::vector<double> centers_x(static_cast<std::size_t>(g));
    std::vector<double> centers_y(static_cast<std::size_t>(g));
    for (int tj = 0; tj < g; ++tj) {
        int x0 = tile_lo(tj, w, g);
        int x1 = tile_lo(tj + 1, w, g);
        centers_x[static_cast<std::size_t>(tj)] = x0 + (x1 - x0 - 1) / 2.0;
    }
    for (int ti = 0; ti < g; ++ti) {
        int y0 = tile_lo(ti, h, g);
        int y1 = tile_lo(ti + 1, h, g);
        centers_y[static_cast<std::size_t>(ti)] = y0 + (y1 - y0 - 1) / 2.0;
    }

    for (int ti = 0; ti < g; ++ti) {
        const int y0 = tile_lo(ti, h, g);
        const int y1 = tile_lo(ti + 1, h, g);
        for (int tj = 0; tj < g; ++tj) {
            const int x0 = tile_lo(tj, w, g);
            const int x1 = tile_lo(tj + 1, w, g);
            std::array<double, 256> hist{};
            long count = 0;
            int occupied = 0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    if (!mask.at(x, y))
                        continue;
                    if (hist[img.at(x, y)] == 0.0)
                        ++occupied;
                    hist[img.at(x, y)] += 1.0;
                    ++count;
                }
            }
            auto& map = maps[static_cast<std::size_t>(ti) * g + tj];
            if (count == 0 || occupied <= 1) {
                for (int v = 0; v < 256; ++v)
                    map[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
                continue;
            }
            const double clip = p.clip_fraction * static_cast<double>(count);
            double excess = 0.0;
            for (double b : hist)
                excess += std::max(0.0, b - clip);
            double total = 0.0;
            if (excess > 0.0) {
                const double share = excess / 256.0;
                for (double& b : hist)
                    b = std::min(b, clip) + share;
            }
            for (double b : hist)
                total += b;
            map = detail::equalization_map(hist, total);
        }
    }

    // Per-axis interpolation lookup: surrounding tile pair and blend weight.
    struct Axis {
        int lo, hi;
        double t;
    };
    auto build_axis = [g](int extent, const std::vector<double>& centers) {
        std::vector<Axis> axis(static_cast<std::size_t>(extent));
        int j = 0;
        for (int x = 0; x < extent; ++x) {
            double fx = static_cast<double>(x);
            if (fx <= centers.front()) {
                axis[static_cast<std::size_t>(x)] = {0, 0, 0.0};
            } else if (fx >= centers.back()) {
                axis[static_cast<std::size_t>(x)] = {g - 1, g - 1, 0.0};
            } else {
                while (j + 1 < g && centers[static_cast<std::size_t>(j + 1)] < fx)
                    ++j;
                double span = centers[static_cast<std::size_t>(j + 1)] - centers[static_cast<std::size_t>(j)];
                axis[static_cast<std::size_t>(x)] = {j, j + 1, (fx - centers[static_cast<std::size_t>(j)]) / span};
            }
        }
        return axis;
    };
    const auto ax = build_axis(w, centers_x);
    const auto ay = build_axis(h, centers_y);

    GrayImage out(img.width, img.height);
    for (int y = 0; y < h; ++y) {
        const Axis& ry = ay[static_cast<std::size_t>(y)];
        for (int x = 0; x < w; ++x) {
            const std::size_t i = img.index(x, y);
            if (!mask.data[i]) {
                out.data[i] = img.data[i];
                continue;
            }
            const Axis& rx = ax[static_cast<std::size_t>(x)];
            const std::uint8_t v = img.data[i];
            const double m00 = maps[static_cast<std::size_t>(ry.lo) * g + rx.lo][v];
            const double m01 = maps[static_cast<std::size_t>(ry.lo) * g + rx.hi][v];
            const double m10 = maps[static_cast<std::size_t>(ry.hi) * g + rx.lo][v];
            const double m11 = maps[static_cast<std::size_t>(ry.hi) * g + rx.hi][v];
            const double blend = (1.0 - ry.t) * ((1.0 - rx.t) * m00 + rx.t * m01) +
                                 ry.t * ((1.0 - rx.t) * m10 + rx.t * m11);
            out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(blend), 0L, 255L));
        }
    }
    return out;
}

/**
 * @brief k x k median filter with replicate-border padding.
 *
 * Bit-identical to the naive sort-the-neighborhood definition; implemented
 * with a sliding 256-bin histogram.
 */
inline GrayImage median_filter(const GrayImage& img, int k) {
    if (k % 2 == 0)
        throw std::invalid_argument("median_filter: window size must be odd");
    if (k < 3)
        throw std::invalid_argument("median_filter: window size must be at least 3");
    const int w = img.width;
    const int h = img.height;
    const int r = k / 2;
    const int target = (k * k) / 2 + 1;  // 1-indexed rank of the median
    GrayImage out(w, h);

    std::array<int, 256> hist{};
    auto add_column = [&](int sx, int y, int sign) {
        for (int dy = -r; dy <= r; ++dy) {
            int sy = std::clamp(y + dy, 0, h - 1);
            hist[img.at(sx, sy)] += sign;
        }
    };

    for (int y = 0; y < h; ++y) {
        hist.fill(0);
        for (int dx = -r; dx <= r; ++dx)
            add_column(std::clamp(dx, 0, w - 1), y, +1);
        for (int x = 0; x < w; ++x) {
            if (x > 0) {
                add_column(std::clamp(x - 1 - r, 0, w - 1), y, -1);
                add_column(std::clamp(x + r, 0, w - 1), y, +1);
            }
            int cum = 0;
            for (int v = 0; v < 256; ++v) {
                cum += hist[static_cast<std::size_t>(v)];
                if (cum >= target) {
                    out.at(x, y) = static_cast<std::uint8_t>(v);
                    break;
                }
            }
        }
    }
    return out;
}

/// Shade correction re-centered at mid-gray:
/// out = clamp(I - background + 128, 0, 255). Both darker-than-background
/// and brighter-than-background deviations survive the subtraction.
inline GrayImage shade_correct(const GrayImage& img, const GrayImage& background) {
    if (!background.same_size(img.width, img.height))
        throw std::invalid_argument("shade_correct: dimension mismatch");
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        int v = static_cast<int>(img.data[i]) - static_cast<int>(background.data[i]) + 128;
        out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    return out;
}

/// Unsharp masking: out = clamp(round(I + amount * (I - G_sigma(I)))).
inline GrayImage unsharp_mask(const GrayImage& img, double amount, double radius) {
    if (amount < 0.0)
        throw std::invalid_argument("unsharp_mask: amount must be nonnegative");
    if (!(radius > 0.0))
        throw std::invalid_argument("unsharp_mask: radius must be positive");
    const std::vector<double> blurred = detail::gaussian_blur(img, radius);
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = img.data[i] + amount * (img.data[i] - blurred[i]);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return out;
}

/// Area-average (box) resampling. Each output pixel is the area-weighted
/// mean of the source rectangle it covers, rounded; a same-size call is the
/// identity.
inline GrayImage resize_area(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1)
        throw std::invalid_argument("resize_area: output dimensions must be at least 1x1");
    const int sw = img.width;
    const int sh = img.height;
    GrayImage out(out_w, out_h);

    // Box overlap in integer units of 1/out pixels: output cell o covers
    // [o*src, (o+1)*src], source pixel i covers [i*out, (i+1)*out]. Weights
    // and the per-axis cell total (always src) are exact, so the rounded
    // mean is the true rational area average on every platform.
    struct Span {
        int begin = 0;
        std::vector<long long> weights;
    };
    auto build_spans = [](int src, int dst) {
        std::vector<Span> spans(static_cast<std::size_t>(dst));
        for (int o = 0; o < dst; ++o) {
            const long long lo = static_cast<long long>(o) * src;
            const long long hi = lo + src;
            Span s;
            s.begin = static_cast<int>(lo / dst);
            for (int i = s.begin; i < src && static_cast<long long>(i) * dst < hi; ++i) {
                const long long cell_lo = static_cast<long long>(i) * dst;
                s.weights.push_back(std::min(hi, cell_lo + dst) - std::max(lo, cell_lo));
            }
            spans[static_cast<std::size_t>(o)] = std::move(s);
        }
        return spans;
    };
    const auto xs = build_spans(sw, out_w);
    const auto ys = build_spans(sh, out_h);
    const long long den = static_cast<long long>(sw) * sh;

    for (int oy = 0; oy < out_h; ++oy) {
        const Span& sy = ys[static_cast<std::size_t>(oy)];
        for (int ox = 0; ox < out_w; ++ox) {
            const Span& sx = xs[static_cast<std::size_t>(ox)];
            long long acc = 0;
            for (std::size_t iy = 0; iy < sy.weights.size(); ++iy) {
                const int y = sy.begin + static_cast<int>(iy);
                long long row = 0;
                for (std::size_t ix = 0; ix < sx.weights.size(); ++ix) {
                    const int x = sx.begin + static_cast<int>(ix);
                    row += sx.weights[ix] * img.at(x, y);
                }
                acc += sy.weights[iy] * row;
            }
            // round half up; acc/den is the exact mean and acc <= 255*den
            out.at(ox, oy) = static_cast<std::uint8_t>((2 * acc + den) / (2 * den));
        }
    }
    return out;
}

/**
 * @brief Whole-image conditioning for the pre-screening classifier:
 * grayscale -> field-of-view mask -> adaptive equalization -> 90x90 rescale.
 *
 * Pass a mask to reuse an externally supplied field of view; otherwise one
 * is derived from the grayscale image at fov_threshold.
 */
inline GrayImage prescreen_preprocess(const RgbImage& img, const AheParams& p = {},
                                      int fov_threshold = 10,
                                      const BinaryMask* fov = nullptr) {
    GrayImage gray = to_grayscale(img);
    BinaryMask mask = fov ? *fov : fov_mask(gray, fov_threshold);
    GrayImage eq = ahe(gray, mask, p);
    return resize_area(eq, kPrescreenSize, kPrescreenSize);
}

/**
 * @brief Conditioning chain for candidate-region extraction:
 * green plane -> vignette-reducing equalization -> background estimate by
 * strong median -> shade correction -> denoising median -> unsharp masking.
 */
inline GrayImage prefilter_preprocess(const RgbImage& img,
                                      const PrefilterPreprocessParams& p = {},
                                      const BinaryMask* fov = nullptr,
                                      int fov_threshold = 10) {
    GrayImage green = green_plane(img);
    BinaryMask mask = fov ? *fov : fov_mask(green, fov_threshold);
    GrayImage eq = hist_equalize(green, mask);
    GrayImage background = median_filter(eq, p.background_median);
    GrayImage corrected = shade_correct(eq, background);
    GrayImage denoised = median_filter(corrected, p.denoise_median);
    return unsharp_mask(denoised, p.unsharp_amount, p.unsharp_radius);
}

}  // namespace fundus
