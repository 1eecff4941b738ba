#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "fundus/error.hpp"
#include "fundus/grid.hpp"
#include "fundus/image.hpp"

namespace fundus {

enum class FeatureMode { Inhomogeneity, StdDev, Combined };

enum class FeatureKind { Continuous, Binary };

/// Configuration of phase-1 feature extraction: subimage grid pitch s and
/// the inhomogeneity intensity threshold t.
struct FeatureSpec {
    FeatureMode mode = FeatureMode::Combined;
    int subimage_size = 5;
    int threshold = 10;
};

/// Grid-ordered feature values. Single modes contribute one value per tile;
/// Combined interleaves (std-dev, inhomogeneity-bit) pairs in tile order.
using FeatureVector = std::vector<double>;

/// Tile indices surviving feature selection, in ascending order. An empty
/// list means every tile is in use.
struct FeatureSubset {
    std::vector<int> selected_tiles;

    bool empty() const { return selected_tiles.empty(); }
};

inline const char* to_string(FeatureMode m) {
    switch (m) {
        case FeatureMode::Inhomogeneity: return "inhomogeneity";
        case FeatureMode::StdDev: return "stddev";
        case FeatureMode::Combined: return "combined";
    }
    return "combined";
}

inline FeatureMode parse_feature_mode(const std::string& s) {
    if (s == "inhomogeneity")
        return FeatureMode::Inhomogeneity;
    if (s == "stddev")
        return FeatureMode::StdDev;
    if (s == "combined")
        return FeatureMode::Combined;
    throw parse_error("unknown feature mode: " + s);
}

inline void validate(const FeatureSpec& spec) {
    if (spec.subimage_size < 2)
        throw std::invalid_argument("FeatureSpec: subimage_size must be at least 2");
    if (spec.threshold < 0)
        throw std::invalid_argument("FeatureSpec: threshold must be nonnegative");
}

inline int values_per_tile(FeatureMode m) {
    return m == FeatureMode::Combined ? 2 : 1;
}

/// Per-position likelihood kinds for a vector produced by extract_features
/// on a tile_count-tile grid.
inline std::vector<FeatureKind> feature_kinds(const FeatureSpec& spec, int tile_count) {
    std::vector<FeatureKind> kinds;
    kinds.reserve(static_cast<std::size_t>(tile_count) * values_per_tile(spec.mode));
    for (int i = 0; i < tile_count; ++i) {
        switch (spec.mode) {
            case FeatureMode::Inhomogeneity:
                kinds.push_back(FeatureKind::Binary);
                break;
            case FeatureMode::StdDev:
                kinds.push_back(FeatureKind::Continuous);
                break;
            case FeatureMode::Combined:
                kinds.push_back(FeatureKind::Continuous);
                kinds.push_back(FeatureKind::Binary);
                break;
        }
    }
    return kinds;
}

/// Disjoint subimage grid: ceil(h/s) x ceil(w/s) tiles in row-major order,
/// interior tiles exactly s x s, ragged right/bottom remainders kept.
inline TileGrid split_subimages(const GrayImage& img, int s) {
    if (s < 2)
        throw std::invalid_argument("split_subimages: subimage size must be at least 2");
    return make_tile_grid(img.width, img.height, s);
}

/// Population standard deviation (divide by N) of the tile's intensities.
inline double stddev_feature(const GrayImage& img, const TileRect& r) {
    const long long n = static_cast<long long>(r.w) * r.h;
    double sum = 0.0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x)
            sum += img.at(x, y);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) {
            const double d = img.at(x, y) - mean;
            sq += d * d;
        }
    return std::sqrt(sq / static_cast<double>(n));
}

inline double stddev_feature(const GrayImage& tile) {
    return stddev_feature(tile, TileRect{0, 0, tile.width, tile.height});
}

/// Inhomogeneity bit: accumulate |I(p) - I(first)| over the tile in
/// row-major order, counting only terms exceeding t; the feature is 1.0 if
/// the accumulated sum is positive, else 0.0. Equivalently, 1 iff any pixel
/// differs from the first pixel by more than t.
inline double inhomogeneity_feature(const GrayImage& img, const TileRect& r, int t) {
    const int first = img.at(r.x, r.y);
    long long diff = 0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) {
            if (x == r.x && y == r.y)
                continue;
            const int d = std::abs(static_cast<int>(img.at(x, y)) - first);
            if (d > t)
                diff += d;
        }
    return diff > 0 ? 1.0 : 0.0;
}

inline double inhomogeneity_feature(const GrayImage& tile, int t) {
    return inhomogeneity_feature(tile, TileRect{0, 0, tile.width, tile.height}, t);
}

/// Grid-ordered feature extraction per FeatureSpec. For Combined mode the
/// output length is 2 x tile count; single modes yield one value per tile.
inline FeatureVector extract_features(const GrayImage& img, const FeatureSpec& spec) {
    validate(spec);
    const TileGrid grid = split_subimages(img, spec.subimage_size);
    FeatureVector values;
    values.reserve(grid.tiles.size() * static_cast<std::size_t>(values_per_tile(spec.mode)));
    for (const TileRect& r : grid.tiles) {
        switch (spec.mode) {
            case FeatureMode::Inhomogeneity:
                values.push_back(inhomogeneity_feature(img, r, spec.threshold));
                break;
            case FeatureMode::StdDev:
                values.push_back(stddev_feature(img, r));
                break;
            case FeatureMode::Combined:
                values.push_back(stddev_feature(img, r));
                values.push_back(inhomogeneity_feature(img, r, spec.threshold));
                break;
        }
    }
    return values;
}

}  // namespace fundus
