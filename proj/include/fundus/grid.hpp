#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace fundus {

struct TileRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

/// Row-major partition of an image into disjoint tiles. Interior tiles are
/// s x s; right and bottom edge tiles keep the ragged remainder.
struct TileGrid {
    int cols = 0;
    int rows = 0;
    std::vector<TileRect> tiles;

    int tile_count() const { return static_cast<int>(tiles.size()); }
};

inline TileGrid make_tile_grid(int width, int height, int s) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("make_tile_grid: empty image");
    if (s < 1)
        throw std::invalid_argument("make_tile_grid: tile size must be positive");
    TileGrid g;
    g.cols = (width + s - 1) / s;
    g.rows = (height + s - 1) / s;
    g.tiles.reserve(static_cast<std::size_t>(g.cols) * g.rows);
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            TileRect t;
            t.x = c * s;
            t.y = r * s;
            t.w = std::min(s, width - t.x);
            t.h = std::min(s, height - t.y);
            g.tiles.push_back(t);
        }
    }
    return g;
}

}  // namespace fundus
