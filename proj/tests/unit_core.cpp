#include <gtest/gtest.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fundus/fundus.hpp"
#include "oracles.hpp"

using fundus::BinaryMask;
using fundus::GrayImage;
using fundus::RgbImage;

namespace {

RgbImage solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set(x, y, r, g, b);
    return img;
}

BinaryMask full_mask(int w, int h) { return BinaryMask(w, h, true); }

}  // namespace

// --- image ---

TEST(Image, LumaExample) {
    const RgbImage img = solid_rgb(1, 1, 100, 150, 200);
    const GrayImage g = fundus::to_grayscale(img);
    EXPECT_EQ(g.at(0, 0), 141);  // round(.299*100 + .587*150 + .114*200)
}

TEST(Image, LumaBounds) {
    EXPECT_EQ(fundus::to_grayscale(solid_rgb(1, 1, 255, 255, 255)).at(0, 0), 255);
    EXPECT_EQ(fundus::to_grayscale(solid_rgb(1, 1, 0, 0, 0)).at(0, 0), 0);
}

TEST(Image, GreenPlane) {
    const RgbImage img = solid_rgb(3, 2, 10, 77, 200);
    const GrayImage g = fundus::green_plane(img);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x)
            EXPECT_EQ(g.at(x, y), 77);
}

TEST(Image, ZeroDimensionThrows) {
    EXPECT_THROW(GrayImage(0, 4), std::invalid_argument);
    EXPECT_THROW(RgbImage(4, 0), std::invalid_argument);
}

TEST(Image, FovAllDarkMeansAllTrue) {
    const RgbImage img = solid_rgb(6, 6, 5, 5, 5);  // luma 5, nothing above 10
    const BinaryMask m = fundus::fov_mask(fundus::to_grayscale(img), 10);
    EXPECT_EQ(m.count_true(), 36);
}

TEST(Image, FovThresholdIsStrict) {
    RgbImage img = solid_rgb(4, 4, 0, 0, 0);
    img.set(1, 1, 10, 10, 10);  // luma exactly 10: not above the threshold
    EXPECT_EQ(fundus::fov_mask(fundus::to_grayscale(img), 10).count_true(), 16);
    img.set(1, 1, 11, 11, 11);
    const BinaryMask m = fundus::fov_mask(fundus::to_grayscale(img), 10);
    EXPECT_EQ(m.count_true(), 1);
    EXPECT_TRUE(m.at(1, 1));
}

TEST(Image, FovKeepsLargestComponent) {
    RgbImage img = solid_rgb(8, 8, 0, 0, 0);
    // 2-pixel blob top-left, 4-pixel blob bottom-right
    img.set(0, 0, 200, 200, 200);
    img.set(1, 0, 200, 200, 200);
    for (int y = 5; y <= 6; ++y)
        for (int x = 5; x <= 6; ++x)
            img.set(x, y, 200, 200, 200);
    const BinaryMask m = fundus::fov_mask(fundus::to_grayscale(img), 10);
    EXPECT_EQ(m.count_true(), 4);
    EXPECT_FALSE(m.at(0, 0));
    EXPECT_TRUE(m.at(5, 5));
}

// --- netpbm ---

TEST(Netpbm, PgmRoundtripCanonicalHeader) {
    fundus::SplitMix64 rng(11);
    const GrayImage img = oracle::random_image(rng, 7, 5);
    const std::vector<std::uint8_t> bytes = fundus::write_pgm(img);
    const std::string head(bytes.begin(), bytes.begin() + 9);
    EXPECT_EQ(head, "P5\n7 5\n25");  // "P5\n7 5\n255\n" prefix
    const GrayImage back = fundus::read_pgm(bytes);
    EXPECT_EQ(back.data, img.data);
}

TEST(Netpbm, PpmRoundtrip) {
    fundus::SplitMix64 rng(12);
    RgbImage img(4, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x)
            img.set(x, y, static_cast<std::uint8_t>(rng.next_int(0, 255)),
                    static_cast<std::uint8_t>(rng.next_int(0, 255)),
                    static_cast<std::uint8_t>(rng.next_int(0, 255)));
    const RgbImage back = fundus::read_ppm(fundus::write_ppm(img));
    EXPECT_EQ(back.data, img.data);
}

TEST(Netpbm, HeaderComments) {
    const std::string text = "P5 # a comment\n# another\n 2 2 \n255\nABCD";
    const GrayImage img = fundus::read_pgm(std::vector<std::uint8_t>(text.begin(), text.end()));
    EXPECT_EQ(img.width, 2);
    EXPECT_EQ(img.at(0, 0), 'A');
    EXPECT_EQ(img.at(1, 1), 'D');
}

TEST(Netpbm, RejectsNon255Maxval) {
    const std::string text = "P5\n2 2\n65535\nAAAAAAAA";
    EXPECT_THROW(fundus::read_pgm(std::vector<std::uint8_t>(text.begin(), text.end())),
                 fundus::parse_error);
}

TEST(Netpbm, RejectsTruncatedAndTrailing) {
    const std::string shorter = "P5\n2 2\n255\nABC";
    EXPECT_THROW(fundus::read_pgm(std::vector<std::uint8_t>(shorter.begin(), shorter.end())),
                 fundus::parse_error);
    const std::string longer = "P5\n2 2\n255\nABCDE";
    EXPECT_THROW(fundus::read_pgm(std::vector<std::uint8_t>(longer.begin(), longer.end())),
                 fundus::parse_error);
}

TEST(Netpbm, RejectsWrongMagic) {
    const std::string text = "P6\n2 2\n255\nAAAA";
    EXPECT_THROW(fundus::read_pgm(std::vector<std::uint8_t>(text.begin(), text.end())),
                 fundus::parse_error);
}

// --- grid ---

TEST(Grid, Regular90x90s5) {
    const fundus::TileGrid g = fundus::make_tile_grid(90, 90, 5);
    EXPECT_EQ(g.tile_count(), 324);
    for (const auto& t : g.tiles) {
        EXPECT_EQ(t.w, 5);
        EXPECT_EQ(t.h, 5);
    }
}

TEST(Grid, Ragged10x10s4) {
    const fundus::TileGrid g = fundus::make_tile_grid(10, 10, 4);
    ASSERT_EQ(g.tile_count(), 9);
    EXPECT_EQ(g.cols, 3);
    // right edge column: 2 wide x 4 high
    EXPECT_EQ(g.tiles[2].w, 2);
    EXPECT_EQ(g.tiles[2].h, 4);
    // bottom edge row: 4 wide x 2 high
    EXPECT_EQ(g.tiles[6].w, 4);
    EXPECT_EQ(g.tiles[6].h, 2);
    // corner: 2 x 2
    EXPECT_EQ(g.tiles[8].w, 2);
    EXPECT_EQ(g.tiles[8].h, 2);
}

TEST(Grid, TilesPartitionTheImage) {
    fundus::SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = static_cast<int>(rng.next_int(1, 40));
        const int h = static_cast<int>(rng.next_int(1, 40));
        const int s = static_cast<int>(rng.next_int(1, 9));
        const fundus::TileGrid g = fundus::make_tile_grid(w, h, s);
        std::vector<int> paint(static_cast<std::size_t>(w) * h, 0);
        for (const auto& t : g.tiles)
            for (int y = t.y; y < t.y + t.h; ++y)
                for (int x = t.x; x < t.x + t.w; ++x)
                    ++paint[static_cast<std::size_t>(y) * w + x];
        for (int c : paint)
            ASSERT_EQ(c, 1);
    }
}

// --- preprocess: histogram equalization ---

TEST(HistEqualize, MatchesOracle) {
    fundus::SplitMix64 rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = static_cast<int>(rng.next_int(1, 48));
        const int h = static_cast<int>(rng.next_int(1, 48));
        const GrayImage img = oracle::random_image(rng, w, h);
        const BinaryMask mask = oracle::random_mask(rng, w, h);
        const GrayImage got = fundus::hist_equalize(img, mask);
        const GrayImage want = oracle::hist_equalize(img, mask);
        ASSERT_EQ(got.data, want.data) << "trial " << trial;
    }
}

TEST(HistEqualize, SingleOccupiedBinIsIdentity) {
    GrayImage img(5, 5);
    img.data.assign(img.data.size(), 7);
    const GrayImage out = fundus::hist_equalize(img, full_mask(5, 5));
    EXPECT_EQ(out.data, img.data);
}

TEST(HistEqualize, EmptyMaskThrows) {
    const GrayImage img(4, 4);
    EXPECT_THROW(fundus::hist_equalize(img, BinaryMask(4, 4, false)), std::invalid_argument);
}

TEST(HistEqualize, OutsideMaskPassthrough) {
    fundus::SplitMix64 rng(102);
    const GrayImage img = oracle::random_image(rng, 12, 9);
    BinaryMask mask = full_mask(12, 9);
    mask.set(3, 4, false);
    mask.set(11, 8, false);
    const GrayImage out = fundus::hist_equalize(img, mask);
    EXPECT_EQ(out.at(3, 4), img.at(3, 4));
    EXPECT_EQ(out.at(11, 8), img.at(11, 8));
}

// --- preprocess: AHE ---

TEST(Ahe, DegeneratesToGlobalEqualization) {
    fundus::SplitMix64 rng(103);
    fundus::AheParams p;
    p.tile_grid = 1;
    p.clip_fraction = 1.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int w = static_cast<int>(rng.next_int(8, 40));
        const int h = static_cast<int>(rng.next_int(8, 40));
        const GrayImage img = oracle::random_image(rng, w, h);
        const BinaryMask mask = oracle::random_mask(rng, w, h);
        const GrayImage got = fundus::ahe(img, mask, p);
        const GrayImage want = fundus::hist_equalize(img, mask);
        ASSERT_EQ(got.data, want.data) << "trial " << trial;
    }
}

TEST(Ahe, DeterministicAndPassthrough) {
    fundus::SplitMix64 rng(104);
    const GrayImage img = oracle::random_image(rng, 40, 32);
    BinaryMask mask = full_mask(40, 32);
    mask.set(0, 0, false);
    const GrayImage a = fundus::ahe(img, mask, {});
    const GrayImage b = fundus::ahe(img, mask, {});
    EXPECT_EQ(a.data, b.data);
    EXPECT_EQ(a.at(0, 0), img.at(0, 0));
}

TEST(Ahe, ImageSmallerThanGridThrows) {
    const GrayImage img(7, 7);
    EXPECT_THROW(fundus::ahe(img, full_mask(7, 7), {}), std::invalid_argument);
}

TEST(Ahe, RejectsBadParams) {
    const GrayImage img(16, 16);
    fundus::AheParams p;
    p.tile_grid = 0;
    EXPECT_THROW(fundus::ahe(img, full_mask(16, 16), p), std::invalid_argument);
    p.tile_grid = 2;
    p.clip_fraction = 0.0;
    EXPECT_THROW(fundus::ahe(img, full_mask(16, 16), p), std::invalid_argument);
    p.clip_fraction = 1.5;
    EXPECT_THROW(fundus::ahe(img, full_mask(16, 16), p), std::invalid_argument);
}

// --- preprocess: median filter ---

TEST(Median, MatchesOracle) {
    fundus::SplitMix64 rng(105);
    const int ks[] = {3, 5, 7};
    for (int trial = 0; trial < 60; ++trial) {
        const int w = static_cast<int>(rng.next_int(1, 32));
        const int h = static_cast<int>(rng.next_int(1, 32));
        const int k = ks[rng.next_int(0, 2)];
        const GrayImage img = oracle::random_image(rng, w, h);
        const GrayImage got = fundus::median_filter(img, k);
        const GrayImage want = oracle::median_filter(img, k);
        ASSERT_EQ(got.data, want.data) << "trial " << trial << " k " << k;
    }
}

TEST(Median, RemovesIsolatedBrightPixel) {
    GrayImage img(9, 9);
    img.data.assign(img.data.size(), 100);
    img.at(4, 4) = 255;
    const GrayImage out = fundus::median_filter(img, 3);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x)
            ASSERT_EQ(out.at(x, y), 100);
}

TEST(Median, RejectsEvenOrTinyKernel) {
    const GrayImage img(5, 5);
    EXPECT_THROW(fundus::median_filter(img, 4), std::invalid_argument);
    EXPECT_THROW(fundus::median_filter(img, 1), std::invalid_argument);
}

// --- preprocess: shade correction and unsharp masking ---

TEST(Shade, UniformImageMapsTo128) {
    GrayImage img(6, 4);
    img.data.assign(img.data.size(), 173);
    const GrayImage out = fundus::shade_correct(img, img);
    for (auto v : out.data)
        ASSERT_EQ(v, 128);
}

TEST(Shade, Clamps) {
    GrayImage img(1, 1), bg(1, 1);
    img.at(0, 0) = 255;
    bg.at(0, 0) = 0;
    EXPECT_EQ(fundus::shade_correct(img, bg).at(0, 0), 255);
    img.at(0, 0) = 0;
    bg.at(0, 0) = 255;
    EXPECT_EQ(fundus::shade_correct(img, bg).at(0, 0), 0);
}

TEST(Unsharp, ZeroAmountIsIdentity) {
    fundus::SplitMix64 rng(106);
    const GrayImage img = oracle::random_image(rng, 17, 13);
    const GrayImage out = fundus::unsharp_mask(img, 0.0, 2.0);
    EXPECT_EQ(out.data, img.data);
}

TEST(Unsharp, IncreasesEdgeContrast) {
    GrayImage img(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            img.at(x, y) = x < 10 ? 80 : 160;
    const GrayImage out = fundus::unsharp_mask(img, 1.0, 2.0);
    EXPECT_LT(out.at(9, 10), 80);    // dark side overshoots darker
    EXPECT_GT(out.at(10, 10), 160);  // bright side overshoots brighter
}

TEST(Unsharp, RejectsBadParams) {
    const GrayImage img(8, 8);
    EXPECT_THROW(fundus::unsharp_mask(img, -0.5, 2.0), std::invalid_argument);
    EXPECT_THROW(fundus::unsharp_mask(img, 1.0, 0.0), std::invalid_argument);
}

// --- preprocess: area resize ---

TEST(Resize, SameSizeIsIdentity) {
    fundus::SplitMix64 rng(107);
    const GrayImage img = oracle::random_image(rng, 23, 17);
    const GrayImage out = fundus::resize_area(img, 23, 17);
    EXPECT_EQ(out.data, img.data);
}

TEST(Resize, IntegerBlockAverageExact) {
    fundus::SplitMix64 rng(108);
    const GrayImage img = oracle::random_image(rng, 16, 16);
    const GrayImage out = fundus::resize_area(img, 2, 2);
    for (int oy = 0; oy < 2; ++oy)
        for (int ox = 0; ox < 2; ++ox) {
            long sum = 0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    sum += img.at(ox * 8 + x, oy * 8 + y);
            const long expect = std::lround(static_cast<double>(sum) / 64.0);
            ASSERT_EQ(out.at(ox, oy), expect);
        }
}

TEST(Resize, MatchesOracle) {
    fundus::SplitMix64 rng(109);
    for (int trial = 0; trial < 40; ++trial) {
        const int w = static_cast<int>(rng.next_int(1, 24));
        const int h = static_cast<int>(rng.next_int(1, 24));
        const int ow = static_cast<int>(rng.next_int(1, 24));
        const int oh = static_cast<int>(rng.next_int(1, 24));
        const GrayImage img = oracle::random_image(rng, w, h);
        const GrayImage got = fundus::resize_area(img, ow, oh);
        const GrayImage want = oracle::resize_area(img, ow, oh);
        ASSERT_EQ(got.data, want.data)
            << "trial " << trial << ": " << w << "x" << h << " -> " << ow << "x" << oh;
    }
}

// --- preprocess: composed chains ---

TEST(Prescreen, OutputIs90x90) {
    fundus::SynthSpec spec;
    spec.seed = 5;
    spec.width = 130;
    spec.height = 97;
    const auto [img, truth] = fundus::generate(spec);
    const GrayImage out = fundus::prescreen_preprocess(img);
    EXPECT_EQ(out.width, 90);
    EXPECT_EQ(out.height, 90);
}

TEST(PrefilterChain, CompactDipSurvivesWithMatchedDenoiser) {
    // A 5x5 dip survives shade correction and denoising when the
    // denoising median window (5) is no larger than the dip; the default
    // 13x13 window would treat a 25-pixel minority as noise and erase it.
    RgbImage img = solid_rgb(64, 64, 60, 140, 40);
    for (int y = 30; y < 35; ++y)
        for (int x = 30; x < 35; ++x)
            img.set(x, y, 60, 50, 40);
    fundus::PrefilterPreprocessParams p;
    p.denoise_median = 5;
    const GrayImage out = fundus::prefilter_preprocess(img, p);
    EXPECT_LT(out.at(32, 32) + 40, out.at(10, 10));
}
