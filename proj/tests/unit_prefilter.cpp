#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fundus/fundus.hpp"
#include "oracles.hpp"

using fundus::BinaryMask;
using fundus::GrayImage;
using fundus::LabelMap;
using fundus::PixelLabel;
using fundus::PrefilterParams;

namespace {

LabelMap empty_labels(int w, int h) {
    LabelMap m;
    m.width = w;
    m.height = h;
    m.data.assign(static_cast<std::size_t>(w) * h, PixelLabel::Unlabeled);
    return m;
}

bool same_candidates(const std::vector<fundus::CandidateRegion>& a,
                     const std::vector<fundus::CandidateRegion>& b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].label != b[i].label || a[i].pixels != b[i].pixels ||
            a[i].source_region_indices != b[i].source_region_indices)
            return false;
        const auto& ra = a[i].bounding_box;
        const auto& rb = b[i].bounding_box;
        if (ra.x != rb.x || ra.y != rb.y || ra.w != rb.w || ra.h != rb.h)
            return false;
    }
    return true;
}

}  // namespace

// --- region statistics and labeling ---

TEST(Regions, StatsAndHighLabelExample) {
    GrayImage img(3, 3);
    img.data.assign(9, 100);
    img.at(1, 1) = 190;
    const BinaryMask valid(3, 3, true);
    const auto stats = fundus::region_stats(img, valid, 3);
    ASSERT_EQ(stats.stats.size(), 1u);
    EXPECT_DOUBLE_EQ(stats.stats[0].mean, 110.0);
    EXPECT_NEAR(stats.stats[0].sigma, std::sqrt(800.0), 1e-12);
    const LabelMap labels = fundus::label_pixels(img, stats, valid);
    EXPECT_EQ(labels.at(1, 1), PixelLabel::High);  // 190 - 110 = 80 > 28.28
    EXPECT_EQ(labels.at(0, 0), PixelLabel::Unlabeled);  // |100 - 110| = 10 < sigma
}

TEST(Regions, LabelingIsStrict) {
    // two-valued region: each pixel sits exactly at mean +/- sigma
    GrayImage img(2, 2);
    img.at(0, 0) = 90;
    img.at(1, 0) = 110;
    img.at(0, 1) = 90;
    img.at(1, 1) = 110;
    const BinaryMask valid(2, 2, true);
    const auto stats = fundus::region_stats(img, valid, 2);
    EXPECT_DOUBLE_EQ(stats.stats[0].mean, 100.0);
    EXPECT_DOUBLE_EQ(stats.stats[0].sigma, 10.0);
    const LabelMap labels = fundus::label_pixels(img, stats, valid);
    for (auto l : labels.data)
        EXPECT_EQ(l, PixelLabel::Unlabeled);
}

TEST(Regions, InvalidPixelsExcludedFromStats) {
    GrayImage img(2, 2);
    img.at(0, 0) = 10;
    img.at(1, 0) = 20;
    img.at(0, 1) = 200;  // masked out
    img.at(1, 1) = 30;
    BinaryMask valid(2, 2, true);
    valid.set(0, 1, false);
    const auto stats = fundus::region_stats(img, valid, 2);
    EXPECT_DOUBLE_EQ(stats.stats[0].mean, 20.0);
    EXPECT_EQ(stats.stats[0].valid_pixels, 3);
    const LabelMap labels = fundus::label_pixels(img, stats, valid);
    EXPECT_EQ(labels.at(0, 1), PixelLabel::Unlabeled);  // invalid pixels stay unlabeled
}

TEST(Regions, CombinedValidMaskSubtractsAnatomy) {
    BinaryMask fov(4, 4, true);
    fundus::AnatomyMasks anat;
    EXPECT_EQ(fundus::combined_valid_mask(fov, anat).count_true(), 16);  // absent = all-false
    BinaryMask vessels(4, 4, false);
    vessels.set(1, 1, true);
    vessels.set(2, 2, true);
    anat.vessels = vessels;
    const BinaryMask combined = fundus::combined_valid_mask(fov, anat);
    EXPECT_EQ(combined.count_true(), 14);
    EXPECT_FALSE(combined.at(1, 1));
}

TEST(Regions, CombinedValidMaskRejectsSizeMismatch) {
    BinaryMask fov(4, 4, true);
    fundus::AnatomyMasks anat;
    anat.macula = BinaryMask(3, 4, false);
    EXPECT_THROW(fundus::combined_valid_mask(fov, anat), std::invalid_argument);
}

// --- connected components ---

TEST(Components, MatchesUnionFindOracle) {
    fundus::SplitMix64 rng(301);
    for (int trial = 0; trial < 120; ++trial) {
        const int w = static_cast<int>(rng.next_int(1, 48));
        const int h = static_cast<int>(rng.next_int(1, 48));
        PrefilterParams p;
        p.region_size = static_cast<int>(rng.next_int(2, 9));
        p.min_cardinality = static_cast<int>(rng.next_int(1, 20));
        p.connectivity = rng.next_double() < 0.5 ? 4 : 8;
        const LabelMap labels = oracle::random_labels(rng, w, h, p.region_size);
        const auto got = fundus::connected_components(labels, p);
        const auto want = oracle::connected_components(labels, p);
        ASSERT_TRUE(same_candidates(got, want)) << "trial " << trial;
    }
}

TEST(Components, CardinalityBoundary) {
    LabelMap labels = empty_labels(10, 10);
    for (int i = 0; i < 7; ++i)  // 7-pixel horizontal run
        labels.data[static_cast<std::size_t>(3) * 10 + 1 + i] = PixelLabel::High;
    PrefilterParams p;
    p.region_size = 5;
    p.connectivity = 8;
    p.min_cardinality = 7;
    EXPECT_EQ(fundus::connected_components(labels, p).size(), 1u);
    p.min_cardinality = 8;
    EXPECT_TRUE(fundus::connected_components(labels, p).empty());
}

TEST(Components, ConnectivityFourSplitsDiagonals) {
    LabelMap labels = empty_labels(4, 4);
    labels.data[0] = PixelLabel::Low;          // (0,0)
    labels.data[1 * 4 + 1] = PixelLabel::Low;  // (1,1)
    PrefilterParams p;
    p.region_size = 2;
    p.min_cardinality = 1;
    p.connectivity = 8;
    EXPECT_EQ(fundus::connected_components(labels, p).size(), 1u);
    p.connectivity = 4;
    EXPECT_EQ(fundus::connected_components(labels, p).size(), 2u);
}

TEST(Components, HighAndLowNeverMerge) {
    LabelMap labels = empty_labels(4, 1);
    labels.data[0] = PixelLabel::High;
    labels.data[1] = PixelLabel::Low;
    labels.data[2] = PixelLabel::Low;
    PrefilterParams p;
    p.region_size = 2;
    p.min_cardinality = 1;
    const auto got = fundus::connected_components(labels, p);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].label, PixelLabel::High);
    EXPECT_EQ(got[0].pixels.size(), 1u);
    EXPECT_EQ(got[1].label, PixelLabel::Low);
    EXPECT_EQ(got[1].pixels.size(), 2u);
}

TEST(Components, ComponentsCrossRegionBorders) {
    LabelMap labels = empty_labels(10, 4);
    for (int x = 3; x <= 6; ++x)  // straddles the region border at x = 5
        labels.data[static_cast<std::size_t>(1) * 10 + x] = PixelLabel::High;
    PrefilterParams p;
    p.region_size = 5;
    p.min_cardinality = 1;
    const auto got = fundus::connected_components(labels, p);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].source_region_indices, (std::vector<int>{0, 1}));
    EXPECT_EQ(got[0].bounding_box.x, 3);
    EXPECT_EQ(got[0].bounding_box.w, 4);
}

TEST(Components, MonotoneInCardinality) {
    fundus::SplitMix64 rng(302);
    for (int trial = 0; trial < 10; ++trial) {
        const LabelMap labels = oracle::random_labels(rng, 60, 60, 5);
        std::size_t prev = SIZE_MAX;
        for (int n : {1, 10, 30, 100}) {
            PrefilterParams p;
            p.region_size = 5;
            p.min_cardinality = n;
            const std::size_t count = fundus::connected_components(labels, p).size();
            ASSERT_LE(count, prev);
            prev = count;
        }
    }
}

// --- whole-image prefilter ---

TEST(Prefilter, LesionedSyntheticYieldsIntersectingCandidate) {
    fundus::SynthSpec spec;
    spec.seed = 40;
    spec.width = 256;
    spec.height = 256;
    spec.severity = fundus::Severity::Lesioned;
    spec.lesion_count = 1;
    const auto [img, truth] = fundus::generate(spec);
    ASSERT_EQ(truth.lesion_masks.size(), 1u);
    fundus::PrefilterParams p;
    p.region_size = 75;
    p.min_cardinality = 30;
    const auto res = fundus::prefilter_image(img, {}, {}, p);
    bool hit = false;
    for (const auto& c : res.candidates)
        hit = hit || fundus::pixels_intersect_mask(c.pixels, truth.lesion_masks[0]);
    EXPECT_TRUE(hit);
    EXPECT_GE(res.retained_fraction, 0.0);
    EXPECT_LE(res.retained_fraction, 1.0);
}

TEST(Prefilter, RetainedFractionIsUnionOfBoundingBoxes) {
    fundus::SynthSpec spec;
    spec.seed = 41;
    spec.width = 256;
    spec.height = 256;
    spec.severity = fundus::Severity::Lesioned;
    spec.lesion_count = 2;
    const auto [img, truth] = fundus::generate(spec);
    const auto res = fundus::prefilter_image(img, {});
    std::vector<std::uint8_t> covered(256 * 256, 0);
    for (const auto& c : res.candidates) {
        const auto& b = c.bounding_box;
        for (int y = b.y; y < b.y + b.h; ++y)
            for (int x = b.x; x < b.x + b.w; ++x)
                covered[static_cast<std::size_t>(y) * 256 + x] = 1;
    }
    long area = 0;
    for (auto v : covered)
        area += v;
    EXPECT_DOUBLE_EQ(res.retained_fraction, static_cast<double>(area) / (256.0 * 256.0));
}

TEST(Prefilter, ValidatesParams) {
    PrefilterParams p;
    p.connectivity = 6;
    EXPECT_THROW(fundus::validate(p), std::invalid_argument);
    p.connectivity = 8;
    p.min_cardinality = 0;
    EXPECT_THROW(fundus::validate(p), std::invalid_argument);
    p.min_cardinality = 30;
    p.region_size = 1;
    EXPECT_THROW(fundus::validate(p), std::invalid_argument);
}

// --- evaluation ---

TEST(Eval, PerfectConfusion) {
    fundus::ConfusionCounts c;
    c.tp = 5;
    c.tn = 5;
    const fundus::Metrics m = fundus::metrics(c);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
    ASSERT_TRUE(m.sensitivity);
    EXPECT_DOUBLE_EQ(*m.sensitivity, 1.0);
    ASSERT_TRUE(m.specificity);
    EXPECT_DOUBLE_EQ(*m.specificity, 1.0);
}

TEST(Eval, UndefinedMetricsAreAbsentNotZero) {
    fundus::ConfusionCounts c;
    c.tn = 3;
    c.fp = 1;
    const fundus::Metrics m = fundus::metrics(c);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
    EXPECT_FALSE(m.sensitivity);  // no positives in truth
    ASSERT_TRUE(m.specificity);
    EXPECT_DOUBLE_EQ(*m.specificity, 0.75);
}

TEST(Eval, EmptyOrNegativeCountsThrow) {
    EXPECT_THROW(fundus::metrics(fundus::ConfusionCounts{}), std::invalid_argument);
    fundus::ConfusionCounts c;
    c.tp = -1;
    c.tn = 2;
    EXPECT_THROW(fundus::metrics(c), std::invalid_argument);
}

TEST(Eval, MisclassifiedIsExclusiveOr) {
    fundus::PrefilterOutcome o;
    o.has_lesion_truth = true;
    o.found_any_candidate = true;
    EXPECT_FALSE(fundus::image_misclassified(o));
    o.found_any_candidate = false;
    EXPECT_TRUE(fundus::image_misclassified(o));
    o.has_lesion_truth = false;
    EXPECT_FALSE(fundus::image_misclassified(o));
    o.found_any_candidate = true;
    EXPECT_TRUE(fundus::image_misclassified(o));
}

TEST(Eval, PixelReductionWeighting) {
    EXPECT_DOUBLE_EQ(fundus::pixel_reduction({0.1, 0.3}), 0.2);
    EXPECT_DOUBLE_EQ(fundus::pixel_reduction({0.1, 0.3}, {100, 300}), 0.25);
    EXPECT_THROW(fundus::pixel_reduction({}), std::invalid_argument);
    EXPECT_THROW(fundus::pixel_reduction({0.1}, {1, 2}), std::invalid_argument);
    EXPECT_THROW(fundus::pixel_reduction({0.1}, {0}), std::invalid_argument);
}

TEST(Eval, PixelsIntersectMaskClipsOutOfRange) {
    BinaryMask m(4, 4, false);
    m.set(2, 2, true);
    EXPECT_TRUE(fundus::pixels_intersect_mask({{0, 0}, {2, 2}}, m));
    EXPECT_FALSE(fundus::pixels_intersect_mask({{0, 0}, {3, 3}}, m));
    EXPECT_FALSE(fundus::pixels_intersect_mask({{-1, 0}, {7, 7}}, m));
}
