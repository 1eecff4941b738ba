#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fundus/image.hpp"

namespace fundus {

/// Binary confusion counts with Abnormal as the positive class.
struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }
};

/// A zero-denominator metric is undefined and reported as absent, not 0.
struct Metrics {
    double accuracy = 0.0;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

inline Metrics metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0)
        throw std::invalid_argument("metrics: negative count");
    const long long total = c.total();
    if (total == 0)
        throw std::invalid_argument("metrics: all counts are zero");
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    if (c.tp + c.fn > 0)
        m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0)
        m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return m;
}

/// Phase-2 per-image outcome used by the misclassification rule.
struct PrefilterOutcome {
    bool has_lesion_truth = false;
    bool found_any_candidate_on_lesion = false;
    bool found_any_candidate = false;
};

/// An image is misclassified when it has a lesion but no candidate was
/// produced, or has no lesion but some candidate was produced.
inline bool image_misclassified(const PrefilterOutcome& o) {
    return o.has_lesion_truth != o.found_any_candidate;
}

/// Area-weighted mean retained fraction; with no areas supplied every
/// image weighs equally.
inline double pixel_reduction(const std::vector<double>& fractions,
                              const std::vector<long long>& areas = {}) {
    if (fractions.empty())
        throw std::invalid_argument("pixel_reduction: empty input");
    if (!areas.empty() && areas.size() != fractions.size())
        throw std::invalid_argument("pixel_reduction: areas length does not match fractions");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double w = areas.empty() ? 1.0 : static_cast<double>(areas[i]);
        num += fractions[i] * w;
        den += w;
    }
    if (den <= 0.0)
        throw std::invalid_argument("pixel_reduction: nonpositive total area");
    return num / den;
}

/// True when any of the listed pixels falls inside the mask. The weakest
/// overlap rule: it makes a candidate a "true region" as soon as it
/// touches ground truth.
inline bool pixels_intersect_mask(const std::vector<std::pair<int, int>>& pixels,
                                  const BinaryMask& m) {
    for (const auto& [x, y] : pixels) {
        if (x < 0 || y < 0 || x >= m.width || y >= m.height)
            continue;
        if (m.at(x, y))
            return true;
    }
    return false;
}

}  // namespace fundus
