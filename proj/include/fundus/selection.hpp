#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fundus/bayes.hpp"
#include "fundus/features.hpp"

namespace fundus {

/**
 * @brief Greedy backward elimination at tile granularity.
 *
 * Repeatedly removes the tile whose removal maximizes leave-one-out
 * training accuracy of the Naive Bayes wrapper (same priors, variance
 * floor, Laplace smoothing, and Abnormal tie-break as train/predict),
 * until `keep` tiles remain. Ties are broken by removing the lowest tile
 * index, which makes the result deterministic.
 *
 * Naive Bayes factorizes per feature, so each row's per-tile per-class
 * leave-one-out log-likelihood contribution is computed once and summation
 * over the active tile set is maintained incrementally; removing a tile
 * never changes the other tiles' contributions.
 *
 * Rows must be full grid-length vectors. A leave-one-out fold that empties
 * a class predicts the remaining class.
 */
inline FeatureSubset backward_elimination(const TrainingSet& data, const FeatureSpec& spec,
                                          int keep) {
    validate(spec);
    if (data.rows.empty())
        throw std::invalid_argument("backward_elimination: empty training set");
    const int vpt = values_per_tile(spec.mode);
    const int nf = static_cast<int>(data.feature_kinds.size());
    if (nf == 0 || nf % vpt != 0)
        throw std::invalid_argument("backward_elimination: feature count is not a whole number of tiles");
    const int tiles = nf / vpt;
    if (keep < 1 || keep > tiles)
        throw std::invalid_argument("backward_elimination: keep must be in [1, tile count]");
    const int n = static_cast<int>(data.rows.size());
    for (const auto& row : data.rows)
        if (static_cast<int>(row.values.size()) != nf)
            throw std::invalid_argument("backward_elimination: row length does not match feature_kinds");

    std::vector<int> label(static_cast<std::size_t>(n));
    long counts[kClassCount] = {0, 0};
    for (int i = 0; i < n; ++i) {
        label[static_cast<std::size_t>(i)] = class_index(data.rows[static_cast<std::size_t>(i)].label);
        ++counts[label[static_cast<std::size_t>(i)]];
    }
    if (counts[0] == 0 || counts[1] == 0)
        throw std::invalid_argument("backward_elimination: training set must contain both classes");

    constexpr double two_pi = 6.283185307179586476925286766559;
    auto gauss_ll = [](double x, double mu, double var) {
        const double d = x - mu;
        return -0.5 * std::log(two_pi * var) - d * d / (2.0 * var);
    };

    // fold_pred[i] >= 0 forces that fold's prediction (class left after a
    // leave-one-out removal empties the other); -1 means score the fold.
    std::vector<int> fold_pred(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i)
        if (counts[label[static_cast<std::size_t>(i)]] == 1)
            fold_pred[static_cast<std::size_t>(i)] = 1 - label[static_cast<std::size_t>(i)];

    // Leave-one-out log priors depend only on the held-out row's class.
    std::vector<double> log_prior(static_cast<std::size_t>(n) * kClassCount, 0.0);
    for (int i = 0; i < n; ++i) {
        if (fold_pred[static_cast<std::size_t>(i)] >= 0)
            continue;
        for (int c = 0; c < kClassCount; ++c) {
            const long nc = counts[c] - (label[static_cast<std::size_t>(i)] == c ? 1 : 0);
            log_prior[static_cast<std::size_t>(i) * kClassCount + static_cast<std::size_t>(c)] =
                std::log(static_cast<double>(nc) / static_cast<double>(n - 1));
        }
    }

    // L[(i*tiles + tau)*2 + c]: row i's tile-tau log-likelihood under the
    // class-c parameters of the fold that holds out row i.
    std::vector<double> L(static_cast<std::size_t>(n) * tiles * kClassCount, 0.0);
    std::vector<double> sum(static_cast<std::size_t>(nf));
    std::vector<double> sumsq(static_cast<std::size_t>(nf));
    std::vector<double> ones(static_cast<std::size_t>(nf));
    for (int c = 0; c < kClassCount; ++c) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(sumsq.begin(), sumsq.end(), 0.0);
        std::fill(ones.begin(), ones.end(), 0.0);
        const double nc = static_cast<double>(counts[c]);
        for (int i = 0; i < n; ++i) {
            if (label[static_cast<std::size_t>(i)] != c)
                continue;
            const auto& v = data.rows[static_cast<std::size_t>(i)].values;
            for (int j = 0; j < nf; ++j) {
                sum[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(j)];
                sumsq[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
                if (v[static_cast<std::size_t>(j)] != 0.0)
                    ones[static_cast<std::size_t>(j)] += 1.0;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (fold_pred[static_cast<std::size_t>(i)] >= 0)
                continue;
            const auto& v = data.rows[static_cast<std::size_t>(i)].values;
            const bool held_out = label[static_cast<std::size_t>(i)] == c;
            const double m = held_out ? nc - 1.0 : nc;
            for (int j = 0; j < nf; ++j) {
                const std::size_t sj = static_cast<std::size_t>(j);
                const double x = v[sj];
                double ll;
                if (data.feature_kinds[sj] == FeatureKind::Continuous) {
                    const double s = held_out ? sum[sj] - x : sum[sj];
                    const double q = held_out ? sumsq[sj] - x * x : sumsq[sj];
                    const double mu = s / m;
                    double var = q / m - mu * mu;
                    if (!(var > kVarianceFloor))
                        var = kVarianceFloor;
                    ll = gauss_ll(x, mu, var);
                } else {
                    const double o = held_out && x != 0.0 ? ones[sj] - 1.0 : ones[sj];
                    const double p = (o + 1.0) / (m + 2.0);
                    ll = std::log(x != 0.0 ? p : 1.0 - p);
                }
                const int tau = j / vpt;
                L[(static_cast<std::size_t>(i) * tiles + static_cast<std::size_t>(tau)) * kClassCount +
                  static_cast<std::size_t>(c)] += ll;
            }
        }
    }

    // cur[i][c]: fold score over the currently active tile set.
    std::vector<double> cur(static_cast<std::size_t>(n) * kClassCount);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < kClassCount; ++c) {
            double acc = log_prior[static_cast<std::size_t>(i) * kClassCount + static_cast<std::size_t>(c)];
            for (int tau = 0; tau < tiles; ++tau)
                acc += L[(static_cast<std::size_t>(i) * tiles + static_cast<std::size_t>(tau)) * kClassCount +
                         static_cast<std::size_t>(c)];
            cur[static_cast<std::size_t>(i) * kClassCount + static_cast<std::size_t>(c)] = acc;
        }
    }

    std::vector<char> active(static_cast<std::size_t>(tiles), 1);
    int remaining = tiles;
    while (remaining > keep) {
        int best_tau = -1;
        long best_correct = -1;
        for (int tau = 0; tau < tiles; ++tau) {
            if (!active[static_cast<std::size_t>(tau)])
                continue;
            long correct = 0;
            for (int i = 0; i < n; ++i) {
                int pred = fold_pred[static_cast<std::size_t>(i)];
                if (pred < 0) {
                    const std::size_t base = static_cast<std::size_t>(i) * kClassCount;
                    const std::size_t lbase =
                        (static_cast<std::size_t>(i) * tiles + static_cast<std::size_t>(tau)) * kClassCount;
                    const double s0 = cur[base] - L[lbase];
                    const double s1 = cur[base + 1] - L[lbase + 1];
                    pred = s0 >= s1 ? 0 : 1;
                }
                if (pred == label[static_cast<std::size_t>(i)])
                    ++correct;
            }
            if (correct > best_correct) {
                best_correct = correct;
                best_tau = tau;
            }
        }
        active[static_cast<std::size_t>(best_tau)] = 0;
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < kClassCount; ++c)
                cur[static_cast<std::size_t>(i) * kClassCount + static_cast<std::size_t>(c)] -=
                    L[(static_cast<std::size_t>(i) * tiles + static_cast<std::size_t>(best_tau)) * kClassCount +
                      static_cast<std::size_t>(c)];
        --remaining;
    }

    FeatureSubset subset;
    subset.selected_tiles.reserve(static_cast<std::size_t>(keep));
    for (int tau = 0; tau < tiles; ++tau)
        if (active[static_cast<std::size_t>(tau)])
            subset.selected_tiles.push_back(tau);
    return subset;
}

}  // namespace fundus
