#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fundus/error.hpp"
#include "fundus/features.hpp"

namespace fundus {

/// Phase-1 classes. Abnormal images are referred directly; ProcessFurther
/// images continue to candidate extraction.
enum class ClassLabel { Abnormal, ProcessFurther };

inline constexpr int kClassCount = 2;

/// Gaussian variances are floored here so constant-within-class features
/// keep a finite log-likelihood.
inline constexpr double kVarianceFloor = 1e-9;

inline const char* to_string(ClassLabel c) {
    return c == ClassLabel::Abnormal ? "abnormal" : "process_further";
}

inline ClassLabel parse_class_label(const std::string& s) {
    if (s == "abnormal")
        return ClassLabel::Abnormal;
    if (s == "process_further")
        return ClassLabel::ProcessFurther;
    throw parse_error("unknown class label: " + s);
}

inline int class_index(ClassLabel c) {
    return c == ClassLabel::Abnormal ? 0 : 1;
}

inline ClassLabel class_at(int i) {
    return i == 0 ? ClassLabel::Abnormal : ClassLabel::ProcessFurther;
}

/// Labeled feature vectors plus the per-position likelihood kinds.
struct TrainingSet {
    struct Row {
        FeatureVector values;
        ClassLabel label = ClassLabel::ProcessFurther;
    };
    std::vector<Row> rows;
    std::vector<FeatureKind> feature_kinds;
};

/**
 * @brief Naive Bayes parameters over mixed continuous/binary features.
 *
 * Per feature position and class: Gaussian mean/variance for continuous
 * positions, smoothed Bernoulli p(value=1) for binary positions. The
 * per-class parameter vectors are indexed by stored feature position; for
 * a position of the other kind the slot is unused. The training-time
 * FeatureSpec, full grid tile count, and any selected subset travel with
 * the model so prediction can project full-length vectors.
 */
struct NaiveBayesModel {
    std::array<double, kClassCount> priors{};
    std::vector<FeatureKind> feature_kinds;
    std::array<std::vector<double>, kClassCount> mean;
    std::array<std::vector<double>, kClassCount> variance;
    std::array<std::vector<double>, kClassCount> p_one;
    FeatureSpec spec;
    int total_tiles = 0;
    FeatureSubset subset;

    int feature_count() const { return static_cast<int>(feature_kinds.size()); }
};

/// Projects a full grid-length vector down to the subset's tiles. Values
/// stay in tile order; each tile contributes values_per_tile(mode) entries.
inline FeatureVector project(const FeatureVector& v, const FeatureSubset& subset,
                             FeatureMode mode, int total_tiles) {
    const int vpt = values_per_tile(mode);
    if (static_cast<int>(v.size()) != total_tiles * vpt)
        throw std::invalid_argument("project: vector length does not match tile grid");
    FeatureVector out;
    out.reserve(subset.selected_tiles.size() * static_cast<std::size_t>(vpt));
    for (int tile : subset.selected_tiles) {
        if (tile < 0 || tile >= total_tiles)
            throw std::invalid_argument("project: tile index out of range");
        for (int j = 0; j < vpt; ++j)
            out.push_back(v[static_cast<std::size_t>(tile) * vpt + j]);
    }
    return out;
}

/**
 * @brief Trains the classifier: priors from class frequency; per-class
 * sample mean and population variance (floored at kVarianceFloor) for
 * continuous positions; Laplace-smoothed p = (ones + 1) / (count + 2) for
 * binary positions.
 *
 * The feature spec, grid size, and subset are stamped into the model for
 * the caller; rows must already be projected when a subset is supplied.
 */
inline NaiveBayesModel train(const TrainingSet& data, const FeatureSpec& spec = {},
                             int total_tiles = 0, FeatureSubset subset = {}) {
    if (data.rows.empty())
        throw std::invalid_argument("train: empty training set");
    const std::size_t nf = data.feature_kinds.size();
    if (nf == 0)
        throw std::invalid_argument("train: feature_kinds must be nonempty");
    for (const auto& row : data.rows)
        if (row.values.size() != nf)
            throw std::invalid_argument("train: row length does not match feature_kinds");

    std::array<long, kClassCount> counts{};
    for (const auto& row : data.rows)
        ++counts[static_cast<std::size_t>(class_index(row.label))];
    if (counts[0] == 0 || counts[1] == 0)
        throw std::invalid_argument("train: training set must contain both classes");

    NaiveBayesModel m;
    m.feature_kinds = data.feature_kinds;
    m.spec = spec;
    m.subset = std::move(subset);
    if (total_tiles > 0) {
        m.total_tiles = total_tiles;
    } else {
        // ad-hoc feature sets whose length is not a tile multiple get one
        // tile per value, keeping total_tiles >= 1 for serialization
        const int vpt = values_per_tile(spec.mode);
        m.total_tiles = nf % static_cast<std::size_t>(vpt) == 0 ? static_cast<int>(nf) / vpt
                                                                : static_cast<int>(nf);
    }
    const double n = static_cast<double>(data.rows.size());
    for (int c = 0; c < kClassCount; ++c) {
        m.priors[static_cast<std::size_t>(c)] = static_cast<double>(counts[static_cast<std::size_t>(c)]) / n;
        m.mean[static_cast<std::size_t>(c)].assign(nf, 0.0);
        m.variance[static_cast<std::size_t>(c)].assign(nf, kVarianceFloor);
        m.p_one[static_cast<std::size_t>(c)].assign(nf, 0.5);
    }

    for (int c = 0; c < kClassCount; ++c) {
        const double nc = static_cast<double>(counts[static_cast<std::size_t>(c)]);
        std::vector<double> sum(nf, 0.0), sumsq(nf, 0.0), ones(nf, 0.0);
        for (const auto& row : data.rows) {
            if (class_index(row.label) != c)
                continue;
            for (std::size_t j = 0; j < nf; ++j) {
                const double x = row.values[j];
                sum[j] += x;
                sumsq[j] += x * x;
                if (x != 0.0)
                    ones[j] += 1.0;
            }
        }
        for (std::size_t j = 0; j < nf; ++j) {
            if (data.feature_kinds[j] == FeatureKind::Continuous) {
                const double mu = sum[j] / nc;
                double var = sumsq[j] / nc - mu * mu;
                if (!(var > kVarianceFloor))
                    var = kVarianceFloor;
                m.mean[static_cast<std::size_t>(c)][j] = mu;
                m.variance[static_cast<std::size_t>(c)][j] = var;
            } else {
                m.p_one[static_cast<std::size_t>(c)][j] = (ones[j] + 1.0) / (nc + 2.0);
            }
        }
    }
    return m;
}

namespace detail {

/// Adapts the input vector to the model's stored positions: either it is
/// already model-length, or it is a full grid vector and the model's
/// subset projects it.
inline FeatureVector adapt_vector(const NaiveBayesModel& m, const FeatureVector& v) {
    if (static_cast<int>(v.size()) == m.feature_count())
        return v;
    if (!m.subset.empty() &&
        static_cast<int>(v.size()) == m.total_tiles * values_per_tile(m.spec.mode))
        return project(v, m.subset, m.spec.mode, m.total_tiles);
    throw std::invalid_argument("predict: feature vector length does not match model");
}

inline std::array<double, kClassCount> log_scores(const NaiveBayesModel& m,
                                                  const FeatureVector& v) {
    std::array<double, kClassCount> s{};
    for (int c = 0; c < kClassCount; ++c) {
        double acc = std::log(m.priors[static_cast<std::size_t>(c)]);
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (m.feature_kinds[j] == FeatureKind::Continuous) {
                const double mu = m.mean[static_cast<std::size_t>(c)][j];
                const double var = m.variance[static_cast<std::size_t>(c)][j];
                const double d = v[j] - mu;
                constexpr double two_pi = 6.283185307179586476925286766559;
                acc += -0.5 * std::log(two_pi * var) - d * d / (2.0 * var);
            } else {
                const double p = m.p_one[static_cast<std::size_t>(c)][j];
                acc += std::log(v[j] != 0.0 ? p : 1.0 - p);
            }
        }
        s[static_cast<std::size_t>(c)] = acc;
    }
    return s;
}

}  // namespace detail

/// Normalized posteriors, index 0 = Abnormal. Computed in the log domain
/// and normalized with the max-shift trick; the two entries sum to 1.
inline std::array<double, kClassCount> class_posteriors(const NaiveBayesModel& m,
                                                        const FeatureVector& v) {
    const FeatureVector x = detail::adapt_vector(m, v);
    const auto s = detail::log_scores(m, x);
    const double mx = std::max(s[0], s[1]);
    const double e0 = std::exp(s[0] - mx);
    const double e1 = std::exp(s[1] - mx);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

struct Prediction {
    ClassLabel label = ClassLabel::Abnormal;
    double posterior = 0.0;  // normalized probability of the returned label
};

/// Classifies a vector; ties go to Abnormal (referral is the safe error).
inline Prediction predict(const NaiveBayesModel& m, const FeatureVector& v) {
    const auto p = class_posteriors(m, v);
    Prediction out;
    if (p[0] >= p[1]) {
        out.label = ClassLabel::Abnormal;
        out.posterior = p[0];
    } else {
        out.label = ClassLabel::ProcessFurther;
        out.posterior = p[1];
    }
    return out;
}

// --- model serialization ---

inline constexpr const char* kModelMagic = "FUNDUSGATE-NB v1";

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string next_line(const std::string& text, std::size_t& pos) {
    if (pos >= text.size())
        throw parse_error("model: unexpected end of file");
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos)
        nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
}

inline double parse_model_double(std::istringstream& in, const char* field) {
    double v = 0.0;
    if (!(in >> v))
        throw parse_error(std::string("model: missing or malformed ") + field);
    return v;
}

inline long parse_model_long(std::istringstream& in, const char* field) {
    long v = 0;
    if (!(in >> v))
        throw parse_error(std::string("model: missing or malformed ") + field);
    return v;
}

inline std::istringstream expect_key(const std::string& line, const char* key) {
    std::istringstream in(line);
    std::string k;
    in >> k;
    if (k != key)
        throw parse_error(std::string("model: expected \"") + key + "\" line, got \"" + k + "\"");
    return in;
}

}  // namespace detail

/**
 * @brief Serializes the model to the line-oriented text format.
 *
 * First line is the versioned magic; doubles are written with 17
 * significant digits so load(save(m)) reproduces every parameter exactly.
 */
inline std::string save_model(const NaiveBayesModel& m) {
    std::string out;
    out += kModelMagic;
    out += '\n';
    out += "mode " + std::string(to_string(m.spec.mode)) + "\n";
    out += "subimage_size " + std::to_string(m.spec.subimage_size) + "\n";
    out += "threshold " + std::to_string(m.spec.threshold) + "\n";
    out += "total_tiles " + std::to_string(m.total_tiles) + "\n";
    out += "subset " + std::to_string(m.subset.selected_tiles.size());
    for (int t : m.subset.selected_tiles)
        out += " " + std::to_string(t);
    out += "\n";
    out += "priors " + detail::format_double(m.priors[0]) + " " +
           detail::format_double(m.priors[1]) + "\n";
    out += "features " + std::to_string(m.feature_kinds.size()) + "\n";
    for (std::size_t j = 0; j < m.feature_kinds.size(); ++j) {
        out += "feature " + std::to_string(j);
        if (m.feature_kinds[j] == FeatureKind::Continuous) {
            out += " C";
            for (int c = 0; c < kClassCount; ++c)
                out += " " + detail::format_double(m.mean[static_cast<std::size_t>(c)][j]) + " " +
                       detail::format_double(m.variance[static_cast<std::size_t>(c)][j]);
        } else {
            out += " B";
            for (int c = 0; c < kClassCount; ++c)
                out += " " + detail::format_double(m.p_one[static_cast<std::size_t>(c)][j]);
        }
        out += "\n";
    }
    return out;
}

inline NaiveBayesModel load_model(const std::string& text) {
    std::size_t pos = 0;
    if (detail::next_line(text, pos) != kModelMagic)
        throw parse_error(std::string("model: bad magic, expected \"") + kModelMagic + "\"");

    NaiveBayesModel m;
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "mode");
        std::string mode;
        if (!(in >> mode))
            throw parse_error("model: missing mode value");
        m.spec.mode = parse_feature_mode(mode);
    }
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "subimage_size");
        m.spec.subimage_size = static_cast<int>(detail::parse_model_long(in, "subimage_size"));
    }
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "threshold");
        m.spec.threshold = static_cast<int>(detail::parse_model_long(in, "threshold"));
    }
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "total_tiles");
        m.total_tiles = static_cast<int>(detail::parse_model_long(in, "total_tiles"));
        if (m.total_tiles < 1)
            throw parse_error("model: total_tiles must be positive");
    }
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "subset");
        long count = detail::parse_model_long(in, "subset count");
        if (count < 0)
            throw parse_error("model: negative subset count");
        for (long i = 0; i < count; ++i) {
            long t = detail::parse_model_long(in, "subset tile index");
            if (t < 0 || t >= m.total_tiles)
                throw parse_error("model: subset tile index out of range");
            m.subset.selected_tiles.push_back(static_cast<int>(t));
        }
    }
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "priors");
        m.priors[0] = detail::parse_model_double(in, "prior");
        m.priors[1] = detail::parse_model_double(in, "prior");
        if (!(m.priors[0] > 0.0) || !(m.priors[1] > 0.0))
            throw parse_error("model: priors must be positive");
    }
    long nf = 0;
    {
        auto in = detail::expect_key(detail::next_line(text, pos), "features");
        nf = detail::parse_model_long(in, "feature count");
        if (nf < 1)
            throw parse_error("model: feature count must be positive");
    }
    for (int c = 0; c < kClassCount; ++c) {
        m.mean[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(nf), 0.0);
        m.variance[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(nf), kVarianceFloor);
        m.p_one[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(nf), 0.5);
    }
    m.feature_kinds.resize(static_cast<std::size_t>(nf));
    for (long j = 0; j < nf; ++j) {
        auto in = detail::expect_key(detail::next_line(text, pos), "feature");
        long idx = detail::parse_model_long(in, "feature index");
        if (idx != j)
            throw parse_error("model: feature lines out of order at index " + std::to_string(j));
        std::string kind;
        if (!(in >> kind) || (kind != "C" && kind != "B"))
            throw parse_error("model: feature kind must be C or B at index " + std::to_string(j));
        const std::size_t sj = static_cast<std::size_t>(j);
        if (kind == "C") {
            m.feature_kinds[sj] = FeatureKind::Continuous;
            for (int c = 0; c < kClassCount; ++c) {
                m.mean[static_cast<std::size_t>(c)][sj] = detail::parse_model_double(in, "mean");
                double var = detail::parse_model_double(in, "variance");
                if (!(var > 0.0))
                    throw parse_error("model: variance must be positive at index " +
                                      std::to_string(j));
                m.variance[static_cast<std::size_t>(c)][sj] = var;
            }
        } else {
            m.feature_kinds[sj] = FeatureKind::Binary;
            for (int c = 0; c < kClassCount; ++c) {
                double p = detail::parse_model_double(in, "bernoulli p");
                if (!(p > 0.0) || !(p < 1.0))
                    throw parse_error("model: bernoulli p must be in (0,1) at index " +
                                      std::to_string(j));
                m.p_one[static_cast<std::size_t>(c)][sj] = p;
            }
        }
    }
    return m;
}

}  // namespace fundus
