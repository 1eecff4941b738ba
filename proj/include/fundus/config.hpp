#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fundus/error.hpp"
#include "fundus/features.hpp"
#include "fundus/prefilter.hpp"
#include "fundus/preprocess.hpp"

namespace fundus {

/**
 * @brief Every pipeline tunable in one flat record.
 *
 * Serialized as key=value lines using exactly these field names; '#'
 * starts a comment. keep = 0 disables backward elimination (train on all
 * tiles); any other value selects that many tiles.
 */
struct RunConfig {
    int s_prescreen = 5;             // phase-1 subimage size
    int t = 10;                      // inhomogeneity threshold
    FeatureMode mode = FeatureMode::Combined;
    int ahe_tile_grid = 8;
    double ahe_clip_fraction = 0.01;
    int fov_threshold = 10;
    int background_median = 25;      // A
    int denoise_median = 13;         // B
    double unsharp_amount = 1.0;     // lambda
    double unsharp_radius = 2.0;     // blur sigma
    int s_prefilter = 75;            // phase-2 region size
    int n = 30;                      // minimum component cardinality
    int connectivity = 8;
    int keep = 11;                   // tiles kept by backward elimination; 0 = all
    int workers = 1;
};

inline FeatureSpec feature_spec(const RunConfig& c) {
    return FeatureSpec{c.mode, c.s_prescreen, c.t};
}

inline AheParams ahe_params(const RunConfig& c) {
    return AheParams{c.ahe_tile_grid, c.ahe_clip_fraction};
}

inline PrefilterPreprocessParams prefilter_preprocess_params(const RunConfig& c) {
    return PrefilterPreprocessParams{c.background_median, c.denoise_median, c.unsharp_amount,
                                     c.unsharp_radius};
}

inline PrefilterParams prefilter_params(const RunConfig& c) {
    return PrefilterParams{c.s_prefilter, c.n, c.connectivity};
}

inline void validate(const RunConfig& c) {
    validate(feature_spec(c));
    if (c.ahe_tile_grid < 1)
        throw std::invalid_argument("RunConfig: ahe_tile_grid must be at least 1");
    if (!(c.ahe_clip_fraction > 0.0) || c.ahe_clip_fraction > 1.0)
        throw std::invalid_argument("RunConfig: ahe_clip_fraction must be in (0,1]");
    if (c.fov_threshold < 0 || c.fov_threshold > 255)
        throw std::invalid_argument("RunConfig: fov_threshold must be in [0,255]");
    if (c.background_median < 3 || c.background_median % 2 == 0)
        throw std::invalid_argument("RunConfig: background_median must be odd and at least 3");
    if (c.denoise_median < 3 || c.denoise_median % 2 == 0)
        throw std::invalid_argument("RunConfig: denoise_median must be odd and at least 3");
    if (c.unsharp_amount < 0.0)
        throw std::invalid_argument("RunConfig: unsharp_amount must be nonnegative");
    if (!(c.unsharp_radius > 0.0))
        throw std::invalid_argument("RunConfig: unsharp_radius must be positive");
    validate(prefilter_params(c));
    if (c.keep < 0)
        throw std::invalid_argument("RunConfig: keep must be nonnegative");
    if (c.workers < 1)
        throw std::invalid_argument("RunConfig: workers must be at least 1");
}

namespace detail {

inline int parse_config_int(const std::string& value, const std::string& key) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw parse_error("config: " + key + " expects an integer, got \"" + value + "\"");
    return static_cast<int>(v);
}

inline double parse_config_double(const std::string& value, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw parse_error("config: " + key + " expects a number, got \"" + value + "\"");
    return v;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Applies key=value lines over `base`. Unknown keys and malformed values
/// are format errors; range validation happens in validate(RunConfig).
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos)
            nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("config: line " + std::to_string(line_no) + " is not key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "s_prescreen")
            base.s_prescreen = detail::parse_config_int(value, key);
        else if (key == "t")
            base.t = detail::parse_config_int(value, key);
        else if (key == "mode")
            base.mode = parse_feature_mode(value);
        else if (key == "ahe_tile_grid")
            base.ahe_tile_grid = detail::parse_config_int(value, key);
        else if (key == "ahe_clip_fraction")
            base.ahe_clip_fraction = detail::parse_config_double(value, key);
        else if (key == "fov_threshold")
            base.fov_threshold = detail::parse_config_int(value, key);
        else if (key == "background_median")
            base.background_median = detail::parse_config_int(value, key);
        else if (key == "denoise_median")
            base.denoise_median = detail::parse_config_int(value, key);
        else if (key == "unsharp_amount")
            base.unsharp_amount = detail::parse_config_double(value, key);
        else if (key == "unsharp_radius")
            base.unsharp_radius = detail::parse_config_double(value, key);
        else if (key == "s_prefilter")
            base.s_prefilter = detail::parse_config_int(value, key);
        else if (key == "n")
            base.n = detail::parse_config_int(value, key);
        else if (key == "connectivity")
            base.connectivity = detail::parse_config_int(value, key);
        else if (key == "keep")
            base.keep = detail::parse_config_int(value, key);
        else if (key == "workers")
            base.workers = detail::parse_config_int(value, key);
        else
            throw parse_error("config: unknown key \"" + key + "\" on line " +
                              std::to_string(line_no));
    }
    return base;
}

}  // namespace fundus
