#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fundus/bayes.hpp"
#include "fundus/error.hpp"
#include "fundus/image.hpp"
#include "fundus/manifest.hpp"
#include "fundus/netpbm.hpp"
#include "fundus/rng.hpp"

namespace fundus {

enum class Severity { Normal, Lesioned, SeverelyAbnormal };

enum class LesionKind { DarkBlob, BrightBlob };

inline const char* to_string(Severity s) {
    switch (s) {
        case Severity::Normal: return "normal";
        case Severity::Lesioned: return "lesioned";
        case Severity::SeverelyAbnormal: return "severely_abnormal";
    }
    return "normal";
}

inline Severity parse_severity(const std::string& s) {
    if (s == "normal")
        return Severity::Normal;
    if (s == "lesioned")
        return Severity::Lesioned;
    if (s == "severely_abnormal")
        return Severity::SeverelyAbnormal;
    throw parse_error("unknown severity: " + s);
}

inline const char* to_string(LesionKind k) {
    return k == LesionKind::DarkBlob ? "dark" : "bright";
}

inline LesionKind parse_lesion_kind(const std::string& s) {
    if (s == "dark")
        return LesionKind::DarkBlob;
    if (s == "bright")
        return LesionKind::BrightBlob;
    throw parse_error("unknown lesion kind: " + s);
}

/**
 * @brief Full description of one synthetic fundus image.
 *
 * Every output pixel is a pure function of this record. Lesion radius is
 * the Gaussian profile's rho in pixels (ground-truth half-peak masks have
 * radius rho * sqrt(2 ln 2)); lesion depth is the profile's peak amplitude
 * in gray levels on the green plane.
 */
struct SynthSpec {
    std::uint64_t seed = 1;
    int width = 512;
    int height = 512;
    Severity severity = Severity::Normal;
    int lesion_count = 0;
    LesionKind lesion_kind = LesionKind::DarkBlob;
    bool rpe_texture = false;
    double lesion_radius_min = 3.0;
    double lesion_radius_max = 8.0;
    double lesion_depth_min = 70.0;
    double lesion_depth_max = 90.0;
};

struct GroundTruth {
    std::vector<BinaryMask> lesion_masks;  // one per planted lesion
    ClassLabel class_label = ClassLabel::ProcessFurther;
};

inline void validate(const SynthSpec& s) {
    if (s.width < 64 || s.height < 64)
        throw std::invalid_argument("SynthSpec: dimensions must be at least 64x64");
    if (s.lesion_count < 0)
        throw std::invalid_argument("SynthSpec: negative lesion count");
    if ((s.lesion_count == 0) != (s.severity == Severity::Normal))
        throw std::invalid_argument("SynthSpec: lesion_count must be 0 exactly for Normal severity");
    if (!(s.lesion_radius_min >= 2.0) || !(s.lesion_radius_max <= 16.0) ||
        s.lesion_radius_min > s.lesion_radius_max)
        throw std::invalid_argument("SynthSpec: lesion radius range must satisfy 2 <= min <= max <= 16");
    if (!(s.lesion_depth_min >= 60.0) || !(s.lesion_depth_max <= 120.0) ||
        s.lesion_depth_min > s.lesion_depth_max)
        throw std::invalid_argument("SynthSpec: lesion depth range must satisfy 60 <= min <= max <= 120");
}

namespace detail {

inline double hash_unit(std::uint64_t seed, long ix, long iy) {
    std::uint64_t h = mix64(mix64(seed ^ (0x9E3779B97F4A7C15ULL *
                                          static_cast<std::uint64_t>(ix + 0x10000))) ^
                            (0xC2B2AE3D27D4EB4FULL * static_cast<std::uint64_t>(iy + 0x10000)));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;  // [-1, 1)
}

/// Smoothstep-interpolated lattice value noise in [-1, 1].
inline double value_noise(std::uint64_t seed, int x, int y, int cell) {
    const int ix = x / cell;
    const int iy = y / cell;
    const double fx = static_cast<double>(x - ix * cell) / cell;
    const double fy = static_cast<double>(y - iy * cell) / cell;
    const double ux = fx * fx * (3.0 - 2.0 * fx);
    const double uy = fy * fy * (3.0 - 2.0 * fy);
    const double v00 = hash_unit(seed, ix, iy);
    const double v10 = hash_unit(seed, ix + 1, iy);
    const double v01 = hash_unit(seed, ix, iy + 1);
    const double v11 = hash_unit(seed, ix + 1, iy + 1);
    return (1.0 - uy) * ((1.0 - ux) * v00 + ux * v10) + uy * ((1.0 - ux) * v01 + ux * v11);
}

struct SynthLesion {
    double x = 0.0, y = 0.0;
    double rho = 0.0;
    double depth = 0.0;
};

}  // namespace detail

/**
 * @brief Renders one synthetic fundus image with ground truth.
 *
 * Circular field of view (radius 0.46 * min dimension) on a black
 * surround, with a quartic vignette falling smoothly to zero at the rim so
 * shade correction sees no step edge. Smooth lattice-noise texture, a few
 * curvilinear vessel strokes thin enough for the denoising median to
 * remove, Gaussian-profile lesions, and, for SeverelyAbnormal (or when
 * rpe_texture is set), high-amplitude patchy inhomogeneity over roughly
 * half of the field of view.
 */
inline std::pair<RgbImage, GroundTruth> generate(const SynthSpec& spec) {
    validate(spec);
    const int w = spec.width;
    const int h = spec.height;
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double R = 0.46 * std::min(w, h);
    const double base_level = 118.0;

    const std::uint64_t seed_coarse = mix64(spec.seed ^ 0x436F617273654E31ULL);
    const std::uint64_t seed_mid = mix64(spec.seed ^ 0x4D69644E6F697365ULL);
    const std::uint64_t seed_dither = mix64(spec.seed ^ 0x4469746865724E6FULL);
    const std::uint64_t seed_rpe_patch = mix64(spec.seed ^ 0x5250455061746368ULL);
    const std::uint64_t seed_rpe_fine = mix64(spec.seed ^ 0x5250454E6F697365ULL);
    SplitMix64 vessel_rng(mix64(spec.seed ^ 0x56657373656C7331ULL));
    SplitMix64 lesion_rng(mix64(spec.seed ^ 0x4C6573696F6E7331ULL));

    // Vessel layer: max-combined parabolic cross-sections stamped along
    // quadratic Bezier strokes. Half-widths stay below 3 px so a 13x13
    // median erases every stroke. Each stroke carries a bright central
    // light reflex sized so the pixels it pushes above the local plateau
    // balance the wall pixels below it: a rank-balanced profile leaves the
    // 25x25 background median unmoved and therefore casts no shade-
    // correction halo.
    std::vector<double> vessel_dark(static_cast<std::size_t>(w) * h, 0.0);
    std::vector<double> vessel_bright(static_cast<std::size_t>(w) * h, 0.0);
    // Strokes fan out from a hub outside the field of view and bow to a
    // common side, so no two strokes cross inside the FOV: where stamped
    // profiles overlap the max-combine breaks the count cancellation, and
    // a crossing would leak a halo through the background median.
    constexpr double pi = std::numbers::pi;
    const double theta_h = vessel_rng.next_range(0.0, 2.0 * pi);
    const double hubx = cx + 1.3 * R * std::cos(theta_h);
    const double huby = cy + 1.3 * R * std::sin(theta_h);
    const int stroke_count = vessel_rng.next_int(4, 6);
    const double bow_base = vessel_rng.next_range(-0.10, 0.10);
    for (int s = 0; s < stroke_count; ++s) {
        const double frac =
            static_cast<double>(s) / (stroke_count - 1) - 0.5;
        const double theta_e =
            theta_h + pi + frac * 1.1 + vessel_rng.next_range(-0.05, 0.05);
        const double re = R * vessel_rng.next_range(0.88, 0.97);
        const double p0x = hubx, p0y = huby;
        const double p2x = cx + re * std::cos(theta_e);
        const double p2y = cy + re * std::sin(theta_e);
        const double chordx = p2x - p0x, chordy = p2y - p0y;
        const double chord = std::sqrt(chordx * chordx + chordy * chordy);
        const double px = -chordy / chord, py = chordx / chord;
        const double bow =
            (bow_base + vessel_rng.next_range(-0.02, 0.02)) * chord;
        const double c1x = (p0x + p2x) / 2.0 + px * bow;
        const double c1y = (p0y + p2y) / 2.0 + py * bow;
        // width stays below half the 13x13 denoise window so vessels are
        // conditioned away in phase 2 instead of surfacing as candidates
        const double half_width = vessel_rng.next_range(1.6, 2.1);
        const double depth = vessel_rng.next_range(22.0, 34.0);
        const int steps = std::max(16, static_cast<int>(chord / 0.4));
        const int rad = static_cast<int>(std::ceil(half_width));
        for (int k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) / steps;
            const double mt = 1.0 - t;
            const double bx = mt * mt * p0x + 2.0 * mt * t * c1x + t * t * p2x;
            const double by = mt * mt * p0y + 2.0 * mt * t * c1y + t * t * p2y;
            const int x0 = std::max(0, static_cast<int>(std::floor(bx)) - rad);
            const int x1 = std::min(w - 1, static_cast<int>(std::ceil(bx)) + rad);
            const int y0 = std::max(0, static_cast<int>(std::floor(by)) - rad);
            const int y1 = std::min(h - 1, static_cast<int>(std::ceil(by)) + rad);
            // net profile reflex - wall crosses zero at half the wall
            // half-width, so the stroke brightens as many pixels as it
            // darkens and the rank-based background median stays put
            const double reflex_width = 0.75 * half_width;
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx) {
                    const double ddx = xx - bx, ddy = yy - by;
                    const double r2 = ddx * ddx + ddy * ddy;
                    const double wall =
                        depth * std::max(0.0, 1.0 - r2 / (half_width * half_width));
                    const double reflex =
                        1.35 * depth *
                        std::max(0.0, 1.0 - r2 / (reflex_width * reflex_width));
                    const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
                    vessel_dark[i] = std::max(vessel_dark[i], wall);
                    vessel_bright[i] = std::max(vessel_bright[i], reflex);
                }
        }
    }

    // Lesion placement: uniform in the disc of radius 0.6 R, kept apart so
    // masks and profiles never merge.
    std::vector<detail::SynthLesion> lesions;
    for (int li = 0; li < spec.lesion_count; ++li) {
        detail::SynthLesion l;
        l.rho = lesion_rng.next_range(spec.lesion_radius_min, spec.lesion_radius_max);
        l.depth = lesion_rng.next_range(spec.lesion_depth_min, spec.lesion_depth_max);
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            double ux, uy;
            do {
                ux = lesion_rng.next_range(-1.0, 1.0);
                uy = lesion_rng.next_range(-1.0, 1.0);
            } while (ux * ux + uy * uy > 1.0);
            l.x = cx + 0.6 * R * ux;
            l.y = cy + 0.6 * R * uy;
            placed = true;
            for (const auto& other : lesions) {
                const double dx = l.x - other.x, dy = l.y - other.y;
                const double min_sep = std::max(24.0, 6.0 * (l.rho + other.rho));
                if (dx * dx + dy * dy < min_sep * min_sep) {
                    placed = false;
                    break;
                }
            }
        }
        lesions.push_back(l);  // after 200 attempts the last position stands
    }
    const double lesion_sign = spec.lesion_kind == LesionKind::DarkBlob ? -1.0 : 1.0;
    const bool rpe_on = spec.rpe_texture || spec.severity == Severity::SeverelyAbnormal;

    RgbImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double d = std::sqrt(dx * dx + dy * dy);
            double vig = 0.0;
            if (d < R) {
                // wide quadratic falloff, hard edge at R: the in-FOV value
                // distribution spreads over ~60 gray levels so equalization
                // stays near-linear, and no dim in-FOV annulus exists for
                // the phase-2 background median to mistrack
                const double u2 = (d / R) * (d / R);
                vig = 1.0 - 0.55 * u2;
            }
            // texture scales straddle the phase-2 medians: 96-128 px cells
            // are tracked by the 25x25 background estimate, 3-px dither is
            // erased by the 13x13 denoiser, and nothing lives in between,
            // so a clean retina flattens to 128 after shade correction
            double tex = 5.0 * detail::value_noise(seed_coarse, x, y, 128) +
                         3.0 * detail::value_noise(seed_mid, x, y, 96) +
                         1.0 * detail::value_noise(seed_dither, x, y, 3);
            double f = vig * (base_level + tex);
            if (rpe_on && vig > 0.0) {
                const double raw = detail::value_noise(seed_rpe_patch, x, y, 40);
                const double pc = std::copysign(std::sqrt(std::abs(raw)), raw);
                const double ind = std::clamp(pc / 0.30 + 0.5, 0.0, 1.0);
                if (ind > 0.0) {
                    // signed sqrt pushes the interpolated noise toward +-1 so
                    // degenerated patches modulate hard, not just often
                    const double fine = detail::value_noise(seed_rpe_fine, x, y, 7);
                    f += vig * ind * 70.0 * std::copysign(std::sqrt(std::abs(fine)), fine);
                }
            }
            const std::size_t vi = static_cast<std::size_t>(y) * w + x;
            f += vig * (vessel_bright[vi] - vessel_dark[vi]);
            for (const auto& l : lesions) {
                const double lx = x - l.x, ly = y - l.y;
                const double d2 = lx * lx + ly * ly;
                if (d2 < 16.0 * l.rho * l.rho)
                    f += lesion_sign * l.depth * std::exp(-d2 / (2.0 * l.rho * l.rho));
            }
            const double r_ch = 1.30 * f + 18.0 * vig;
            const double b_ch = 0.35 * f;
            img.set(x, y,
                    static_cast<std::uint8_t>(std::clamp(std::lround(r_ch), 0L, 255L)),
                    static_cast<std::uint8_t>(std::clamp(std::lround(f), 0L, 255L)),
                    static_cast<std::uint8_t>(std::clamp(std::lround(b_ch), 0L, 255L)));
        }
    }

    GroundTruth truth;
    truth.class_label = spec.severity == Severity::SeverelyAbnormal ? ClassLabel::Abnormal
                                                                    : ClassLabel::ProcessFurther;
    for (const auto& l : lesions) {
        BinaryMask mask(w, h, false);
        const double r2 = 2.0 * std::log(2.0) * l.rho * l.rho;  // profile >= half peak
        const double r_mask = std::sqrt(r2);
        const int x0 = std::max(0, static_cast<int>(std::floor(l.x - r_mask)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(l.x + r_mask)));
        const int y0 = std::max(0, static_cast<int>(std::floor(l.y - r_mask)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(l.y + r_mask)));
        for (int yy = y0; yy <= y1; ++yy)
            for (int xx = x0; xx <= x1; ++xx) {
                const double dx = xx - l.x, dy = yy - l.y;
                if (dx * dx + dy * dy <= r2)
                    mask.set(xx, yy, true);
            }
        truth.lesion_masks.push_back(std::move(mask));
    }
    return {std::move(img), std::move(truth)};
}

// --- corpus generation ---

struct CorpusCounts {
    int normal = 0;
    int abnormal = 0;   // SeverelyAbnormal images
    int lesioned = 0;   // ProcessFurther images carrying lesion ground truth
};

struct CorpusOptions {
    std::uint64_t seed = 1;
    int width = 512;
    int height = 512;
    LesionKind lesion_kind = LesionKind::DarkBlob;
    int lesions_per_abnormal = 3;
    int lesions_per_lesioned = 1;
    double lesion_radius_min = 3.0;
    double lesion_radius_max = 8.0;
    double lesion_depth_min = 70.0;
    double lesion_depth_max = 90.0;
};

/**
 * @brief Writes a ground-truthed corpus: PPM images, union lesion-mask
 * PGMs, and a manifest. Returns the manifest path.
 *
 * Row order is normal, then severely abnormal, then lesioned; each image's
 * seed derives deterministically from the corpus seed and its index, so
 * regeneration reproduces every byte.
 */
inline std::filesystem::path generate_corpus(const CorpusOptions& opt,
                                             const CorpusCounts& counts,
                                             const std::filesystem::path& out_dir) {
    if (counts.normal < 0 || counts.abnormal < 0 || counts.lesioned < 0)
        throw std::invalid_argument("generate_corpus: negative class count");
    if (counts.normal + counts.abnormal + counts.lesioned == 0)
        throw std::invalid_argument("generate_corpus: empty corpus");
    if (opt.lesions_per_abnormal < 1 || opt.lesions_per_lesioned < 1)
        throw std::invalid_argument("generate_corpus: lesions per abnormal/lesioned image must be at least 1");
    std::filesystem::create_directories(out_dir);

    std::vector<ManifestRow> rows;
    int index = 0;
    auto emit = [&](Severity severity, int lesion_count) {
        SynthSpec s;
        s.seed = mix64(opt.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1));
        s.width = opt.width;
        s.height = opt.height;
        s.severity = severity;
        s.lesion_count = lesion_count;
        s.lesion_kind = opt.lesion_kind;
        s.lesion_radius_min = opt.lesion_radius_min;
        s.lesion_radius_max = opt.lesion_radius_max;
        s.lesion_depth_min = opt.lesion_depth_min;
        s.lesion_depth_max = opt.lesion_depth_max;
        auto [img, truth] = generate(s);

        char name[32];
        std::snprintf(name, sizeof(name), "img_%04d.ppm", index);
        save_ppm(out_dir / name, img);
        ManifestRow row;
        row.image = name;
        row.label = to_string(truth.class_label);
        if (!truth.lesion_masks.empty()) {
            BinaryMask all(opt.width, opt.height, false);
            for (const auto& m : truth.lesion_masks)
                for (std::size_t i = 0; i < m.data.size(); ++i)
                    if (m.data[i])
                        all.data[i] = 1;
            char mask_name[32];
            std::snprintf(mask_name, sizeof(mask_name), "les_%04d.pgm", index);
            save_mask_pgm(out_dir / mask_name, all);
            row.lesions = mask_name;
        }
        rows.push_back(std::move(row));
        ++index;
    };
    for (int i = 0; i < counts.normal; ++i)
        emit(Severity::Normal, 0);
    for (int i = 0; i < counts.abnormal; ++i)
        emit(Severity::SeverelyAbnormal, opt.lesions_per_abnormal);
    for (int i = 0; i < counts.lesioned; ++i)
        emit(Severity::Lesioned, opt.lesions_per_lesioned);

    const std::filesystem::path manifest_path = out_dir / "manifest.csv";
    save_manifest(manifest_path, rows);
    return manifest_path;
}

}  // namespace fundus
