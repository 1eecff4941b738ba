#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fundus/bayes.hpp"
#include "fundus/error.hpp"
#include "fundus/eval.hpp"
#include "fundus/netpbm.hpp"
#include "fundus/prefilter.hpp"

namespace fundus {

inline constexpr const char* kReportSchema = "fundusgate-report/1";

/// Report skeleton; kind is "prescreen", "prefilter", or "evaluate".
inline nlohmann::ordered_json make_report(const std::string& kind) {
    nlohmann::ordered_json j;
    j["schema"] = kReportSchema;
    j["kind"] = kind;
    j["results"] = nlohmann::ordered_json::array();
    return j;
}

inline nlohmann::ordered_json prescreen_row(const std::string& image, ClassLabel label,
                                            double posterior) {
    nlohmann::ordered_json j;
    j["image"] = image;
    j["label"] = to_string(label);
    j["posterior"] = posterior;
    return j;
}

/// Row for an image that could not be processed; the run continues but the
/// command exits nonzero.
inline nlohmann::ordered_json error_row(const std::string& image, const std::string& message) {
    nlohmann::ordered_json j;
    j["image"] = image;
    j["error"] = message;
    return j;
}

inline nlohmann::ordered_json candidate_json(const CandidateRegion& c) {
    nlohmann::ordered_json j;
    j["label"] = c.label == PixelLabel::High ? "high" : "low";
    j["pixel_count"] = c.pixel_count();
    j["bbox"] = {{"x", c.bounding_box.x},
                 {"y", c.bounding_box.y},
                 {"w", c.bounding_box.w},
                 {"h", c.bounding_box.h}};
    nlohmann::ordered_json px = nlohmann::ordered_json::array();
    for (const auto& [x, y] : c.pixels) {
        px.push_back(x);
        px.push_back(y);
    }
    j["pixels"] = std::move(px);  // flat x0,y0,x1,y1,...
    return j;
}

inline nlohmann::ordered_json prefilter_row(const std::string& image, int width, int height,
                                            const PrefilterResult& result) {
    nlohmann::ordered_json j;
    j["image"] = image;
    j["width"] = width;
    j["height"] = height;
    j["retained_fraction"] = result.retained_fraction;
    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const auto& c : result.candidates)
        cands.push_back(candidate_json(c));
    j["candidates"] = std::move(cands);
    return j;
}

inline nlohmann::ordered_json metrics_json(const ConfusionCounts& counts, const Metrics& m) {
    nlohmann::ordered_json j;
    j["tp"] = counts.tp;
    j["fp"] = counts.fp;
    j["tn"] = counts.tn;
    j["fn"] = counts.fn;
    j["accuracy"] = m.accuracy;
    if (m.sensitivity)
        j["sensitivity"] = *m.sensitivity;
    if (m.specificity)
        j["specificity"] = *m.specificity;
    return j;
}

inline void write_report(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    write_file_text(path, j.dump(2) + "\n");
}

inline nlohmann::ordered_json load_report(const std::filesystem::path& path) {
    const std::string text = read_file_text(path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("report: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string() ||
        j["schema"].get<std::string>() != kReportSchema)
        throw parse_error("report: missing or unsupported schema (want \"" +
                          std::string(kReportSchema) + "\")");
    return j;
}

}  // namespace fundus
