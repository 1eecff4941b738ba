#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fundus/bayes.hpp"
#include "fundus/error.hpp"
#include "fundus/netpbm.hpp"

namespace fundus {

inline constexpr const char* kManifestHeader =
    "image,label,fov,vessels,optic_disc,macula,lesions";

/// One dataset record. Paths are relative to the manifest file; empty
/// fields mean the mask is absent. The label vocabulary is closed:
/// "abnormal", "process_further", or "unlabeled".
struct ManifestRow {
    std::string image;
    std::string label = "unlabeled";
    std::string fov;
    std::string vessels;
    std::string optic_disc;
    std::string macula;
    std::string lesions;

    std::optional<ClassLabel> class_label() const {
        if (label == "unlabeled")
            return std::nullopt;
        return parse_class_label(label);
    }
};

struct DatasetManifest {
    std::filesystem::path base_dir;
    std::vector<ManifestRow> rows;

    std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline void require_plain_field(const std::string& s, const char* what) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
        throw parse_error(std::string("manifest: ") + what + " must not contain commas or newlines");
}

}  // namespace detail

inline std::vector<ManifestRow> parse_manifest(const std::string& text) {
    std::vector<ManifestRow> rows;
    std::size_t pos = 0;
    int line_no = 0;
    bool saw_header = false;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos)
            nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty()) {
            if (pos > text.size())
                break;  // trailing newline
            if (!saw_header)
                throw parse_error("manifest: missing header line");
            throw parse_error("manifest: empty line " + std::to_string(line_no));
        }
        if (!saw_header) {
            if (line != kManifestHeader)
                throw parse_error(std::string("manifest: header must be \"") + kManifestHeader +
                                  "\"");
            saw_header = true;
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 7)
            throw parse_error("manifest: line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected 7");
        ManifestRow row;
        row.image = fields[0];
        row.label = fields[1];
        row.fov = fields[2];
        row.vessels = fields[3];
        row.optic_disc = fields[4];
        row.macula = fields[5];
        row.lesions = fields[6];
        if (row.image.empty())
            throw parse_error("manifest: line " + std::to_string(line_no) + " has empty image path");
        if (row.label != "abnormal" && row.label != "process_further" && row.label != "unlabeled")
            throw parse_error("manifest: line " + std::to_string(line_no) + " has unknown label \"" +
                              row.label + "\"");
        rows.push_back(std::move(row));
    }
    if (!saw_header)
        throw parse_error("manifest: missing header line");
    return rows;
}

inline std::string serialize_manifest(const std::vector<ManifestRow>& rows) {
    std::string out = kManifestHeader;
    out += '\n';
    for (const ManifestRow& r : rows) {
        for (const std::string* f : {&r.image, &r.label, &r.fov, &r.vessels, &r.optic_disc,
                                     &r.macula, &r.lesions})
            detail::require_plain_field(*f, "field");
        out += r.image + "," + r.label + "," + r.fov + "," + r.vessels + "," + r.optic_disc +
               "," + r.macula + "," + r.lesions + "\n";
    }
    return out;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    DatasetManifest m;
    m.base_dir = path.parent_path();
    m.rows = parse_manifest(std::string(bytes.begin(), bytes.end()));
    return m;
}

inline void save_manifest(const std::filesystem::path& path,
                          const std::vector<ManifestRow>& rows) {
    const std::string text = serialize_manifest(rows);
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace fundus
