// Dataset manifest: one row per ROI with both condition labels. Multiple
// ROI rows per image are allowed; exact duplicate (image_id, roi) rows are
// dropped with a warning. Validation failures cite the data row number.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcd/csv.hpp"
#include "spcd/image.hpp"

namespace spcd {

struct ManifestRow {
    std::string image_id;
    std::string image_path;
    Rect roi;
    int ischaemia = 0;
    int infection = 0;

    int label(const std::string& task) const {
        if (task == "ischaemia") return ischaemia;
        if (task == "infection") return infection;
        throw std::invalid_argument("unknown task: " + task);
    }
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::vector<std::string> warnings;
};

inline const std::vector<std::string>& manifest_header() {
    static const std::vector<std::string> h = {"image_id", "image_path", "roi_x", "roi_y",
                                               "roi_w",    "roi_h",      "ischaemia", "infection"};
    return h;
}

namespace detail {

inline int parse_int_field(const std::string& s, const std::string& what, std::size_t row) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("manifest row " + std::to_string(row) + ": bad " + what + " '" +
                                 s + "'");
    }
    if (pos != s.size())
        throw std::runtime_error("manifest row " + std::to_string(row) + ": bad " + what + " '" +
                                 s + "'");
    return v;
}

}  // namespace detail

// Row numbers in errors and warnings are 1-based data rows (header excluded).
inline Manifest load_manifest(const std::string& path) {
    std::vector<std::vector<std::string>> rows = read_csv(path);
    if (rows.empty()) throw std::runtime_error("manifest " + path + ": empty file");
    if (rows[0] != manifest_header()) {
        std::string got;
        for (std::size_t i = 0; i < rows[0].size(); ++i) got += (i ? "," : "") + rows[0][i];
        throw std::runtime_error("manifest " + path + ": bad header '" + got + "'");
    }
    if (rows.size() == 1) throw std::runtime_error("manifest " + path + ": no data rows");

    Manifest m;
    std::map<std::string, std::size_t> seen;  // image_id + roi -> first row
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        std::size_t row_no = i;  // data row, 1-based
        if (f.size() != manifest_header().size())
            throw std::runtime_error("manifest row " + std::to_string(row_no) + ": expected " +
                                     std::to_string(manifest_header().size()) + " fields, got " +
                                     std::to_string(f.size()));
        ManifestRow r;
        r.image_id = f[0];
        r.image_path = f[1];
        if (r.image_id.empty())
            throw std::runtime_error("manifest row " + std::to_string(row_no) + ": empty image_id");
        if (r.image_path.empty())
            throw std::runtime_error("manifest row " + std::to_string(row_no) +
                                     ": empty image_path");
        r.roi.x = detail::parse_int_field(f[2], "roi_x", row_no);
        r.roi.y = detail::parse_int_field(f[3], "roi_y", row_no);
        r.roi.w = detail::parse_int_field(f[4], "roi_w", row_no);
        r.roi.h = detail::parse_int_field(f[5], "roi_h", row_no);
        r.ischaemia = detail::parse_int_field(f[6], "ischaemia", row_no);
        r.infection = detail::parse_int_field(f[7], "infection", row_no);
        if (r.roi.x < 0 || r.roi.y < 0 || r.roi.w < 1 || r.roi.h < 1)
            throw std::runtime_error("manifest row " + std::to_string(row_no) + ": invalid roi");
        if ((r.ischaemia != 0 && r.ischaemia != 1) || (r.infection != 0 && r.infection != 1))
            throw std::runtime_error("manifest row " + std::to_string(row_no) +
                                     ": labels must be 0 or 1");

        std::string key = r.image_id + "|" + std::to_string(r.roi.x) + "," +
                          std::to_string(r.roi.y) + "," + std::to_string(r.roi.w) + "," +
                          std::to_string(r.roi.h);
        auto [it, inserted] = seen.try_emplace(key, row_no);
        if (!inserted) {
            m.warnings.push_back("row " + std::to_string(row_no) + ": duplicate of row " +
                                 std::to_string(it->second) + ", dropped");
            continue;
        }
        m.rows.push_back(std::move(r));
    }
    return m;
}

}  // namespace spcd
