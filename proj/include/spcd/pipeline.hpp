// Pipeline operations behind the CLI subcommands. Each run owns its output
// directory (lock file), writes the documented CSV/PNG/JSON artifacts, and
// records a run manifest with the resolved config, the root seed, and input
// checksums. Outputs are byte-identical across reruns with the same config
// and seed; wall-clock timestamps go only to the run.log sidecar.
#pragma once

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spcd/augment.hpp"
#include "spcd/classifier.hpp"
#include "spcd/csv.hpp"
#include "spcd/evaluation.hpp"
#include "spcd/features.hpp"
#include "spcd/image.hpp"
#include "spcd/image_io.hpp"
#include "spcd/manifest.hpp"
#include "spcd/model.hpp"
#include "spcd/rng.hpp"
#include "spcd/slic.hpp"

namespace spcd {

struct PipelineConfig {
    std::string task = "ischaemia";
    std::vector<std::string> features = {"spcd", "lbp", "hog", "color"};
    SlicParams slic;
    SpcdParams spcd;
    LbpParams lbp;
    HogParams hog;
    MagnificationPolicy magnify;
    std::vector<TransformSpec> transforms = default_transforms();
    bool balance = false;
    int patches_per_crop = 0;  // balanced mode; 0 = one patch per configured transform
    std::optional<std::size_t> balance_target;
    ModelParams model;
    int n_folds = 5;
    double threshold = 0.5;
    RoleRatios ratios;
    std::uint64_t seed = 0;

    void validate() const {
        if (task != "ischaemia" && task != "infection")
            throw std::invalid_argument("unknown task: " + task);
        if (features.empty()) throw std::invalid_argument("feature set is empty");
        std::set<std::string> seen;
        for (const auto& f : features) {
            if (f != "spcd" && f != "lbp" && f != "hog" && f != "color")
                throw std::invalid_argument("unknown feature: " + f);
            if (!seen.insert(f).second) throw std::invalid_argument("duplicate feature: " + f);
        }
        slic.validate();
        spcd.validate();
        lbp.validate();
        hog.validate();
        magnify.validate();
        for (const auto& t : transforms) {
            TransformSpec tmp = t;  // stochastic seeds are derived per patch later
            if (is_stochastic(tmp.kind) && !tmp.seed) tmp.seed = 0;
            tmp.validate();
        }
        if (patches_per_crop < 0) throw std::invalid_argument("patches_per_crop must be >= 0");
        model.validate();
        if (n_folds < 2) throw std::invalid_argument("n_folds must be >= 2");
        ratios.validate();
    }
};

inline std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file for checksum: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string bytes = buf.str();
    return fnv1a64(std::string_view(bytes));
}

inline std::string checksum_hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Creates the output directory and takes its lock file; no two runs may own
// the same directory at once. The lock is released on destruction.
class OutputDir {
public:
    explicit OutputDir(const std::string& path) : path_(path) {
        if (path_.empty()) throw std::invalid_argument("output directory not set");
        std::filesystem::create_directories(path_);
        lock_path_ = (std::filesystem::path(path_) / ".lock").string();
        std::FILE* fp = std::fopen(lock_path_.c_str(), "wx");
        if (!fp)
            throw std::runtime_error("output directory " + path_ +
                                     " is locked by another run (stale? remove " + lock_path_ +
                                     ")");
        std::fclose(fp);
    }
    ~OutputDir() { std::remove(lock_path_.c_str()); }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const {
        return (std::filesystem::path(path_) / name).string();
    }

private:
    std::string path_;
    std::string lock_path_;
};

inline nlohmann::json config_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["task"] = cfg.task;
    j["features"] = cfg.features;
    j["slic"] = {{"k", cfg.slic.k},
                 {"m", cfg.slic.m},
                 {"iterations", cfg.slic.iterations},
                 {"min_region_fraction", cfg.slic.min_region_fraction}};
    j["spcd"] = {{"t1_values", cfg.spcd.t1_values}, {"t2_values", cfg.spcd.t2_values}};
    j["lbp"] = {{"radius", cfg.lbp.radius},
                {"neighbors", cfg.lbp.neighbors},
                {"uniform", cfg.lbp.uniform}};
    j["hog"] = {{"cell_size", cfg.hog.cell_size},
                {"block_size", cfg.hog.block_size},
                {"bins", cfg.hog.bins}};
    j["magnify"] = {{"factors", cfg.magnify.factors}, {"output_size", cfg.magnify.output_size}};
    nlohmann::json transforms = nlohmann::json::array();
    for (const auto& t : cfg.transforms)
        transforms.push_back({{"kind", transform_kind_name(t.kind)}, {"magnitude", t.magnitude}});
    j["transforms"] = std::move(transforms);
    j["balance"] = cfg.balance;
    j["patches_per_crop"] = cfg.patches_per_crop;
    if (cfg.balance_target) j["balance_target"] = *cfg.balance_target;
    j["model"] = {{"kind", model_kind_name(cfg.model.kind)},
                  {"seed", cfg.model.seed},
                  {"nb_var_floor", cfg.model.nb_var_floor},
                  {"rf_trees", cfg.model.rf_trees},
                  {"rf_max_depth", cfg.model.rf_max_depth},
                  {"rf_min_leaf", cfg.model.rf_min_leaf},
                  {"mlp_hidden", cfg.model.mlp_hidden},
                  {"mlp_lr", cfg.model.mlp_lr},
                  {"mlp_epochs", cfg.model.mlp_epochs},
                  {"mlp_batch", cfg.model.mlp_batch},
                  {"mlp_l2", cfg.model.mlp_l2}};
    j["n_folds"] = cfg.n_folds;
    j["threshold"] = cfg.threshold;
    j["ratios"] = {{"train", cfg.ratios.train}, {"val", cfg.ratios.val}, {"test", cfg.ratios.test}};
    j["seed"] = cfg.seed;
    return j;
}

namespace detail {

inline void append_log(const OutputDir& out, const std::string& line) {
    std::ofstream log(out.file("run.log"), std::ios::app);
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
    log << stamp << "Z " << line << '\n';
}

}  // namespace detail

inline void write_run_manifest(const OutputDir& out, const std::string& command,
                               const nlohmann::json& config,
                               const std::vector<std::string>& inputs,
                               const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    nlohmann::json in_sums;
    for (const auto& p : inputs) in_sums[p] = checksum_hex(file_checksum(p));
    j["inputs"] = std::move(in_sums);
    nlohmann::json out_sums;
    for (const auto& p : outputs) out_sums[p] = checksum_hex(file_checksum(out.file(p)));
    j["outputs"] = std::move(out_sums);

    std::ofstream f(out.file("run_manifest.json"), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write run manifest");
    f << j.dump(1, '\t') << '\n';
    detail::append_log(out, command + " done");
}

// ---------------------------------------------------------------- ingest --

struct ConditionCounts {
    std::size_t absent_cases = 0;
    std::size_t absent_patches = 0;
    std::size_t present_cases = 0;
    std::size_t present_patches = 0;
};

struct IngestSummary {
    std::size_t rows = 0;
    std::size_t images = 0;
    ConditionCounts ischaemia;
    ConditionCounts infection;
    std::vector<std::string> warnings;
};

// Validates the manifest end to end: parses rows, opens every referenced
// image once, and checks each ROI against the actual image bounds, citing
// the offending data row.
inline IngestSummary run_ingest(const std::string& manifest_path,
                                const OutputDir* out = nullptr) {
    Manifest manifest = load_manifest(manifest_path);
    std::map<std::string, std::pair<int, int>> dims;  // path -> (w, h)
    IngestSummary summary;
    summary.warnings = manifest.warnings;
    summary.rows = manifest.rows.size();

    std::map<std::string, std::pair<bool, bool>> isch_by_image, inf_by_image;
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const ManifestRow& r = manifest.rows[i];
        std::size_t row_no = i + 1;
        auto it = dims.find(r.image_path);
        if (it == dims.end()) {
            std::string resolved = r.image_path;
            if (std::filesystem::path(resolved).is_relative())
                resolved = (base / resolved).string();
            RgbImage img = [&] {
                try {
                    return load_image(resolved);
                } catch (const std::exception& e) {
                    throw std::runtime_error("manifest row " + std::to_string(row_no) + ": " +
                                             e.what());
                }
            }();
            it = dims.emplace(r.image_path, std::make_pair(img.width(), img.height())).first;
        }
        if (!r.roi.inside(it->second.first, it->second.second))
            throw std::runtime_error("manifest row " + std::to_string(row_no) +
                                     ": roi outside image bounds");
        auto& isch = isch_by_image[r.image_id];
        auto& inf = inf_by_image[r.image_id];
        (r.ischaemia ? isch.second : isch.first) = true;
        (r.infection ? inf.second : inf.first) = true;
        (r.ischaemia ? summary.ischaemia.present_patches : summary.ischaemia.absent_patches)++;
        (r.infection ? summary.infection.present_patches : summary.infection.absent_patches)++;
    }
    summary.images = isch_by_image.size();
    for (const auto& [id, flags] : isch_by_image) {
        if (flags.first) summary.ischaemia.absent_cases++;
        if (flags.second) summary.ischaemia.present_cases++;
    }
    for (const auto& [id, flags] : inf_by_image) {
        if (flags.first) summary.infection.absent_cases++;
        if (flags.second) summary.infection.present_cases++;
    }

    if (out) {
        nlohmann::json j;
        j["rows"] = summary.rows;
        j["images"] = summary.images;
        auto cond = [](const ConditionCounts& c) {
            return nlohmann::json{{"absent_cases", c.absent_cases},
                                  {"absent_patches", c.absent_patches},
                                  {"present_cases", c.present_cases},
                                  {"present_patches", c.present_patches}};
        };
        j["ischaemia"] = cond(summary.ischaemia);
        j["infection"] = cond(summary.infection);
        j["warnings"] = summary.warnings;
        std::ofstream f(out->file("ingest_summary.json"), std::ios::binary);
        f << j.dump(1, '\t') << '\n';
        write_run_manifest(*out, "ingest", nlohmann::json::object(), {manifest_path},
                           {"ingest_summary.json"});
    }
    return summary;
}

// --------------------------------------------------------------- augment --

struct AugmentSummary {
    std::size_t sources = 0;
    std::size_t patches = 0;
    std::size_t class0_patches = 0;  // by the configured task's label
    std::size_t class1_patches = 0;
    bool balanced = false;
    std::size_t target = 0;
    std::string provenance_path;
};

inline const std::vector<std::string>& provenance_header() {
    static const std::vector<std::string> h = {"patch_id", "patch_path", "source_id",
                                               "roi_index", "factor",    "transform",
                                               "seed",      "ischaemia", "infection"};
    return h;
}

namespace detail {

inline std::string factor_string(double f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", f);
    return buf;
}

// Disambiguate transform names when a kind appears more than once.
inline std::vector<std::string> transform_names(const std::vector<TransformSpec>& specs) {
    std::map<std::string, int> kind_count;
    for (const auto& s : specs) kind_count[transform_kind_name(s.kind)]++;
    std::map<std::string, int> running;
    std::vector<std::string> names;
    names.reserve(specs.size());
    for (const auto& s : specs) {
        std::string base = transform_kind_name(s.kind);
        if (kind_count[base] > 1)
            names.push_back(base + "_s" + std::to_string(running[base]++));
        else
            names.push_back(base);
    }
    return names;
}

}  // namespace detail

// Writes patch PNGs plus provenance.csv. Default mode emits the full chain
// for every row (each magnification crop untransformed and once per
// transform). Balanced mode equalizes the two classes of the configured
// task: minority rows get transformed patches only, majority rows get plain
// crops first and transformed extras as needed.
inline AugmentSummary run_augment(const std::string& manifest_path, const PipelineConfig& cfg,
                                  const OutputDir& out) {
    cfg.validate();
    Manifest manifest = load_manifest(manifest_path);
    std::filesystem::create_directories(out.file("patches"));
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

    const std::size_t n_factors = cfg.magnify.factors.size();
    const std::vector<std::string> spec_names = detail::transform_names(cfg.transforms);

    // Per-image ROI ordinals so multi-ROI rows get distinct patch ids.
    std::map<std::string, int> roi_ordinal;
    std::vector<int> row_roi(manifest.rows.size());
    for (std::size_t i = 0; i < manifest.rows.size(); ++i)
        row_roi[i] = roi_ordinal[manifest.rows[i].image_id]++;

    // Balanced mode: per-row patch counts from the plan.
    std::vector<int> row_count(manifest.rows.size(), -1);  // -1 = full chain with originals
    AugmentSummary summary;
    summary.sources = manifest.rows.size();
    summary.balanced = cfg.balance;
    std::vector<bool> row_transforms_only(manifest.rows.size(), false);
    if (cfg.balance) {
        std::size_t n0 = 0, n1 = 0;
        for (const auto& r : manifest.rows) (r.label(cfg.task) ? n1 : n0)++;
        if (n0 == 0 || n1 == 0)
            throw std::runtime_error("balance: manifest has a single " + cfg.task + " class");
        int minority_label = n1 <= n0 ? 1 : 0;
        std::size_t n_min = minority_label ? n1 : n0;
        std::size_t n_maj = minority_label ? n0 : n1;
        int ppc = cfg.patches_per_crop > 0 ? cfg.patches_per_crop
                                           : static_cast<int>(cfg.transforms.size());
        if (ppc == 0) throw std::runtime_error("balance: no transforms configured");
        BalancePlan plan = plan_balance(n_min, n_maj, static_cast<int>(n_factors), ppc,
                                        cfg.balance_target);
        summary.target = plan.target;
        std::size_t ord0 = 0, ord1 = 0;
        for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
            int label = manifest.rows[i].label(cfg.task);
            bool minority = label == minority_label;
            std::size_t ordinal = label ? ord1++ : ord0++;
            row_count[i] = plan.count_for(minority, ordinal);
            row_transforms_only[i] = minority;
            int capacity = static_cast<int>(n_factors) *
                           static_cast<int>(cfg.transforms.size() + (minority ? 0 : 1));
            if (row_count[i] > capacity)
                throw std::runtime_error(
                    "balance: target needs " + std::to_string(row_count[i]) +
                    " patches per source but the configured chain yields only " +
                    std::to_string(capacity));
        }
    }

    std::ofstream prov(out.file("provenance.csv"), std::ios::binary);
    if (!prov) throw std::runtime_error("cannot write provenance.csv");
    write_csv_row(prov, provenance_header());

    std::map<std::string, RgbImage> image_cache;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const ManifestRow& r = manifest.rows[i];
        std::string resolved = r.image_path;
        if (std::filesystem::path(resolved).is_relative()) resolved = (base / resolved).string();
        auto it = image_cache.find(resolved);
        if (it == image_cache.end()) {
            if (image_cache.size() > 8) image_cache.clear();  // bound memory, keep recent
            it = image_cache.emplace(resolved, load_image(resolved)).first;
        }
        const RgbImage& img = it->second;
        if (!r.roi.inside(img.width(), img.height()))
            throw std::runtime_error("manifest row " + std::to_string(i + 1) +
                                     ": roi outside image bounds");

        std::vector<RgbImage> crops = natural_magnify(img, r.roi, cfg.magnify);
        std::string tag = r.image_id + "#" + std::to_string(row_roi[i]);

        auto emit = [&](std::size_t fi, int spec_idx) {
            // spec_idx -1 = untransformed crop; seeds line up with augment_record.
            std::uint64_t seed =
                derive_seed(cfg.seed, tag, fi, static_cast<std::uint64_t>(spec_idx + 1));
            const RgbImage* patch = &crops[fi];
            RgbImage transformed;
            std::string name = "orig";
            if (spec_idx >= 0) {
                TransformSpec spec = cfg.transforms[static_cast<std::size_t>(spec_idx)];
                if (is_stochastic(spec.kind)) spec.seed = seed;
                transformed = apply_transform(crops[fi], spec);
                patch = &transformed;
                name = spec_names[static_cast<std::size_t>(spec_idx)];
            }
            std::string id = r.image_id + "_roi" + std::to_string(row_roi[i]) + "_f" +
                             detail::factor_string(cfg.magnify.factors[fi]) + "_" + name;
            std::string rel = "patches/" + id + ".png";
            save_png(*patch, out.file(rel));
            write_csv_row(prov, {id, rel, r.image_id, std::to_string(row_roi[i]),
                                 detail::factor_string(cfg.magnify.factors[fi]), name,
                                 std::to_string(seed), std::to_string(r.ischaemia),
                                 std::to_string(r.infection)});
            (r.label(cfg.task) ? summary.class1_patches : summary.class0_patches)++;
            summary.patches++;
        };

        if (row_count[i] < 0) {
            for (std::size_t fi = 0; fi < n_factors; ++fi) {
                emit(fi, -1);
                for (std::size_t si = 0; si < cfg.transforms.size(); ++si)
                    emit(fi, static_cast<int>(si));
            }
        } else if (row_transforms_only[i]) {
            for (int v = 0; v < row_count[i]; ++v)
                emit(static_cast<std::size_t>(v) % n_factors,
                     v / static_cast<int>(n_factors));
        } else {
            for (int v = 0; v < row_count[i]; ++v) {
                if (v < static_cast<int>(n_factors)) {
                    emit(static_cast<std::size_t>(v), -1);
                } else {
                    int u = v - static_cast<int>(n_factors);
                    emit(static_cast<std::size_t>(u) % n_factors,
                         u / static_cast<int>(n_factors));
                }
            }
        }
    }
    prov.close();
    summary.provenance_path = out.file("provenance.csv");

    write_run_manifest(out, "augment", config_json(cfg), {manifest_path}, {"provenance.csv"});
    return summary;
}

// --------------------------------------------------------------- extract --

// Feature extraction for one patch under the configured feature set.
inline FeatureVector extract_features(const RgbImage& patch, const PipelineConfig& cfg) {
    std::optional<LabImage> lab;
    std::optional<std::vector<double>> gray;
    auto need_lab = [&]() -> const LabImage& {
        if (!lab) lab = rgb_to_lab(patch);
        return *lab;
    };
    auto need_gray = [&]() -> const std::vector<double>& {
        if (!gray) gray = to_gray(patch);
        return *gray;
    };
    std::vector<std::pair<std::string, FeatureVector>> parts;
    for (const std::string& f : cfg.features) {
        if (f == "spcd") {
            SuperpixelMap map = segment(need_lab(), cfg.slic);
            parts.emplace_back("spcd", spcd_descriptor(patch, map, cfg.spcd));
        } else if (f == "lbp") {
            parts.emplace_back(
                "lbp", lbp_histogram(need_gray(), patch.width(), patch.height(), cfg.lbp));
        } else if (f == "hog") {
            parts.emplace_back(
                "hog", hog_descriptor(need_gray(), patch.width(), patch.height(), cfg.hog));
        } else if (f == "color") {
            parts.emplace_back("color", color_stats(patch, need_lab()));
        }
    }
    return compose(parts);
}

struct ExtractSummary {
    std::size_t patches = 0;
    std::size_t features = 0;
    std::string features_path;
};

// Reads provenance.csv, extracts features from every patch PNG, and writes
// features.csv: patch_id, label (for the configured task), then one column
// per feature name.
inline ExtractSummary run_extract(const std::string& provenance_path, const PipelineConfig& cfg,
                                  const OutputDir& out) {
    cfg.validate();
    std::vector<std::vector<std::string>> rows = read_csv(provenance_path);
    if (rows.empty() || rows[0] != provenance_header())
        throw std::runtime_error("provenance " + provenance_path + ": bad or missing header");
    if (rows.size() == 1)
        throw std::runtime_error("provenance " + provenance_path + ": no data rows");

    std::filesystem::path base = std::filesystem::path(provenance_path).parent_path();
    std::ofstream feat(out.file("features.csv"), std::ios::binary);
    if (!feat) throw std::runtime_error("cannot write features.csv");
    feat.precision(17);

    ExtractSummary summary;
    std::vector<std::string> names;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != provenance_header().size())
            throw std::runtime_error("provenance row " + std::to_string(i) + ": wrong field count");
        std::string patch_path = f[1];
        if (std::filesystem::path(patch_path).is_relative())
            patch_path = (base / patch_path).string();
        RgbImage patch = load_image(patch_path);
        FeatureVector fv = extract_features(patch, cfg);
        if (names.empty()) {
            names = fv.names;
            std::vector<std::string> header = {"patch_id", "label"};
            header.insert(header.end(), names.begin(), names.end());
            write_csv_row(feat, header);
        } else if (fv.names != names) {
            throw std::runtime_error("provenance row " + std::to_string(i) +
                                     ": inconsistent feature names");
        }
        const std::string& label = cfg.task == "ischaemia" ? f[7] : f[8];
        if (label != "0" && label != "1")
            throw std::runtime_error("provenance row " + std::to_string(i) + ": bad label");
        feat << csv_field(f[0]) << ',' << label;
        for (double v : fv.values) feat << ',' << v;
        feat.put('\n');
        summary.patches++;
    }
    feat.close();
    summary.features = names.size();
    summary.features_path = out.file("features.csv");

    write_run_manifest(out, "extract", config_json(cfg), {provenance_path}, {"features.csv"});
    return summary;
}

// Features CSV -> Dataset (ids + labels + feature matrix; groups empty).
inline Dataset load_features(const std::string& path) {
    std::vector<std::vector<std::string>> rows = read_csv(path);
    if (rows.empty()) throw std::runtime_error("features " + path + ": empty file");
    const auto& header = rows[0];
    if (header.size() < 3 || header[0] != "patch_id" || header[1] != "label")
        throw std::runtime_error("features " + path +
                                 ": header must start with patch_id,label");
    if (rows.size() == 1) throw std::runtime_error("features " + path + ": no data rows");

    Dataset data;
    data.feature_names.assign(header.begin() + 2, header.end());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != header.size())
            throw std::runtime_error("features row " + std::to_string(i) + ": wrong field count");
        data.ids.push_back(f[0]);
        if (f[1] != "0" && f[1] != "1")
            throw std::runtime_error("features row " + std::to_string(i) + ": bad label");
        data.y.push_back(f[1] == "1" ? 1 : 0);
        std::vector<double> x(data.feature_names.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            try {
                std::size_t pos = 0;
                x[j] = std::stod(f[j + 2], &pos);
                if (pos != f[j + 2].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw std::runtime_error("features row " + std::to_string(i) + ": bad value '" +
                                         f[j + 2] + "'");
            }
        }
        data.x.push_back(std::move(x));
    }
    return data;
}

// Attach source-image groups to a feature dataset via the provenance join.
inline void attach_groups(Dataset& data, const std::string& provenance_path) {
    std::vector<std::vector<std::string>> rows = read_csv(provenance_path);
    if (rows.empty() || rows[0] != provenance_header())
        throw std::runtime_error("provenance " + provenance_path + ": bad or missing header");
    std::map<std::string, std::string> source_of;
    for (std::size_t i = 1; i < rows.size(); ++i) source_of[rows[i][0]] = rows[i][2];
    data.groups.clear();
    data.groups.reserve(data.ids.size());
    for (const std::string& id : data.ids) {
        auto it = source_of.find(id);
        if (it == source_of.end())
            throw std::runtime_error("patch " + id + " missing from provenance " +
                                     provenance_path);
        data.groups.push_back(it->second);
    }
}

// ----------------------------------------------------------------- train --

struct TrainSummary {
    std::string model_path;
    std::size_t rows = 0;
    std::size_t features = 0;
    std::vector<double> epoch_losses;
};

inline TrainSummary run_train(const std::string& features_path, const PipelineConfig& cfg,
                              const OutputDir& out) {
    cfg.validate();
    if (!std::filesystem::exists(features_path))
        throw std::runtime_error("features CSV not found at " + features_path);
    Dataset data = load_features(features_path);
    ModelParams params = cfg.model;
    params.seed = derive_seed(cfg.seed, "train");
    TrainTrace trace;
    Model model = train_model(data, params, &trace);

    TrainSummary summary;
    summary.rows = data.size();
    summary.features = data.dim();
    summary.epoch_losses = trace.epoch_losses;
    summary.model_path = out.file(std::string("model_") + model_kind_name(cfg.model.kind) +
                                  ".spcdmodel");
    save_model(model, summary.model_path);

    std::vector<std::string> outputs = {std::string("model_") +
                                        model_kind_name(cfg.model.kind) + ".spcdmodel"};
    if (!trace.epoch_losses.empty()) {
        std::ofstream loss(out.file("training_loss.csv"), std::ios::binary);
        loss.precision(17);
        write_csv_row(loss, {"epoch", "loss"});
        for (std::size_t e = 0; e < trace.epoch_losses.size(); ++e)
            loss << e << ',' << trace.epoch_losses[e] << '\n';
        outputs.push_back("training_loss.csv");
    }
    write_run_manifest(out, "train", config_json(cfg), {features_path}, outputs);
    return summary;
}

// -------------------------------------------------------------- evaluate --

struct EvaluateSummary {
    CvResult cv;
    std::string metrics_path;
    std::string aggregated_path;
    std::vector<std::string> roc_paths;
};

// Group-aware cross-validation over the feature table, reported as
// (a) metrics.csv: model,fold,metric,value
// (b) aggregated.csv: model,metric,mean,std
// (c) roc_fold{f}.csv: threshold,fpr,tpr
inline EvaluateSummary run_evaluate(const std::string& features_path,
                                    const std::string& provenance_path,
                                    const PipelineConfig& cfg, const OutputDir& out) {
    cfg.validate();
    if (!std::filesystem::exists(features_path))
        throw std::runtime_error("features CSV not found at " + features_path);
    Dataset data = load_features(features_path);
    attach_groups(data, provenance_path);

    ModelParams params = cfg.model;
    params.seed = derive_seed(cfg.seed, "train");
    EvaluateSummary summary;
    summary.cv = cross_validate(data, params, cfg.n_folds, derive_seed(cfg.seed, "folds"),
                                cfg.threshold, cfg.ratios);

    const std::string model_name = model_kind_name(cfg.model.kind);
    {
        std::ofstream f(out.file("metrics.csv"), std::ios::binary);
        f.precision(17);
        write_csv_row(f, {"model", "fold", "metric", "value"});
        for (std::size_t fold = 0; fold < summary.cv.folds.size(); ++fold)
            for (const std::string& m : metric_names())
                f << model_name << ',' << fold << ',' << m << ','
                  << metric_value(summary.cv.folds[fold].metrics, m) << '\n';
    }
    {
        std::ofstream f(out.file("aggregated.csv"), std::ios::binary);
        f.precision(17);
        write_csv_row(f, {"model", "metric", "mean", "std"});
        for (const std::string& m : metric_names()) {
            auto [mean, sd] = summary.cv.aggregate(m);
            f << model_name << ',' << m << ',' << mean << ',' << sd << '\n';
        }
    }
    std::vector<std::string> outputs = {"metrics.csv", "aggregated.csv"};
    for (std::size_t fold = 0; fold < summary.cv.folds.size(); ++fold) {
        std::string rel = "roc_fold" + std::to_string(fold) + ".csv";
        std::ofstream f(out.file(rel), std::ios::binary);
        f.precision(17);
        write_csv_row(f, {"threshold", "fpr", "tpr"});
        for (const RocPoint& p : summary.cv.folds[fold].roc)
            f << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
        summary.roc_paths.push_back(out.file(rel));
        outputs.push_back(rel);
    }
    summary.metrics_path = out.file("metrics.csv");
    summary.aggregated_path = out.file("aggregated.csv");

    write_run_manifest(out, "evaluate", config_json(cfg), {features_path, provenance_path},
                       outputs);
    return summary;
}

// ------------------------------------------------------ debug superpixels --

struct DebugSummary {
    int superpixels = 0;
    std::string painted_path;
    std::string boundaries_path;
    std::string mask_path;
};

// Emits the mean-color painted image, a boundary overlay, and a mask overlay
// highlighting red-dominant superpixels in red and near-black ones in blue.
inline DebugSummary run_debug_superpixels(const std::string& image_path,
                                          const PipelineConfig& cfg, double red_threshold,
                                          double black_threshold, const OutputDir& out) {
    cfg.slic.validate();
    RgbImage img = load_image(image_path);
    SuperpixelMap map = segment(rgb_to_lab(img), cfg.slic);
    RgbImage painted = paint_mean_colors(img, map);
    RgbImage boundaries = draw_boundaries(img, map);

    std::vector<Rgb> means = superpixel_mean_colors(img, map);
    RgbImage mask(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Rgb& c = means[static_cast<std::size_t>(
                map.labels[static_cast<std::size_t>(y) * img.width() + x])];
            if (c.r > red_threshold * (c.r + c.g + c.b))
                mask.at(x, y) = {1.0, 0.0, 0.0};
            else if (c.r < black_threshold && c.g < black_threshold && c.b < black_threshold)
                mask.at(x, y) = {0.0, 0.0, 1.0};
            else
                mask.at(x, y) = {c.r * 0.4, c.g * 0.4, c.b * 0.4};
        }
    }

    DebugSummary summary;
    summary.superpixels = map.count;
    summary.painted_path = out.file("painted.png");
    summary.boundaries_path = out.file("boundaries.png");
    summary.mask_path = out.file("mask.png");
    save_png(painted, summary.painted_path);
    save_png(boundaries, summary.boundaries_path);
    save_png(mask, summary.mask_path);

    write_run_manifest(out, "debug-superpixels", config_json(cfg), {image_path},
                       {"painted.png", "boundaries.png", "mask.png"});
    return summary;
}

}  // namespace spcd
