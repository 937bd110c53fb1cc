// spcd command-line front end. Subcommands: ingest, augment, extract, train,
// evaluate, debug-superpixels. All options may come from a config file
// (--config, TOML/INI style); command-line flags win over the file.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 training divergence.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spcd/spcd.hpp"

namespace {

struct CliOptions {
    spcd::PipelineConfig cfg;
    std::string manifest_path;
    std::string provenance_path;
    std::string features_path;
    std::string image_path;
    std::string out_dir = "out";
    std::string model_kind = "nb";
    std::string transforms_csv;  // comma-separated kind[:magnitude] list
    double red_threshold = 0.5;
    double black_threshold = 0.25;
    long long balance_target = 0;
};

std::vector<spcd::TransformSpec> parse_transforms(const std::string& text) {
    std::vector<spcd::TransformSpec> specs;
    if (text == "none") return specs;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::string name = item;
        double magnitude = -1.0;
        if (auto colon = item.find(':'); colon != std::string::npos) {
            name = item.substr(0, colon);
            magnitude = std::stod(item.substr(colon + 1));
        }
        auto kind = spcd::transform_kind_from_name(name);
        if (!kind) throw CLI::ValidationError("unknown transform: " + name);
        spcd::TransformSpec spec;
        spec.kind = *kind;
        if (magnitude >= 0) {
            spec.magnitude = magnitude;
        } else {
            for (const auto& d : spcd::default_transforms())
                if (d.kind == *kind) spec.magnitude = d.magnitude;
        }
        if (spcd::is_stochastic(*kind)) spec.seed = 0;  // replaced per patch
        specs.push_back(spec);
    }
    return specs;
}

void add_common(CLI::App* app, CliOptions& opt) {
    app->add_option("--seed", opt.cfg.seed, "root seed for all randomness");
    app->add_option("--out", opt.out_dir, "output directory");
    app->add_option("--task", opt.cfg.task, "classification task: ischaemia or infection");
}

void add_feature_opts(CLI::App* app, CliOptions& opt) {
    app->add_option("--features", opt.cfg.features,
                    "feature blocks to extract (spcd lbp hog color)");
    app->add_option("--slic-k", opt.cfg.slic.k, "target superpixel count");
    app->add_option("--slic-m", opt.cfg.slic.m, "SLIC compactness weight");
    app->add_option("--slic-iterations", opt.cfg.slic.iterations, "SLIC iterations");
    app->add_option("--lbp-radius", opt.cfg.lbp.radius, "LBP radius");
    app->add_option("--hog-cell", opt.cfg.hog.cell_size, "HOG cell size in pixels");
    app->add_option("--hog-bins", opt.cfg.hog.bins, "HOG orientation bins");
}

void add_model_opts(CLI::App* app, CliOptions& opt) {
    app->add_option("--model", opt.model_kind, "model kind: nb, rf, or mlp");
    app->add_option("--nb-var-floor", opt.cfg.model.nb_var_floor, "variance floor");
    app->add_option("--rf-trees", opt.cfg.model.rf_trees, "number of trees");
    app->add_option("--rf-max-depth", opt.cfg.model.rf_max_depth, "max tree depth, 0 = unlimited");
    app->add_option("--rf-min-leaf", opt.cfg.model.rf_min_leaf, "min samples per leaf");
    app->add_option("--mlp-hidden", opt.cfg.model.mlp_hidden, "hidden units");
    app->add_option("--mlp-lr", opt.cfg.model.mlp_lr, "learning rate");
    app->add_option("--mlp-epochs", opt.cfg.model.mlp_epochs, "training epochs");
    app->add_option("--mlp-batch", opt.cfg.model.mlp_batch, "minibatch size");
    app->add_option("--mlp-l2", opt.cfg.model.mlp_l2, "L2 weight decay");
}

void print_counts(const char* name, const spcd::ConditionCounts& c) {
    std::printf("%-10s absent: %zu cases / %zu patches   present: %zu cases / %zu patches\n",
                name, c.absent_cases, c.absent_patches, c.present_cases, c.present_patches);
}

int run(int argc, char** argv) {
    CliOptions opt;
    CLI::App app{"superpixel color descriptor pipeline for wound patch classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a config file");
    app.fallthrough();

    auto* ingest = app.add_subcommand("ingest", "validate a dataset manifest");
    ingest->add_option("manifest", opt.manifest_path, "manifest CSV")->required();
    add_common(ingest, opt);

    auto* augment = app.add_subcommand("augment", "write augmented patches + provenance");
    augment->add_option("manifest", opt.manifest_path, "manifest CSV")->required();
    add_common(augment, opt);
    augment->add_option("--factors", opt.cfg.magnify.factors, "magnification factors");
    augment->add_option("--output-size", opt.cfg.magnify.output_size, "patch side in pixels");
    augment->add_option("--transforms", opt.transforms_csv,
                        "comma-separated transform chain, kind[:magnitude]; 'none' disables");
    augment->add_flag("--balance", opt.cfg.balance, "equalize class patch counts for --task");
    augment->add_option("--patches-per-crop", opt.cfg.patches_per_crop,
                        "balanced mode: minority patches per magnification crop");
    augment->add_option("--balance-target", opt.balance_target,
                        "balanced mode: explicit per-class patch target");

    auto* extract = app.add_subcommand("extract", "extract features from augmented patches");
    extract->add_option("provenance", opt.provenance_path, "provenance CSV from augment")
        ->required();
    add_common(extract, opt);
    add_feature_opts(extract, opt);

    auto* train = app.add_subcommand("train", "fit a model on a features CSV");
    train->add_option("features", opt.features_path, "features CSV from extract")->required();
    add_common(train, opt);
    add_model_opts(train, opt);

    auto* evaluate = app.add_subcommand("evaluate", "cross-validated evaluation with reports");
    evaluate->add_option("features", opt.features_path, "features CSV from extract")->required();
    evaluate->add_option("provenance", opt.provenance_path, "provenance CSV (group join)")
        ->required();
    add_common(evaluate, opt);
    add_model_opts(evaluate, opt);
    evaluate->add_option("--folds", opt.cfg.n_folds, "cross-validation folds");
    evaluate->add_option("--threshold", opt.cfg.threshold, "decision threshold");

    auto* debug = app.add_subcommand("debug-superpixels", "emit segmentation debug images");
    debug->add_option("image", opt.image_path, "input image")->required();
    add_common(debug, opt);
    debug->add_option("--slic-k", opt.cfg.slic.k, "target superpixel count");
    debug->add_option("--slic-m", opt.cfg.slic.m, "SLIC compactness weight");
    debug->add_option("--red-threshold", opt.red_threshold, "red-dominance mask threshold");
    debug->add_option("--black-threshold", opt.black_threshold, "near-black mask threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        opt.cfg.model.kind = spcd::model_kind_from_name(opt.model_kind);
        if (!opt.transforms_csv.empty()) opt.cfg.transforms = parse_transforms(opt.transforms_csv);
        if (opt.balance_target > 0)
            opt.cfg.balance_target = static_cast<std::size_t>(opt.balance_target);

        if (*ingest) {
            spcd::OutputDir out(opt.out_dir);
            spcd::IngestSummary s = spcd::run_ingest(opt.manifest_path, &out);
            std::printf("manifest ok: %zu rows, %zu images\n", s.rows, s.images);
            print_counts("ischaemia", s.ischaemia);
            print_counts("infection", s.infection);
            for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        } else if (*augment) {
            spcd::OutputDir out(opt.out_dir);
            spcd::AugmentSummary s = spcd::run_augment(opt.manifest_path, opt.cfg, out);
            std::printf("wrote %zu patches from %zu sources (%s=0: %zu, %s=1: %zu)\n", s.patches,
                        s.sources, opt.cfg.task.c_str(), s.class0_patches, opt.cfg.task.c_str(),
                        s.class1_patches);
            if (s.balanced) std::printf("balanced to %zu patches per class\n", s.target);
            std::printf("provenance: %s\n", s.provenance_path.c_str());
        } else if (*extract) {
            spcd::OutputDir out(opt.out_dir);
            spcd::ExtractSummary s = spcd::run_extract(opt.provenance_path, opt.cfg, out);
            std::printf("extracted %zu features for %zu patches\n", s.features, s.patches);
            std::printf("features: %s\n", s.features_path.c_str());
        } else if (*train) {
            spcd::OutputDir out(opt.out_dir);
            spcd::TrainSummary s = spcd::run_train(opt.features_path, opt.cfg, out);
            std::printf("trained on %zu rows x %zu features\n", s.rows, s.features);
            if (!s.epoch_losses.empty())
                std::printf("final training loss: %.6f\n", s.epoch_losses.back());
            std::printf("model: %s\n", s.model_path.c_str());
        } else if (*evaluate) {
            spcd::OutputDir out(opt.out_dir);
            spcd::EvaluateSummary s =
                spcd::run_evaluate(opt.features_path, opt.provenance_path, opt.cfg, out);
            std::printf("%-12s %8s %8s\n", "metric", "mean", "std");
            for (const std::string& m : spcd::metric_names()) {
                auto [mean, sd] = s.cv.aggregate(m);
                std::printf("%-12s %8.4f %8.4f\n", m.c_str(), mean, sd);
            }
            std::printf("reports: %s\n", s.aggregated_path.c_str());
        } else if (*debug) {
            spcd::OutputDir out(opt.out_dir);
            spcd::DebugSummary s = spcd::run_debug_superpixels(
                opt.image_path, opt.cfg, opt.red_threshold, opt.black_threshold, out);
            std::printf("%d superpixels\n", s.superpixels);
            std::printf("painted:    %s\n", s.painted_path.c_str());
            std::printf("boundaries: %s\n", s.boundaries_path.c_str());
            std::printf("mask:       %s\n", s.mask_path.c_str());
        }
        return 0;
    } catch (const spcd::DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
