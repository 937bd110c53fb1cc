// Classifier front end: training dispatch over the three model kinds,
// scoring through the stored standardizer, and .spcdmodel serialization
// (a JSON document whose numeric arrays are base64 little-endian doubles,
// so save/load round-trips are bit-exact).
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "spcd/mlp.hpp"
#include "spcd/model.hpp"
#include "spcd/naive_bayes.hpp"
#include "spcd/random_forest.hpp"

namespace spcd {

inline constexpr int model_format_version = 1;

struct Model {
    ModelKind kind = ModelKind::naive_bayes;
    std::vector<std::string> feature_names;
    Standardizer standardizer;
    std::variant<GaussianNb, RandomForest, Mlp> impl;

    // Class-1 score in [0,1] for a raw (unstandardized) feature row.
    double predict_score(const std::vector<double>& row) const {
        std::vector<double> z = standardizer.apply(row);
        return std::visit([&](const auto& m) { return m.score(z); }, impl);
    }

    std::vector<double> predict_scores(const std::vector<std::vector<double>>& rows) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(predict_score(r));
        return out;
    }
};

inline Model train_model(const Dataset& data, const ModelParams& params,
                         TrainTrace* trace = nullptr) {
    data.validate();
    params.validate();
    Model model;
    model.kind = params.kind;
    model.feature_names = data.feature_names;
    model.standardizer = Standardizer::fit(data.x);
    std::vector<std::vector<double>> z(data.x.size());
    for (std::size_t i = 0; i < data.x.size(); ++i) z[i] = model.standardizer.apply(data.x[i]);
    switch (params.kind) {
        case ModelKind::naive_bayes:
            model.impl = train_naive_bayes(z, data.y, params);
            break;
        case ModelKind::random_forest:
            model.impl = train_random_forest(z, data.y, params);
            break;
        case ModelKind::mlp:
            model.impl = train_mlp(z, data.y, params, trace);
            break;
    }
    return model;
}

namespace detail {

inline std::vector<double> flatten_tree(const DecisionTree& t) {
    std::vector<double> out;
    out.reserve(t.nodes.size() * 5);
    for (const TreeNode& n : t.nodes) {
        out.push_back(static_cast<double>(n.feature));
        out.push_back(n.threshold);
        out.push_back(static_cast<double>(n.left));
        out.push_back(static_cast<double>(n.right));
        out.push_back(n.value);
    }
    return out;
}

inline DecisionTree unflatten_tree(const std::vector<double>& v) {
    if (v.empty() || v.size() % 5 != 0)
        throw std::runtime_error("model file: malformed tree block");
    DecisionTree t;
    t.nodes.resize(v.size() / 5);
    int count = static_cast<int>(t.nodes.size());
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        TreeNode& n = t.nodes[i];
        n.feature = static_cast<int>(v[i * 5]);
        n.threshold = v[i * 5 + 1];
        n.left = static_cast<int>(v[i * 5 + 2]);
        n.right = static_cast<int>(v[i * 5 + 3]);
        n.value = v[i * 5 + 4];
        bool leaf = n.feature < 0;
        if (!leaf && (n.left < 0 || n.left >= count || n.right < 0 || n.right >= count))
            throw std::runtime_error("model file: tree child index out of range");
    }
    return t;
}

}  // namespace detail

inline void save_model(const Model& model, const std::string& path) {
    nlohmann::json doc;
    doc["format"] = "spcdmodel";
    doc["version"] = model_format_version;
    doc["kind"] = model_kind_name(model.kind);
    doc["feature_names"] = model.feature_names;
    doc["standardizer"] = {{"mean", detail::encode_doubles(model.standardizer.mean)},
                           {"scale", detail::encode_doubles(model.standardizer.scale)}};
    nlohmann::json payload;
    if (const auto* nb = std::get_if<GaussianNb>(&model.impl)) {
        payload["priors"] = detail::encode_doubles({nb->log_prior0, nb->log_prior1});
        payload["mean0"] = detail::encode_doubles(nb->mean0);
        payload["var0"] = detail::encode_doubles(nb->var0);
        payload["mean1"] = detail::encode_doubles(nb->mean1);
        payload["var1"] = detail::encode_doubles(nb->var1);
    } else if (const auto* rf = std::get_if<RandomForest>(&model.impl)) {
        nlohmann::json trees = nlohmann::json::array();
        for (const DecisionTree& t : rf->trees)
            trees.push_back(detail::encode_doubles(detail::flatten_tree(t)));
        payload["trees"] = std::move(trees);
    } else if (const auto* mlp = std::get_if<Mlp>(&model.impl)) {
        payload["input"] = mlp->input;
        payload["hidden"] = mlp->hidden;
        payload["w"] = detail::encode_doubles(mlp->w);
    }
    doc["payload"] = std::move(payload);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << doc.dump(1, '\t') << '\n';
    if (!out) throw std::runtime_error("short write to model file: " + path);
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read model file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path + ": " + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "spcdmodel")
            throw std::runtime_error("not a spcdmodel file");
        if (doc.at("version").get<int>() != model_format_version)
            throw std::runtime_error("unsupported model version");

        Model model;
        model.kind = model_kind_from_name(doc.at("kind").get<std::string>());
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        const auto& st = doc.at("standardizer");
        model.standardizer.mean = detail::decode_doubles(st.at("mean").get<std::string>());
        model.standardizer.scale = detail::decode_doubles(st.at("scale").get<std::string>());
        if (model.standardizer.mean.size() != model.feature_names.size() ||
            model.standardizer.scale.size() != model.feature_names.size())
            throw std::runtime_error("standardizer width mismatch");

        const auto& payload = doc.at("payload");
        std::size_t d = model.feature_names.size();
        switch (model.kind) {
            case ModelKind::naive_bayes: {
                GaussianNb nb;
                std::vector<double> priors =
                    detail::decode_doubles(payload.at("priors").get<std::string>());
                if (priors.size() != 2) throw std::runtime_error("bad prior block");
                nb.log_prior0 = priors[0];
                nb.log_prior1 = priors[1];
                nb.mean0 = detail::decode_doubles(payload.at("mean0").get<std::string>());
                nb.var0 = detail::decode_doubles(payload.at("var0").get<std::string>());
                nb.mean1 = detail::decode_doubles(payload.at("mean1").get<std::string>());
                nb.var1 = detail::decode_doubles(payload.at("var1").get<std::string>());
                if (nb.mean0.size() != d || nb.var0.size() != d || nb.mean1.size() != d ||
                    nb.var1.size() != d)
                    throw std::runtime_error("naive bayes width mismatch");
                model.impl = std::move(nb);
                break;
            }
            case ModelKind::random_forest: {
                RandomForest rf;
                for (const auto& blob : payload.at("trees"))
                    rf.trees.push_back(
                        detail::unflatten_tree(detail::decode_doubles(blob.get<std::string>())));
                if (rf.trees.empty()) throw std::runtime_error("random forest has no trees");
                model.impl = std::move(rf);
                break;
            }
            case ModelKind::mlp: {
                Mlp mlp;
                mlp.input = payload.at("input").get<int>();
                mlp.hidden = payload.at("hidden").get<int>();
                if (mlp.input != static_cast<int>(d) || mlp.hidden < 1)
                    throw std::runtime_error("mlp shape mismatch");
                mlp.w = detail::decode_doubles(payload.at("w").get<std::string>());
                if (mlp.w.size() != mlp_param_count(mlp.input, mlp.hidden))
                    throw std::runtime_error("mlp weight count mismatch");
                model.impl = std::move(mlp);
                break;
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path + ": " + e.what());
    }
}

}  // namespace spcd
