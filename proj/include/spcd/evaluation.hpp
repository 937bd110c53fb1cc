// Binary-classification evaluation: confusion counts, threshold metrics with
// explicit handling of empty denominators, ROC/AUC, and leakage-safe
// group-aware cross-validation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcd/classifier.hpp"
#include "spcd/model.hpp"
#include "spcd/rng.hpp"

namespace spcd {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fn = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fn + fp + tn; }
};

// Predicted positive iff score >= threshold.
inline ConfusionMatrix confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                                 double threshold) {
    if (scores.empty()) throw std::invalid_argument("confusion: empty input");
    if (scores.size() != labels.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool pred = scores[i] >= threshold;
        if (labels[i] == 1)
            (pred ? cm.tp : cm.fn)++;
        else
            (pred ? cm.fp : cm.tn)++;
    }
    return cm;
}

// The seven reported metrics. Ratio metrics with an empty denominator are
// defined as 0 and listed in `undefined` instead of propagating NaN, so
// aggregation stays total. auc is threshold-free and filled in separately.
struct MetricsReport {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double precision = 0.0;
    double specificity = 0.0;
    double f_measure = 0.0;
    double mcc = 0.0;
    double auc = 0.0;
    std::vector<std::string> undefined;

    bool is_undefined(const std::string& name) const {
        return std::find(undefined.begin(), undefined.end(), name) != undefined.end();
    }
};

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "accuracy", "sensitivity", "precision", "specificity", "f_measure", "mcc", "auc"};
    return names;
}

inline double metric_value(const MetricsReport& r, const std::string& name) {
    if (name == "accuracy") return r.accuracy;
    if (name == "sensitivity") return r.sensitivity;
    if (name == "precision") return r.precision;
    if (name == "specificity") return r.specificity;
    if (name == "f_measure") return r.f_measure;
    if (name == "mcc") return r.mcc;
    if (name == "auc") return r.auc;
    throw std::invalid_argument("unknown metric: " + name);
}

inline MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("metrics: empty confusion matrix");
    MetricsReport r;
    auto ratio = [&r](std::int64_t num, std::int64_t den, const char* name) {
        if (den == 0) {
            r.undefined.push_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    r.sensitivity = ratio(cm.tp, cm.tp + cm.fn, "sensitivity");
    r.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    r.specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity");
    if (r.precision + r.sensitivity > 0.0)
        r.f_measure = 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity);
    else
        r.undefined.push_back("f_measure");
    double d1 = static_cast<double>(cm.tp + cm.fp), d2 = static_cast<double>(cm.tp + cm.fn);
    double d3 = static_cast<double>(cm.tn + cm.fp), d4 = static_cast<double>(cm.tn + cm.fn);
    double denom = std::sqrt(d1 * d2 * d3 * d4);
    if (denom > 0.0)
        r.mcc = (static_cast<double>(cm.tp) * cm.tn - static_cast<double>(cm.fp) * cm.fn) / denom;
    else
        r.undefined.push_back("mcc");
    return r;
}

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

// Threshold sweep over the distinct scores in descending order, ties grouped
// into single steps, anchored at (0,0) and ending at (1,1).
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    if (scores.empty()) throw std::invalid_argument("roc: empty input");
    if (scores.size() != labels.size()) throw std::invalid_argument("roc: length mismatch");
    std::int64_t n1 = 0;
    for (int v : labels) n1 += v;
    std::int64_t n0 = static_cast<std::int64_t>(labels.size()) - n1;
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("roc: needs both classes");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> curve;
    curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        curve.push_back({s, static_cast<double>(fp) / static_cast<double>(n0),
                         static_cast<double>(tp) / static_cast<double>(n1)});
    }
    return curve;
}

inline double auc(const std::vector<RocPoint>& curve) {
    if (curve.size() < 2) throw std::invalid_argument("auc: degenerate curve");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    return area;
}

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    return auc(roc_curve(scores, labels));
}

struct RoleRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    void validate() const {
        if (!(train > 0.0) || !(test > 0.0) || val < 0.0)
            throw std::invalid_argument("ratios: train and test must be positive, val >= 0");
        if (std::fabs(train + val + test - 1.0) > 1e-9)
            throw std::invalid_argument("ratios: must sum to 1");
    }
};

// Per-fold role assignment. `train`/`val`/`test` hold patch ids; the
// grouping key is the source-image id, so every patch of one source image
// lands in the same role within a fold. `group_test_fold` records which fold
// tests each group; the test sets partition the groups across folds.
struct FoldAssignment {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

struct FoldPlan {
    int n_folds = 0;
    std::vector<FoldAssignment> folds;                 // patch ids
    std::vector<FoldAssignment> group_roles;           // group ids, same layout
    std::map<std::string, int> group_test_fold;
};

inline FoldPlan make_fold_plan(const std::vector<std::string>& patch_ids,
                               const std::vector<std::string>& groups,
                               const std::vector<int>& labels, int n_folds, std::uint64_t seed,
                               const RoleRatios& ratios = {}) {
    if (patch_ids.empty() || patch_ids.size() != groups.size() ||
        patch_ids.size() != labels.size())
        throw std::invalid_argument("fold plan: size mismatch or empty");
    if (n_folds < 2) throw std::invalid_argument("fold plan: need at least 2 folds");
    ratios.validate();

    // Distinct groups in first-appearance order, with per-group class votes.
    std::vector<std::string> group_ids;
    std::map<std::string, std::size_t> index;
    std::vector<std::int64_t> pos, neg;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        auto [it, inserted] = index.try_emplace(groups[i], group_ids.size());
        if (inserted) {
            group_ids.push_back(groups[i]);
            pos.push_back(0);
            neg.push_back(0);
        }
        (labels[i] == 1 ? pos : neg)[it->second]++;
    }

    // Stratified test assignment: shuffle each class's groups, deal
    // round-robin so every group tests in exactly one fold.
    std::vector<int> test_fold(group_ids.size(), -1);
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t g = 0; g < group_ids.size(); ++g)
            if ((pos[g] >= neg[g] ? 1 : 0) == cls) members.push_back(g);
        if (!members.empty() && members.size() < static_cast<std::size_t>(n_folds))
            throw std::invalid_argument("fold plan: too few groups in one class");
        Rng rng(derive_seed(seed, "fold_test", static_cast<std::uint64_t>(cls)));
        rng.shuffle(members);
        for (std::size_t j = 0; j < members.size(); ++j)
            test_fold[members[j]] = static_cast<int>(j % static_cast<std::size_t>(n_folds));
    }

    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.folds.resize(static_cast<std::size_t>(n_folds));
    plan.group_roles.resize(static_cast<std::size_t>(n_folds));
    for (std::size_t g = 0; g < group_ids.size(); ++g)
        plan.group_test_fold[group_ids[g]] = test_fold[g];

    const double val_share = ratios.val / (ratios.train + ratios.val);
    for (int f = 0; f < n_folds; ++f) {
        FoldAssignment& roles = plan.group_roles[static_cast<std::size_t>(f)];
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<std::size_t> rest;
            for (std::size_t g = 0; g < group_ids.size(); ++g) {
                if ((pos[g] >= neg[g] ? 1 : 0) != cls) continue;
                if (test_fold[g] == f)
                    roles.test.push_back(group_ids[g]);
                else
                    rest.push_back(g);
            }
            Rng rng(derive_seed(seed, "fold_val", static_cast<std::uint64_t>(f),
                                static_cast<std::uint64_t>(cls)));
            rng.shuffle(rest);
            std::size_t n_val = static_cast<std::size_t>(
                std::lround(val_share * static_cast<double>(rest.size())));
            for (std::size_t j = 0; j < rest.size(); ++j)
                (j < n_val ? roles.val : roles.train).push_back(group_ids[rest[j]]);
        }
        std::sort(roles.train.begin(), roles.train.end());
        std::sort(roles.val.begin(), roles.val.end());
        std::sort(roles.test.begin(), roles.test.end());
        if (roles.train.empty() || roles.test.empty())
            throw std::invalid_argument("fold plan: a fold came out without train or test groups");

        FoldAssignment& fold = plan.folds[static_cast<std::size_t>(f)];
        for (std::size_t i = 0; i < patch_ids.size(); ++i) {
            const std::string& g = groups[i];
            if (std::binary_search(roles.test.begin(), roles.test.end(), g))
                fold.test.push_back(patch_ids[i]);
            else if (std::binary_search(roles.val.begin(), roles.val.end(), g))
                fold.val.push_back(patch_ids[i]);
            else
                fold.train.push_back(patch_ids[i]);
        }
    }
    return plan;
}

// Sample mean and (n-1) standard deviation; std is 0 for a single value.
inline std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean_std: empty");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

struct CvFoldResult {
    ConfusionMatrix confusion;
    MetricsReport metrics;  // auc filled in
    std::vector<RocPoint> roc;
    std::size_t n_train_rows = 0;
    std::size_t n_test_rows = 0;
};

struct CvResult {
    FoldPlan plan;
    std::vector<CvFoldResult> folds;

    std::vector<double> metric_values(const std::string& name) const {
        std::vector<double> out;
        out.reserve(folds.size());
        for (const auto& f : folds) out.push_back(metric_value(f.metrics, name));
        return out;
    }
    std::pair<double, double> aggregate(const std::string& name) const {
        return mean_std(metric_values(name));
    }
};

// Group-aware k-fold CV: per fold, fit on train-role rows only and score the
// test-role rows at the given threshold. Validation rows are held out.
inline CvResult cross_validate(const Dataset& data, const ModelParams& params, int n_folds,
                               std::uint64_t seed, double threshold = 0.5,
                               const RoleRatios& ratios = {}) {
    data.validate();
    if (data.groups.empty()) throw std::invalid_argument("cross_validate: dataset has no groups");

    std::vector<std::string> ids = data.ids;
    if (ids.empty()) {
        ids.resize(data.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = "row" + std::to_string(i);
    }

    CvResult result;
    result.plan = make_fold_plan(ids, data.groups, data.y, n_folds, seed, ratios);
    for (int f = 0; f < n_folds; ++f) {
        try {
            const FoldAssignment& roles = result.plan.group_roles[static_cast<std::size_t>(f)];
            auto role_of = [&](const std::string& g) {
                if (std::binary_search(roles.test.begin(), roles.test.end(), g)) return 2;
                if (std::binary_search(roles.val.begin(), roles.val.end(), g)) return 1;
                return 0;
            };
            Dataset train;
            train.feature_names = data.feature_names;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (role_of(data.groups[i]) == 0) {
                    train.x.push_back(data.x[i]);
                    train.y.push_back(data.y[i]);
                    train.groups.push_back(data.groups[i]);
                }
            }
            Model model = train_model(train, params);
            std::vector<double> scores;
            std::vector<int> labels;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (role_of(data.groups[i]) == 2) {
                    scores.push_back(model.predict_score(data.x[i]));
                    labels.push_back(data.y[i]);
                }
            }
            CvFoldResult fr;
            fr.confusion = confusion(scores, labels, threshold);
            fr.metrics = metrics(fr.confusion);
            fr.roc = roc_curve(scores, labels);
            fr.metrics.auc = auc(fr.roc);
            fr.n_train_rows = train.size();
            fr.n_test_rows = scores.size();
            result.folds.push_back(std::move(fr));
        } catch (const DivergenceError& e) {
            throw DivergenceError("fold " + std::to_string(f) + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("fold " + std::to_string(f) + ": " + e.what());
        }
    }
    return result;
}

}  // namespace spcd
