#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spcd/evaluation.hpp"
#include "spcd/rng.hpp"

using namespace spcd;

namespace {

// O(n^2) Mann-Whitney pair counting, ties scored 1/2.
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

MetricsReport direct_metrics(const ConfusionMatrix& cm) {
    MetricsReport r;
    double tp = static_cast<double>(cm.tp), fn = static_cast<double>(cm.fn);
    double fp = static_cast<double>(cm.fp), tn = static_cast<double>(cm.tn);
    r.accuracy = (tp + tn) / (tp + tn + fp + fn);
    r.sensitivity = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    r.specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    r.f_measure = r.precision + r.sensitivity > 0
                      ? 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity)
                      : 0.0;
    double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    r.mcc = den > 0 ? (tp * tn - fp * fn) / den : 0.0;
    return r;
}

struct CvFixture {
    Dataset data;
};

// Separable grouped dataset: `groups_per_class` source images per class,
// `patches` rows per source.
CvFixture make_cv_fixture(int groups_per_class, int patches, std::uint64_t seed) {
    Rng rng(seed);
    CvFixture fx;
    fx.data.feature_names = {"x0", "x1"};
    int next_patch = 0;
    for (int g = 0; g < 2 * groups_per_class; ++g) {
        int label = g < groups_per_class ? 0 : 1;
        std::string group = "src" + std::to_string(g);
        for (int p = 0; p < patches; ++p) {
            fx.data.x.push_back(
                {label * 4.0 + 0.2 * rng.next_normal(), 0.2 * rng.next_normal()});
            fx.data.y.push_back(label);
            fx.data.ids.push_back("patch" + std::to_string(next_patch++));
            fx.data.groups.push_back(group);
        }
    }
    return fx;
}

}  // namespace

TEST_CASE("confusion counts threshold crossings") {
    ConfusionMatrix cm = confusion({0.9, 0.1}, {1, 0}, 0.5);
    REQUIRE(cm.tp == 1);
    REQUIRE(cm.tn == 1);
    REQUIRE(cm.fp == 0);
    REQUIRE(cm.fn == 0);
}

TEST_CASE("zero threshold predicts everything positive") {
    ConfusionMatrix cm = confusion({0.9, 0.4, 0.1}, {1, 0, 1}, 0.0);
    REQUIRE(cm.tn == 0);
    REQUIRE(cm.fn == 0);
    REQUIRE(cm.tp == 2);
    REQUIRE(cm.fp == 1);
}

TEST_CASE("scores equal to the threshold are positive") {
    ConfusionMatrix cm = confusion({0.5}, {1}, 0.5);
    REQUIRE(cm.tp == 1);
}

TEST_CASE("confusion matches direct counting on random data") {
    Rng rng(111);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 1 + rng.next_below(100);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (auto& s : scores) s = rng.next_double();
        for (auto& l : labels) l = static_cast<int>(rng.next_below(2));
        double threshold = rng.next_double();
        ConfusionMatrix cm = confusion(scores, labels, threshold);
        std::int64_t tp = 0, fn = 0, fp = 0, tn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool pred = scores[i] >= threshold;
            if (labels[i] && pred) ++tp;
            if (labels[i] && !pred) ++fn;
            if (!labels[i] && pred) ++fp;
            if (!labels[i] && !pred) ++tn;
        }
        REQUIRE(cm.tp == tp);
        REQUIRE(cm.fn == fn);
        REQUIRE(cm.fp == fp);
        REQUIRE(cm.tn == tn);
        REQUIRE(cm.total() == static_cast<std::int64_t>(n));
    }
}

TEST_CASE("confusion validates input") {
    REQUIRE_THROWS_AS(confusion({}, {}, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(confusion({0.5}, {1, 0}, 0.5), std::invalid_argument);
}

TEST_CASE("a perfect classifier scores one on every metric") {
    MetricsReport r = metrics({50, 0, 0, 50});
    REQUIRE(r.accuracy == 1.0);
    REQUIRE(r.sensitivity == 1.0);
    REQUIRE(r.precision == 1.0);
    REQUIRE(r.specificity == 1.0);
    REQUIRE(r.f_measure == 1.0);
    REQUIRE(r.mcc == 1.0);
    REQUIRE(r.undefined.empty());
}

TEST_CASE("metrics match the worked confusion example") {
    // tp=90, fn=10, fp=20, tn=80
    MetricsReport r = metrics({90, 10, 20, 80});
    REQUIRE(r.sensitivity == Catch::Approx(0.900).margin(1e-9));
    REQUIRE(r.specificity == Catch::Approx(0.800).margin(1e-9));
    REQUIRE(r.precision == Catch::Approx(90.0 / 110.0).margin(1e-9));
    REQUIRE(r.accuracy == Catch::Approx(0.850).margin(1e-9));
    REQUIRE(r.f_measure == Catch::Approx(180.0 / 210.0).margin(1e-9));
    REQUIRE(r.mcc == Catch::Approx(0.704).margin(0.001));
}

TEST_CASE("all-positive predictions on balanced data") {
    MetricsReport r = metrics({50, 0, 50, 0});
    REQUIRE(r.sensitivity == 1.0);
    REQUIRE(r.specificity == 0.0);
    REQUIRE_FALSE(r.is_undefined("specificity"));  // denominator fp=50 is fine
    REQUIRE(r.is_undefined("mcc"));                // tn+fn = 0
    REQUIRE(r.mcc == 0.0);
}

TEST_CASE("empty denominators are flagged, not NaN") {
    // No positive labels at all: tp=fn=0.
    MetricsReport r = metrics({0, 0, 3, 7});
    REQUIRE(r.is_undefined("sensitivity"));
    REQUIRE(r.sensitivity == 0.0);
    REQUIRE(r.is_undefined("f_measure"));
    REQUIRE(std::isfinite(r.mcc));
    REQUIRE_THROWS_AS(metrics({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("metrics match the direct formulas on random matrices") {
    Rng rng(112);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionMatrix cm{static_cast<std::int64_t>(rng.next_below(50)),
                           static_cast<std::int64_t>(rng.next_below(50)),
                           static_cast<std::int64_t>(rng.next_below(50)),
                           static_cast<std::int64_t>(rng.next_below(50))};
        if (cm.total() == 0) continue;
        MetricsReport got = metrics(cm);
        MetricsReport want = direct_metrics(cm);
        REQUIRE(got.accuracy == Catch::Approx(want.accuracy).margin(1e-12));
        REQUIRE(got.sensitivity == Catch::Approx(want.sensitivity).margin(1e-12));
        REQUIRE(got.precision == Catch::Approx(want.precision).margin(1e-12));
        REQUIRE(got.specificity == Catch::Approx(want.specificity).margin(1e-12));
        REQUIRE(got.f_measure == Catch::Approx(want.f_measure).margin(1e-12));
        REQUIRE(got.mcc == Catch::Approx(want.mcc).margin(1e-12));
        REQUIRE(got.mcc >= -1.0);
        REQUIRE(got.mcc <= 1.0);
    }
}

TEST_CASE("label swap with complemented predictions swaps sensitivity and specificity") {
    Rng rng(113);
    for (int trial = 0; trial < 50; ++trial) {
        ConfusionMatrix cm{1 + static_cast<std::int64_t>(rng.next_below(40)),
                           1 + static_cast<std::int64_t>(rng.next_below(40)),
                           1 + static_cast<std::int64_t>(rng.next_below(40)),
                           1 + static_cast<std::int64_t>(rng.next_below(40))};
        ConfusionMatrix swapped{cm.tn, cm.fp, cm.fn, cm.tp};
        MetricsReport a = metrics(cm);
        MetricsReport b = metrics(swapped);
        REQUIRE(a.sensitivity == Catch::Approx(b.specificity).margin(1e-12));
        REQUIRE(a.specificity == Catch::Approx(b.sensitivity).margin(1e-12));
        REQUIRE(a.accuracy == Catch::Approx(b.accuracy).margin(1e-12));
        REQUIRE(std::fabs(a.mcc) == Catch::Approx(std::fabs(b.mcc)).margin(1e-12));
    }
}

TEST_CASE("metric_names lists the seven reported metrics in order") {
    REQUIRE(metric_names() == std::vector<std::string>{"accuracy", "sensitivity", "precision",
                                                       "specificity", "f_measure", "mcc", "auc"});
    MetricsReport r = metrics({1, 1, 1, 1});
    for (const auto& name : metric_names()) REQUIRE(std::isfinite(metric_value(r, name)));
    REQUIRE_THROWS_AS(metric_value(r, "kappa"), std::invalid_argument);
}

TEST_CASE("roc of a perfect separator passes through (0,1)") {
    std::vector<RocPoint> curve = roc_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    REQUIRE(curve.front().fpr == 0.0);
    REQUIRE(curve.front().tpr == 0.0);
    REQUIRE(curve.back().fpr == 1.0);
    REQUIRE(curve.back().tpr == 1.0);
    bool hits_corner = false;
    for (const auto& p : curve) hits_corner |= p.fpr == 0.0 && p.tpr == 1.0;
    REQUIRE(hits_corner);
    REQUIRE(auc(curve) == 1.0);
}

TEST_CASE("constant scores give the chance diagonal") {
    std::vector<RocPoint> curve = roc_curve({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
    REQUIRE(curve.size() == 2);
    REQUIRE(auc(curve) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("tied scores collapse into one roc step") {
    std::vector<RocPoint> curve = roc_curve({0.8, 0.8, 0.3}, {1, 0, 0});
    REQUIRE(curve.size() == 3);
    REQUIRE(curve[1].fpr == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(curve[1].tpr == 1.0);
    REQUIRE(auc(curve) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("trapezoidal auc equals the mann-whitney statistic") {
    Rng rng(114);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 2 + rng.next_below(120);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool tied_grid = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            // Every other trial quantizes scores to force ties.
            scores[i] = tied_grid ? rng.next_below(8) / 8.0 : rng.next_double();
            labels[i] = static_cast<int>(rng.next_below(2));
        }
        labels[0] = 1;
        labels[n - 1] = 0;
        REQUIRE(auc(scores, labels) ==
                Catch::Approx(mann_whitney_auc(scores, labels)).margin(1e-9));
    }
}

TEST_CASE("auc is invariant under cubing the scores") {
    Rng rng(115);
    std::vector<double> scores(60);
    std::vector<int> labels(60);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.next_double();
        labels[i] = static_cast<int>(rng.next_below(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> cubed(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) cubed[i] = scores[i] * scores[i] * scores[i];
    std::vector<RocPoint> a = roc_curve(scores, labels);
    std::vector<RocPoint> b = roc_curve(cubed, labels);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].fpr == b[i].fpr);
        REQUIRE(a[i].tpr == b[i].tpr);
    }
    REQUIRE(auc(a) == auc(b));
}

TEST_CASE("roc rejects degenerate input") {
    REQUIRE_THROWS_AS(roc_curve({}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(roc_curve({0.5, 0.6}, {1, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(auc(std::vector<RocPoint>{{0.0, 0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("mean_std matches the worked aggregation example") {
    auto [mean, sd] = mean_std({0.8, 0.8, 0.8, 0.8, 0.9});
    REQUIRE(mean == Catch::Approx(0.82).margin(1e-12));
    REQUIRE(sd == Catch::Approx(0.0447).margin(0.0001));
    auto [m1, s1] = mean_std({0.3});
    REQUIRE(m1 == 0.3);
    REQUIRE(s1 == 0.0);
    REQUIRE_THROWS_AS(mean_std({}), std::invalid_argument);
}

TEST_CASE("fold plan partitions groups across test sets") {
    std::vector<std::string> ids, groups;
    std::vector<int> labels;
    for (int g = 0; g < 20; ++g) {
        for (int p = 0; p < 3; ++p) {
            ids.push_back("patch" + std::to_string(g) + "_" + std::to_string(p));
            groups.push_back("img" + std::to_string(g));
            labels.push_back(g < 10 ? 0 : 1);
        }
    }
    FoldPlan plan = make_fold_plan(ids, groups, labels, 5, 42);
    REQUIRE(plan.n_folds == 5);
    REQUIRE(plan.folds.size() == 5);

    // Every group tests exactly once across the plan.
    std::map<std::string, int> test_count;
    for (const auto& roles : plan.group_roles)
        for (const auto& g : roles.test) test_count[g]++;
    REQUIRE(test_count.size() == 20);
    for (const auto& [g, c] : test_count) REQUIRE(c == 1);

    // group_test_fold agrees with the role lists.
    for (int f = 0; f < 5; ++f)
        for (const auto& g : plan.group_roles[static_cast<std::size_t>(f)].test)
            REQUIRE(plan.group_test_fold.at(g) == f);
}

TEST_CASE("fold plan never splits a group across roles") {
    std::vector<std::string> ids, groups;
    std::vector<int> labels;
    Rng rng(116);
    for (int g = 0; g < 14; ++g) {
        int per = 1 + static_cast<int>(rng.next_below(5));
        for (int p = 0; p < per; ++p) {
            ids.push_back("p" + std::to_string(g) + "_" + std::to_string(p));
            groups.push_back("src" + std::to_string(g));
            labels.push_back(g % 2);
        }
    }
    FoldPlan plan = make_fold_plan(ids, groups, labels, 5, 7);
    std::map<std::string, std::string> group_of;
    for (std::size_t i = 0; i < ids.size(); ++i) group_of[ids[i]] = groups[i];

    for (const auto& fold : plan.folds) {
        std::set<std::string> train_groups, val_groups, test_groups;
        for (const auto& id : fold.train) train_groups.insert(group_of[id]);
        for (const auto& id : fold.val) val_groups.insert(group_of[id]);
        for (const auto& id : fold.test) test_groups.insert(group_of[id]);
        for (const auto& g : train_groups) {
            REQUIRE_FALSE(val_groups.count(g));
            REQUIRE_FALSE(test_groups.count(g));
        }
        for (const auto& g : val_groups) REQUIRE_FALSE(test_groups.count(g));
        REQUIRE(fold.train.size() + fold.val.size() + fold.test.size() == ids.size());
    }
}

TEST_CASE("fold plan follows the 70/10/20 ratios at group level") {
    std::vector<std::string> ids, groups;
    std::vector<int> labels;
    for (int g = 0; g < 100; ++g) {
        ids.push_back("p" + std::to_string(g));
        groups.push_back("src" + std::to_string(g));
        labels.push_back(g < 50 ? 0 : 1);
    }
    FoldPlan plan = make_fold_plan(ids, groups, labels, 5, 99);
    for (const auto& roles : plan.group_roles) {
        REQUIRE(roles.test.size() == 20);   // 100/5
        REQUIRE(roles.val.size() == 10);    // 0.125 of the remaining 80
        REQUIRE(roles.train.size() == 70);
    }
}

TEST_CASE("fold plans replay from their seed") {
    std::vector<std::string> ids, groups;
    std::vector<int> labels;
    for (int g = 0; g < 12; ++g) {
        ids.push_back("p" + std::to_string(g));
        groups.push_back("s" + std::to_string(g));
        labels.push_back(g % 2);
    }
    FoldPlan a = make_fold_plan(ids, groups, labels, 3, 5);
    FoldPlan b = make_fold_plan(ids, groups, labels, 3, 5);
    REQUIRE(a.group_test_fold == b.group_test_fold);
    for (int f = 0; f < 3; ++f) {
        REQUIRE(a.folds[static_cast<std::size_t>(f)].train ==
                b.folds[static_cast<std::size_t>(f)].train);
        REQUIRE(a.folds[static_cast<std::size_t>(f)].val ==
                b.folds[static_cast<std::size_t>(f)].val);
        REQUIRE(a.folds[static_cast<std::size_t>(f)].test ==
                b.folds[static_cast<std::size_t>(f)].test);
    }
}

TEST_CASE("fold plan rejects unusable input") {
    std::vector<std::string> ids = {"a", "b", "c", "d"};
    std::vector<std::string> groups = {"g1", "g2", "g3", "g4"};
    std::vector<int> labels = {0, 0, 1, 1};
    // Only 2 groups per class but 5 folds requested.
    REQUIRE_THROWS_AS(make_fold_plan(ids, groups, labels, 5, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_fold_plan(ids, groups, labels, 1, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_fold_plan({}, {}, {}, 5, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_fold_plan(ids, {"g1"}, labels, 2, 1), std::invalid_argument);
    RoleRatios bad{0.5, 0.2, 0.2};
    REQUIRE_THROWS_AS(make_fold_plan(ids, groups, labels, 2, 1, bad), std::invalid_argument);
}

TEST_CASE("cross validation on separable grouped data is perfect and stable") {
    CvFixture fx = make_cv_fixture(10, 4, 117);
    ModelParams params;
    params.kind = ModelKind::naive_bayes;
    CvResult result = cross_validate(fx.data, params, 5, 31);
    REQUIRE(result.folds.size() == 5);
    for (const auto& fold : result.folds) {
        REQUIRE(fold.metrics.accuracy == 1.0);
        REQUIRE(fold.metrics.auc == 1.0);
        REQUIRE(fold.roc.size() >= 2);
        REQUIRE(fold.n_test_rows > 0);
    }
    auto [acc_mean, acc_std] = result.aggregate("accuracy");
    REQUIRE(acc_mean == 1.0);
    REQUIRE(acc_std == 0.0);
    for (const auto& name : metric_names()) REQUIRE(result.metric_values(name).size() == 5);
}

TEST_CASE("cross validation holds the validation role out") {
    CvFixture fx = make_cv_fixture(10, 4, 118);
    ModelParams params;
    params.kind = ModelKind::naive_bayes;
    CvResult result = cross_validate(fx.data, params, 5, 32);
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        std::size_t val_rows = result.plan.folds[f].val.size();
        REQUIRE(val_rows > 0);
        REQUIRE(result.folds[f].n_train_rows + result.folds[f].n_test_rows + val_rows ==
                fx.data.size());
    }
}

TEST_CASE("cross validation replays from its seed") {
    CvFixture fx = make_cv_fixture(8, 3, 119);
    ModelParams params;
    params.kind = ModelKind::random_forest;
    params.rf_trees = 15;
    params.seed = 4;
    CvResult a = cross_validate(fx.data, params, 4, 77);
    CvResult b = cross_validate(fx.data, params, 4, 77);
    for (std::size_t f = 0; f < a.folds.size(); ++f) {
        REQUIRE(a.folds[f].metrics.accuracy == b.folds[f].metrics.accuracy);
        REQUIRE(a.folds[f].metrics.auc == b.folds[f].metrics.auc);
        REQUIRE(a.folds[f].confusion.tp == b.folds[f].confusion.tp);
    }
}

TEST_CASE("cross validation failures carry the fold id and keep their type") {
    CvFixture fx = make_cv_fixture(6, 2, 120);
    ModelParams params;
    params.kind = ModelKind::mlp;
    params.mlp_lr = 1e100;
    params.mlp_epochs = 30;
    REQUIRE_THROWS_AS(cross_validate(fx.data, params, 3, 9), DivergenceError);
    REQUIRE_THROWS_WITH(cross_validate(fx.data, params, 3, 9),
                        Catch::Matchers::StartsWith("fold "));
}

TEST_CASE("cross validation requires groups") {
    CvFixture fx = make_cv_fixture(6, 2, 121);
    fx.data.groups.clear();
    ModelParams params;
    REQUIRE_THROWS_AS(cross_validate(fx.data, params, 3, 9), std::invalid_argument);
}
