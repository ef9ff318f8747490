#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fairbayes/calibration.hpp"
#include "fairbayes/errors.hpp"
#include "fairbayes/metrics.hpp"
#include "fairbayes/random.hpp"
#include "oracles.hpp"

using namespace fairbayes;

namespace {

struct RandomView {
    std::vector<double> scores;
    std::vector<Label> labels;
    GroupView view;
};

// Scores on a coarse lattice so ties are frequent.
RandomView random_view(Rng& rng, std::size_t n) {
    std::vector<double> s(n);
    std::vector<Label> y(n);
    const double p = 0.1 + 0.8 * rng.uniform01();
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(rng.uniform_index(41)) / 40.0;
        y[i] = rng.uniform01() < 0.5 * p + 0.5 * s[i] * p ? 1 : 0;
    }
    auto v = GroupView::build(0, s, y);
    return {std::move(s), std::move(y), std::move(v)};
}

struct Sample {
    std::vector<double> scores;
    std::vector<GroupId> groups;
    std::vector<Label> labels;
    ScoredSample span() const { return {scores, groups, labels}; }
};

Sample logistic_sample(Rng& rng, std::size_t n, std::vector<double> base_logits) {
    Sample s;
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<GroupId>(rng.uniform_index(base_logits.size()));
        const double eta = 1.0 / (1.0 + std::exp(-(base_logits[static_cast<std::size_t>(g)] + 1.5 * rng.normal())));
        s.scores.push_back(eta);
        s.groups.push_back(g);
        s.labels.push_back(rng.bernoulli(eta) ? 1 : 0);
    }
    return s;
}

}  // namespace

TEST_CASE("ppv_hat on a four-row view") {
    const auto v = GroupView::build(0, {0.9, 0.8, 0.6, 0.3}, {1, 0, 1, 0});
    CHECK(ppv_hat(v, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(ppv_hat(v, 0.0) == base_rate_hat(v));
    CHECK_THROWS_AS(ppv_hat(v, std::nextafter(0.9, 1.0)), UndefinedPpvError);
}

TEST_CASE("base_rate_hat examples") {
    CHECK(base_rate_hat(GroupView::build(0, {0.1, 0.2, 0.3, 0.4}, {1, 1, 0, 0})) == 0.5);
    CHECK(base_rate_hat(GroupView::build(0, {0.1, 0.2}, {1, 1})) == 1.0);
    Rng rng(17);
    std::vector<double> s(10000);
    std::vector<Label> y(10000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform01();
        y[i] = rng.bernoulli(0.2) ? 1 : 0;
    }
    CHECK(std::abs(base_rate_hat(GroupView::build(0, s, y)) - 0.2) < 0.02);
}

TEST_CASE("ppv_hat equals the double-loop count on 500 random views") {
    Rng rng(99);
    for (int rep = 0; rep < 500; ++rep) {
        const auto rv = random_view(rng, 1 + rng.uniform_index(200));
        for (int q = 0; q < 5; ++q) {
            const double t = static_cast<double>(rng.uniform_index(41)) / 40.0;
            const double expect = test::ppv_double_loop(rv.scores, rv.labels, t);
            if (std::isnan(expect)) {
                CHECK_THROWS_AS(ppv_hat(rv.view, t), UndefinedPpvError);
            } else {
                CHECK(ppv_hat(rv.view, t) == expect);
            }
        }
        CHECK(ppv_hat(rv.view, rv.view.min_score()) == base_rate_hat(rv.view));
    }
}

TEST_CASE("match_threshold examples") {
    const auto v = GroupView::build(0, {0.9, 0.7, 0.5, 0.3}, {1, 1, 0, 0});
    const auto m = match_threshold(v, 0.99);
    CHECK(m.threshold == 0.7);
    CHECK(m.achieved == 1.0);

    const auto at_base = match_threshold(v, 0.5);
    CHECK(at_base.threshold == 0.3);
    CHECK(at_base.achieved == 0.5);

    CHECK_THROWS_AS(match_threshold(v, 0.4), UnreachableTargetError);
}

TEST_CASE("matching a view against itself reproduces the target exactly") {
    Rng rng(4);
    const auto rv = random_view(rng, 150);
    for (double t : {0.2, 0.5, 0.8}) {
        if (rv.view.count_at_least(t) == 0) continue;
        const double target = ppv_hat(rv.view, t);
        CHECK(match_threshold(rv.view, target).achieved == target);
    }
}

TEST_CASE("match_threshold equals exhaustive candidate search on 500 random views") {
    Rng rng(123);
    for (int rep = 0; rep < 500; ++rep) {
        const auto rv = random_view(rng, 1 + rng.uniform_index(200));
        const double base = base_rate_hat(rv.view);
        const double target = base + (1.0 - base) * rng.uniform01();
        const auto got = match_threshold(rv.view, target);
        const auto want = test::match_exhaustive(rv.scores, rv.labels, target);
        CAPTURE(rep);
        CHECK(got.threshold == want.t);
        CHECK(got.achieved == want.achieved);
    }
}

TEST_CASE("predict uses a closed threshold") {
    const ThresholdSet th({0.4, 0.6});
    CHECK(predict(th, 0.4, 0) == 1);
    CHECK(predict(th, 0.59, 1) == 0);
    CHECK(predict(th, 0.6, 1) == 1);
    CHECK_THROWS_AS(predict(th, 0.5, 2), LookupError);
    const auto zeros = ThresholdSet::uniform(2, 0.0);
    const auto above = ThresholdSet::uniform(2, 1.5);
    for (double s : {0.0, 0.3, 1.0}) {
        CHECK(predict(zeros, s, 1) == 1);
        CHECK(predict(above, s, 0) == 0);
    }
}

TEST_CASE("condition check on identical groups holds") {
    Rng rng(8);
    const auto s = logistic_sample(rng, 4000, {-1.0});
    const auto v = GroupView::build(0, s.scores, s.labels);
    const auto w = GroupView::build(1, s.scores, s.labels);
    const std::vector<GroupView> views{v, w};
    const auto c = check_condition(views, {});
    CHECK(c.holds);
    CHECK(c.lhs >= c.rhs);
}

TEST_CASE("condition check fails when a base rate exceeds another group's PPV") {
    // Group 0: PPV at 0.5 is 0.6. Group 1: base rate 0.9.
    const auto g0 = GroupView::build(0, {0.9, 0.8, 0.7, 0.6, 0.55, 0.2, 0.1}, {1, 1, 0, 1, 0, 0, 0});
    std::vector<double> s1(10, 0.95);
    std::vector<Label> y1(10, 1);
    y1[0] = 0;
    const auto g1 = GroupView::build(1, s1, y1);
    const std::vector<GroupView> views{g0, g1};
    CHECK(ppv_hat(g0, 0.5) == doctest::Approx(0.6));
    const auto c = check_condition(views, {});
    CHECK_FALSE(c.holds);
    CHECK(c.rhs == doctest::Approx(0.9));
    CHECK_FALSE(c.diagnostic.empty());

    const std::vector<double> scores{0.9, 0.95};
    const std::vector<GroupId> groups{0, 1};
    const std::vector<Label> labels{1, 1};
    const auto r = calibrate(views, {scores, groups, labels}, {});
    CHECK_FALSE(r.condition_holds);
    CHECK_FALSE(r.thresholds.has_value());
}

TEST_CASE("undefined PPV at the cost threshold names the group") {
    const auto g0 = GroupView::build(0, {0.9, 0.1}, {1, 0});
    const auto g1 = GroupView::build(1, {0.3, 0.1}, {1, 0});
    const std::vector<GroupView> views{g0, g1};
    const auto c = check_condition(views, {});
    CHECK_FALSE(c.holds);
    CHECK(std::isnan(c.lhs));
    CHECK(c.diagnostic.find("group 1") != std::string::npos);
}

TEST_CASE("single-group calibration picks the smallest threshold in the separating gap") {
    const std::vector<double> scores{0.1, 0.2, 0.3, 0.6, 0.7, 0.8};
    const std::vector<GroupId> groups(6, 0);
    const std::vector<Label> labels{0, 0, 0, 1, 1, 1};
    const std::vector<GroupView> views{GroupView::build(0, scores, labels)};
    const auto r = calibrate(views, {scores, groups, labels}, {});
    REQUIRE(r.condition_holds);
    CHECK(r.anchor_t > 0.3);
    CHECK(r.anchor_t <= 0.6);
    const auto first_zero = std::find_if(r.risk_trace.begin(), r.risk_trace.end(),
                                         [](const RiskPoint& p) { return p.risk == 0.0; });
    REQUIRE(first_zero != r.risk_trace.end());
    CHECK(r.anchor_t == first_zero->t);
}

TEST_CASE("identical groups calibrate to equal thresholds and zero DPP") {
    Rng rng(31);
    const auto half = logistic_sample(rng, 3000, {-0.5});
    Sample s;
    for (int g = 0; g < 2; ++g) {
        s.scores.insert(s.scores.end(), half.scores.begin(), half.scores.end());
        s.labels.insert(s.labels.end(), half.labels.begin(), half.labels.end());
        s.groups.insert(s.groups.end(), half.scores.size(), g);
    }
    const auto views = group_views(s.groups, s.labels, 2, s.scores);
    const auto r = calibrate(views, s.span(), {});
    REQUIRE(r.thresholds);
    CHECK(r.thresholds->at(0) == r.thresholds->at(1));
    const auto preds = predict_all(*r.thresholds, s.scores, s.groups);
    CHECK(evaluate(preds, s.labels, s.groups, 0.5).dpp == 0.0);
}

TEST_CASE("risk trace covers the grid and the chosen threshold attains its minimum") {
    Rng rng(55);
    const auto s = logistic_sample(rng, 5000, {-1.2, 0.3, -0.4});
    const auto views = group_views(s.groups, s.labels, 3, s.scores);
    CalibrationConfig cfg;
    cfg.anchor_group = 1;
    const auto r = calibrate(views, s.span(), cfg);
    REQUIRE(r.thresholds);
    const double t_max = views[1].max_score();
    const auto steps = static_cast<std::size_t>(std::floor((t_max - r.t_min) / cfg.grid_step + 1e-9));
    CHECK(r.risk_trace.size() == steps + 1);
    CHECK(r.risk_trace.front().t == r.t_min);
    double min_risk = r.risk_trace.front().risk;
    double first_t = r.risk_trace.front().t;
    for (const auto& p : r.risk_trace) {
        if (p.risk < min_risk) {
            min_risk = p.risk;
            first_t = p.t;
        }
    }
    CHECK(r.anchor_t == first_t);
    const auto th = r.thresholds->values();
    CHECK(test::cost_risk_direct(s.scores, s.groups, s.labels, th, cfg.cost) == doctest::Approx(min_risk).epsilon(1e-12));
    for (int g = 0; g < 3; ++g) CHECK(th[static_cast<std::size_t>(g)] <= views[static_cast<std::size_t>(g)].max_score());
    CHECK(ppv_hat(views[1], r.t_min) >= *std::max_element(r.base_rates.begin(), r.base_rates.end()));
}

TEST_CASE("calibration is deterministic") {
    Rng rng(77);
    const auto s = logistic_sample(rng, 3000, {-1.0, 0.2});
    const auto views = group_views(s.groups, s.labels, 2, s.scores);
    const auto a = calibrate(views, s.span(), {});
    const auto b = calibrate(views, s.span(), {});
    CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("an anchor that never reaches the largest base rate is infeasible") {
    // With slack the condition passes, but the anchor PPV tops out at 1/2.
    const auto g0 = GroupView::build(0, {0.9, 0.8, 0.7, 0.2, 0.1, 0.05}, {0, 1, 0, 0, 0, 1});
    const auto g1 = GroupView::build(1, {0.9, 0.8, 0.6, 0.4}, {1, 1, 1, 0});
    const std::vector<GroupView> views{g0, g1};
    const std::vector<double> scores{0.9, 0.9};
    const std::vector<GroupId> groups{0, 1};
    const std::vector<Label> labels{0, 1};
    CalibrationConfig cfg;
    cfg.condition_slack = 1.0;
    CHECK_THROWS_AS(calibrate(views, {scores, groups, labels}, cfg), CalibrationInfeasibleError);
}

TEST_CASE("calibration config validation") {
    CalibrationConfig cfg;
    cfg.cost = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.grid_step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
