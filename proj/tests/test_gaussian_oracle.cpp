#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fairbayes/errors.hpp"
#include "fairbayes/gaussian_oracle.hpp"
#include "fairbayes/random.hpp"
#include "oracles.hpp"

using namespace fairbayes;
using oracle::GaussianModelSpec;

namespace {

const GaussianModelSpec table1_spec(double p) { return GaussianModelSpec::binary(0.3, 0.2, p); }

// Population risk of group-wise thresholds straight from the printed closed
// form, with Phi evaluated by its series expansion.
double risk_reference(const GaussianModelSpec& s, const std::vector<double>& th, double c) {
    double r = 0.0;
    for (std::size_t a = 0; a < th.size(); ++a) {
        const double p = s.label_probs[a];
        const double log_q = std::log(th[a] * (1.0 - p) / ((1.0 - th[a]) * p));
        const double z = s.sigma * log_q / 2.0;
        r += (1.0 - c) * s.group_probs[a] * p * test::normal_cdf_series(z - 1.0 / s.sigma);
        r += c * s.group_probs[a] * (1.0 - p) * (1.0 - test::normal_cdf_series(z + 1.0 / s.sigma));
    }
    return r;
}

struct MonteCarloPpv {
    double ppv;
    double se;
};

// Draws (y, x_k) for one group with a standard-library generator and scores
// each draw with the density ratio of the two class-conditional Gaussians.
MonteCarloPpv monte_carlo_ppv(double p, double sigma, double t, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution label(p);
    std::normal_distribution<double> noise(0.0, sigma);
    std::size_t selected = 0, positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = label(gen) ? 1 : 0;
        const double x = (2.0 * y - 1.0) + noise(gen);
        const double g1 = std::exp(-(x - 1.0) * (x - 1.0) / (2.0 * sigma * sigma));
        const double g0 = std::exp(-(x + 1.0) * (x + 1.0) / (2.0 * sigma * sigma));
        const double eta = p * g1 / (p * g1 + (1.0 - p) * g0);
        if (eta >= t) {
            ++selected;
            positive += static_cast<std::size_t>(y);
        }
    }
    const double ppv = static_cast<double>(positive) / static_cast<double>(selected);
    return {ppv, std::sqrt(ppv * (1.0 - ppv) / static_cast<double>(selected))};
}

}  // namespace

TEST_CASE("eta examples") {
    const auto s = GaussianModelSpec::binary(0.3, 0.2, 0.5);
    const std::vector<double> on_axis{0.7, 0.0};
    CHECK(oracle::eta(s, on_axis, 0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(oracle::eta(s, on_axis, 1) == doctest::Approx(0.5).epsilon(1e-14));
    const std::vector<double> x{0.0, 1.0};
    CHECK(oracle::eta(s, x, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-14));
    const std::vector<double> far{0.0, 200.0};
    CHECK(oracle::eta(s, far, 0) > 1.0 - 1e-12);
    CHECK(oracle::eta(s, far, 0) <= 1.0);
}

TEST_CASE("closed-form PPV at t = p") {
    const auto s = table1_spec(0.6);
    // 0.2 Phi(0.5) / (0.2 Phi(0.5) + 0.8 Phi(-0.5)), high-precision reference.
    CHECK(oracle::ppv_closed_form(s, 0, 0.2) == doctest::Approx(0.35908700195704875).epsilon(1e-12));
    const double phi_hi = test::normal_cdf_series(0.5), phi_lo = test::normal_cdf_series(-0.5);
    CHECK(oracle::ppv_closed_form(s, 0, 0.2) == doctest::Approx(0.2 * phi_hi / (0.2 * phi_hi + 0.8 * phi_lo)).epsilon(1e-12));
    CHECK_THROWS_AS(oracle::ppv_closed_form(s, 0, 0.0), DomainError);
    CHECK_THROWS_AS(oracle::ppv_closed_form(s, 0, 1.0), DomainError);
}

TEST_CASE("condition constant at the reference settings") {
    const auto s = table1_spec(0.6);
    CHECK(std::abs(oracle::condition_rhs(s, 0.5) - 0.613) <= 0.002);
    CHECK(oracle::condition_rhs(s, 0.5) == doctest::Approx(0.61301406).epsilon(1e-8));
    for (double p : {0.2, 0.3, 0.4, 0.5, 0.6}) CHECK(oracle::check_condition(table1_spec(p), 0.5).holds);
}

TEST_CASE("condition fails when the other base rate exceeds 0.613") {
    const auto s = table1_spec(0.7);
    const auto c = oracle::check_condition(s, 0.5);
    CHECK_FALSE(c.holds);
    CHECK(c.max_base_rate == 0.7);
    CHECK_THROWS_AS(oracle::solve_fair_optimal(s, 0.5), OracleInfeasibleError);
}

TEST_CASE("symmetric model always satisfies the condition") {
    for (double p : {0.1, 0.4, 0.8}) {
        const auto s = GaussianModelSpec::binary(0.5, p, p);
        CHECK(oracle::condition_rhs(s, 0.5) >= p);
        CHECK(oracle::check_condition(s, 0.5).holds);
    }
}

TEST_CASE("closed-form PPV is strictly increasing") {
    const auto s = table1_spec(0.4);
    Rng rng(14);
    for (int i = 0; i < 200; ++i) {
        double t1 = 0.01 + 0.98 * rng.uniform01(), t2 = 0.01 + 0.98 * rng.uniform01();
        if (t1 > t2) std::swap(t1, t2);
        if (t2 - t1 < 1e-6) continue;
        for (GroupId a : {0, 1}) CHECK(oracle::ppv_closed_form(s, a, t2) > oracle::ppv_closed_form(s, a, t1));
    }
}

TEST_CASE("PPV is monotone, at least t and at least the base rate on 1000-point grids") {
    Rng rng(2718);
    for (int spec_i = 0; spec_i < 50; ++spec_i) {
        const double p0 = 0.05 + 0.9 * rng.uniform01(), p1 = 0.05 + 0.9 * rng.uniform01();
        const double sigma = 0.5 + 3.0 * rng.uniform01();
        const auto s = GaussianModelSpec::binary(0.5, p0, p1, sigma);
        for (GroupId a : {0, 1}) {
            double prev = 0.0;
            for (int i = 0; i < 1000; ++i) {
                const double t = (i + 0.5) / 1000.0;
                const double v = oracle::ppv_closed_form(s, a, t);
                CHECK(v >= prev);
                CHECK(v >= t - 1e-12);
                CHECK(v >= s.label_probs[static_cast<std::size_t>(a)] - 1e-12);
                prev = v;
            }
        }
    }
}

TEST_CASE("every PPV between the base rate and one is attained") {
    Rng rng(31415);
    for (int spec_i = 0; spec_i < 10; ++spec_i) {
        const double p = 0.05 + 0.9 * rng.uniform01();
        const auto s = GaussianModelSpec::binary(0.5, p, 0.5, 0.5 + 3.0 * rng.uniform01());
        for (int i = 0; i <= 50; ++i) {
            const double target = p + (1.0 - 1e-6 - p) * i / 50.0;
            const auto r = oracle::solve_threshold_for_ppv(s, 0, target);
            CAPTURE(target);
            CHECK(std::abs(r.achieved - target) < 1e-9);
            if (r.threshold > 0.0 && r.threshold < 1.0) {
                CHECK(std::abs(oracle::ppv_closed_form(s, 0, r.threshold) - target) < 1e-9);
            }
        }
        CHECK_THROWS_AS(oracle::solve_threshold_for_ppv(s, 0, p - 0.01), UnreachableTargetError);
    }
}

TEST_CASE("match_t0 fixed point and round trip") {
    const auto same = GaussianModelSpec::binary(0.3, 0.35, 0.35);
    for (double t : {0.1, 0.35, 0.5, 0.9}) CHECK(std::abs(oracle::match_t0(same, t) - t) < 1e-9);
    const auto s = table1_spec(0.6);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const double t = 0.01 + 0.98 * rng.uniform01();
        const double t0 = oracle::match_t0(s, t);
        CHECK(std::abs(oracle::ppv_closed_form(s, 0, t0) - oracle::ppv_closed_form(s, 1, t)) < 1e-9);
    }
}

TEST_CASE("match_t0 regression constant agrees with Monte Carlo") {
    const auto s = table1_spec(0.6);
    const double t0 = oracle::match_t0(s, 0.5);
    CHECK(t0 == doctest::Approx(0.64513242406490674).epsilon(1e-9));
    const double target = oracle::ppv_closed_form(s, 1, 0.5);
    CHECK(target == doctest::Approx(0.72617003931396677).epsilon(1e-12));
    const auto mc = monte_carlo_ppv(0.2, 2.0, t0, 10'000'000, 606);
    CHECK(std::abs(mc.ppv - target) < 3.0 * mc.se);
}

TEST_CASE("closed-form PPV matches Monte Carlo on 20 random (spec, t) pairs") {
    Rng rng(8080);
    for (int i = 0; i < 20; ++i) {
        const double p = 0.1 + 0.8 * rng.uniform01();
        const double sigma = 0.75 + 2.5 * rng.uniform01();
        const double t = 0.05 + 0.9 * rng.uniform01();
        const auto s = GaussianModelSpec::binary(0.5, p, 0.5, sigma);
        const auto mc = monte_carlo_ppv(p, sigma, t, 1'000'000, 1000 + static_cast<std::uint64_t>(i));
        CAPTURE(p);
        CAPTURE(sigma);
        CAPTURE(t);
        CHECK(std::abs(oracle::ppv_closed_form(s, 0, t) - mc.ppv) < 4.0 * mc.se);
    }
}

TEST_CASE("selection rates at the ends of the unit interval") {
    const auto s = table1_spec(0.5);
    const auto all = oracle::selection_rates(s, 0, 0.0);
    CHECK(all.tpr == 1.0);
    CHECK(all.fpr == 1.0);
    const auto none = oracle::selection_rates(s, 1, 1.0);
    CHECK(none.tpr == 0.0);
    CHECK(none.fpr == 0.0);
}

TEST_CASE("population risk agrees with the printed closed form") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto s = table1_spec(0.2 + 0.4 * rng.uniform01());
        const std::vector<double> th{0.05 + 0.9 * rng.uniform01(), 0.05 + 0.9 * rng.uniform01()};
        const double c = 0.2 + 0.6 * rng.uniform01();
        CHECK(oracle::risk(s, th, c) == doctest::Approx(risk_reference(s, th, c)).epsilon(1e-11));
    }
}

TEST_CASE("fair-optimal solution reproduces the theoretical block") {
    struct Row {
        double p, fair_acc, uncon_acc, uncon_dpp;
    };
    for (const Row& row : {Row{0.2, 0.814, 0.814, 0.000}, Row{0.3, 0.794, 0.794, 0.024}, Row{0.4, 0.781, 0.781, 0.050},
                           Row{0.5, 0.775, 0.777, 0.078}, Row{0.6, 0.778, 0.781, 0.113}}) {
        const auto sol = oracle::solve_fair_optimal(table1_spec(row.p), 0.5);
        CAPTURE(row.p);
        CHECK(std::abs(sol.fair_accuracy - row.fair_acc) <= 0.002);
        CHECK(std::abs(sol.uncon_accuracy - row.uncon_acc) <= 0.002);
        CHECK(std::abs(sol.uncon_dpp - row.uncon_dpp) <= 0.002);
        CHECK(sol.fair_dpp < 1e-8);
        CHECK(sol.fair_accuracy == doctest::Approx(1.0 - 2.0 * sol.fair_risk).epsilon(1e-12));
        CHECK(sol.t_star >= 0.0);
        CHECK(sol.t_star <= 1.0);
    }
}

TEST_CASE("fair solution is a local minimum of the matched risk curve") {
    for (double p : {0.3, 0.5, 0.6}) {
        const auto s = table1_spec(p);
        const auto sol = oracle::solve_fair_optimal(s, 0.5);
        const auto anchor = sol.anchor_group;
        CHECK(std::abs(oracle::ppv_closed_form(s, 0, sol.matched_thresholds[0]) -
                       oracle::ppv_closed_form(s, 1, sol.matched_thresholds[1])) < 1e-9);
        for (double dt : {-1e-4, 1e-4}) {
            const double t = sol.t_star + dt;
            const double target = oracle::ppv_closed_form(s, anchor, t);
            std::vector<double> th(2);
            for (GroupId a : {0, 1}) {
                th[static_cast<std::size_t>(a)] =
                    a == anchor ? t : oracle::solve_threshold_for_ppv(s, a, target).threshold;
            }
            CHECK(sol.fair_risk <= oracle::risk(s, th, 0.5) + 1e-15);
        }
    }
}

TEST_CASE("thresholding at the cost is the unconstrained optimum") {
    for (double c : {0.3, 0.5, 0.7}) {
        const auto s = table1_spec(0.5);
        const std::vector<double> at_c{c, c}, lo{c - 0.01, c - 0.01}, hi{c + 0.01, c + 0.01};
        CHECK(oracle::risk(s, at_c, c) <= oracle::risk(s, lo, c));
        CHECK(oracle::risk(s, at_c, c) <= oracle::risk(s, hi, c));
    }
}

TEST_CASE("multi-class fair solution equalizes every group PPV") {
    const auto s = GaussianModelSpec::multi_class({0.2, 0.3, 0.2, 0.15, 0.15}, {0.2, 0.6, 0.3, 0.4, 0.2});
    const auto sol = oracle::solve_fair_optimal(s, 0.5);
    CHECK(sol.anchor_group == 1);
    const double ref = oracle::ppv_closed_form(s, 1, sol.matched_thresholds[1]);
    for (GroupId a = 0; a < 5; ++a) {
        CHECK(std::abs(oracle::ppv_closed_form(s, a, sol.matched_thresholds[static_cast<std::size_t>(a)]) - ref) < 1e-9);
    }
    CHECK(sol.fair_dpp < 1e-8);
    CHECK(sol.fair_accuracy <= sol.uncon_accuracy);
}

TEST_CASE("multi-class eta depends on one coordinate") {
    const auto s = GaussianModelSpec::multi_class({0.3, 0.3, 0.4}, {0.2, 0.6, 0.3});
    CHECK(s.dim() == 3);
    const std::vector<double> x{0.0, 1.0, -5.0}, y{9.0, 1.0, 4.0};
    CHECK(oracle::eta(s, x, 1) == doctest::Approx(oracle::eta(s, y, 1)).epsilon(1e-14));
    CHECK(oracle::eta(s, x, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-(std::log(1.5) + 0.5)))).epsilon(1e-14));
}

TEST_CASE("sampled group and label frequencies fall in 3-sigma binomial bands") {
    const auto s = GaussianModelSpec::multi_class({0.3, 0.3, 0.4}, {0.2, 0.6, 0.3});
    const std::size_t n = 100000;
    const auto ds = oracle::sample(s, n, 44);
    std::vector<double> count(3, 0.0), pos(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        count[static_cast<std::size_t>(ds.group(i))] += 1.0;
        pos[static_cast<std::size_t>(ds.group(i))] += ds.label(i);
    }
    for (std::size_t a = 0; a < 3; ++a) {
        const double pa = s.group_probs[a];
        CHECK(std::abs(count[a] - n * pa) < 3.0 * std::sqrt(n * pa * (1.0 - pa)));
        const double py = s.label_probs[a];
        CHECK(std::abs(pos[a] - count[a] * py) < 3.0 * std::sqrt(count[a] * py * (1.0 - py)));
    }
}

TEST_CASE("sampling is reproducible in the seed") {
    const auto s = table1_spec(0.6);
    const auto a = oracle::sample(s, 2000, 9), b = oracle::sample(s, 2000, 9), c = oracle::sample(s, 2000, 10);
    CHECK(std::equal(a.features().begin(), a.features().end(), b.features().begin()));
    CHECK(std::equal(a.labels().begin(), a.labels().end(), b.labels().begin()));
    CHECK_FALSE(std::equal(a.features().begin(), a.features().end(), c.features().begin()));
}

TEST_CASE("invalid model specifications are rejected") {
    CHECK_THROWS_AS(GaussianModelSpec::binary(0.3, 0.0, 0.5).validate(), ConfigError);
    CHECK_THROWS_AS(GaussianModelSpec::multi_class({0.5, 0.6}, {0.2, 0.3}).validate(), ConfigError);
    CHECK_THROWS_AS(GaussianModelSpec::binary(0.3, 0.2, 0.5, -1.0).validate(), ConfigError);
}

TEST_CASE("oracle solution JSON round trip") {
    const auto sol = oracle::solve_fair_optimal(table1_spec(0.5), 0.5);
    const auto back = oracle::oracle_solution_from_json(oracle::to_json(sol));
    CHECK(back.t_star == sol.t_star);
    CHECK(back.matched_thresholds == sol.matched_thresholds);
    CHECK(oracle::to_json(back).dump() == oracle::to_json(sol).dump());
}
