#include "fairbayes/gaussian_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairbayes/errors.hpp"
#include "fairbayes/numeric.hpp"
#include "fairbayes/random.hpp"

namespace fairbayes::oracle {

GaussianModelSpec GaussianModelSpec::binary(double p_a1, double p_y0, double p_y1, double sigma) {
    GaussianModelSpec s{{1.0 - p_a1, p_a1}, {p_y0, p_y1}, sigma, MeanLayout::Binary};
    s.validate();
    return s;
}

GaussianModelSpec GaussianModelSpec::multi_class(std::vector<double> group_probs,
                                                 std::vector<double> label_probs, double sigma) {
    GaussianModelSpec s{std::move(group_probs), std::move(label_probs), sigma, MeanLayout::MultiClass};
    s.validate();
    return s;
}

std::size_t GaussianModelSpec::dim() const {
    return layout == MeanLayout::Binary ? 2 : group_probs.size();
}

std::size_t GaussianModelSpec::informative_coordinate(GroupId a) const {
    return layout == MeanLayout::Binary ? 1 : static_cast<std::size_t>(a);
}

std::vector<double> GaussianModelSpec::mean(GroupId a, Label y) const {
    std::vector<double> mu(dim(), 0.0);
    if (layout == MeanLayout::Binary) {
        mu[0] = 2.0 * a - 1.0;
        mu[1] = 2.0 * y - 1.0;
    } else {
        mu[static_cast<std::size_t>(a)] = 2.0 * y - 1.0;
    }
    return mu;
}

void GaussianModelSpec::validate() const {
    if (group_probs.empty()) throw ConfigError("model needs at least one group");
    if (group_probs.size() != label_probs.size()) {
        throw ConfigError("group_probs and label_probs must have equal length");
    }
    if (layout == MeanLayout::Binary && group_probs.size() != 2) {
        throw ConfigError("the binary layout has exactly two groups");
    }
    const double total = std::accumulate(group_probs.begin(), group_probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("group probabilities must sum to 1");
    for (double p : group_probs) {
        if (!(p > 0.0)) throw ConfigError("group probabilities must be positive");
    }
    for (double p : label_probs) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("label probabilities must lie in (0,1)");
    }
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
}

TabularDataset sample(const GaussianModelSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n == 0) throw PreconditionError("sample size must be at least 1");
    const std::size_t d = spec.dim();
    Rng rng(seed);
    std::vector<double> features(n * d);
    std::vector<GroupId> groups(n);
    std::vector<Label> labels(n);
    std::vector<std::vector<double>> means;
    for (GroupId a = 0; a < spec.num_groups(); ++a) {
        means.push_back(spec.mean(a, 0));
        means.push_back(spec.mean(a, 1));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<GroupId>(rng.categorical(spec.group_probs));
        const Label y = rng.bernoulli(spec.label_probs[static_cast<std::size_t>(a)]) ? 1 : 0;
        const auto& mu = means[static_cast<std::size_t>(2 * a + y)];
        for (std::size_t j = 0; j < d; ++j) features[i * d + j] = mu[j] + spec.sigma * rng.normal();
        groups[i] = a;
        labels[i] = y;
    }
    return TabularDataset(d, std::move(features), std::move(groups), std::move(labels),
                          spec.num_groups());
}

namespace {

void check_group(const GaussianModelSpec& spec, GroupId a) {
    if (a < 0 || a >= spec.num_groups()) throw LookupError("group " + std::to_string(a) + " not in model");
}

// log of the standard normal survival function, finite far into the right
// tail where erfc underflows.
double log_normal_sf(double x) {
    if (x < 30.0) return std::log(numeric::normal_sf(x));
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x * std::sqrt(2.0 * M_PI)) + std::log(series);
}

// Standardized cut point: eta_a(x) >= t iff x_k >= sigma^2 * log q_a(t) / 2, and
// z = sigma * log q_a(t) / 2 is that cut divided by sigma.
double cut(const GaussianModelSpec& spec, GroupId a, double t) {
    const double p = spec.label_probs[static_cast<std::size_t>(a)];
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    if (t >= 1.0) return std::numeric_limits<double>::infinity();
    return spec.sigma * (numeric::logit(t) - numeric::logit(p)) / 2.0;
}

double threshold_from_cut(const GaussianModelSpec& spec, GroupId a, double z) {
    const double p = spec.label_probs[static_cast<std::size_t>(a)];
    return numeric::logistic(numeric::logit(p) + 2.0 * z / spec.sigma);
}

double ppv_at_cut(const GaussianModelSpec& spec, GroupId a, double z) {
    const double p = spec.label_probs[static_cast<std::size_t>(a)];
    const double inv = 1.0 / spec.sigma;
    if (z == -std::numeric_limits<double>::infinity()) return p;
    const double log_odds = numeric::logit(p) + log_normal_sf(z - inv) - log_normal_sf(z + inv);
    return numeric::logistic(log_odds);
}

struct GroupRates {
    double tpr, fpr, miss;
};

GroupRates rates_at(const GaussianModelSpec& spec, GroupId a, double t) {
    const double z = cut(spec, a, t);
    const double inv = 1.0 / spec.sigma;
    return {numeric::normal_sf(z - inv), numeric::normal_sf(z + inv), numeric::normal_cdf(z - inv)};
}

void check_thresholds(const GaussianModelSpec& spec, std::span<const double> thresholds) {
    if (thresholds.size() != static_cast<std::size_t>(spec.num_groups())) {
        throw ShapeError("one threshold per group is required");
    }
}

}  // namespace

double eta(const GaussianModelSpec& spec, std::span<const double> x, GroupId a) {
    check_group(spec, a);
    if (x.size() != spec.dim()) throw ShapeError("feature vector width does not match the model");
    const auto mu0 = spec.mean(a, 0);
    const auto mu1 = spec.mean(a, 1);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        d0 += (x[j] - mu0[j]) * (x[j] - mu0[j]);
        d1 += (x[j] - mu1[j]) * (x[j] - mu1[j]);
    }
    const double p = spec.label_probs[static_cast<std::size_t>(a)];
    return numeric::logistic(numeric::logit(p) + (d0 - d1) / (2.0 * spec.sigma * spec.sigma));
}

SelectionRates selection_rates(const GaussianModelSpec& spec, GroupId a, double t) {
    check_group(spec, a);
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("threshold must lie in [0,1]");
    const auto r = rates_at(spec, a, t);
    return {r.tpr, r.fpr};
}

double ppv_closed_form(const GaussianModelSpec& spec, GroupId a, double t) {
    check_group(spec, a);
    if (!(t > 0.0 && t < 1.0)) throw DomainError("closed-form PPV needs t in (0,1)");
    return ppv_at_cut(spec, a, cut(spec, a, t));
}

double condition_rhs(const GaussianModelSpec& spec, double c, GroupId reference) {
    return ppv_closed_form(spec, reference, c);
}

PopulationCondition check_condition(const GaussianModelSpec& spec, double c) {
    PopulationCondition out;
    out.min_ppv = std::numeric_limits<double>::infinity();
    for (GroupId a = 0; a < spec.num_groups(); ++a) {
        out.min_ppv = std::min(out.min_ppv, ppv_closed_form(spec, a, c));
        out.max_base_rate = std::max(out.max_base_rate, spec.label_probs[static_cast<std::size_t>(a)]);
    }
    out.holds = out.min_ppv >= out.max_base_rate;
    return out;
}

ThresholdSolve solve_threshold_for_ppv(const GaussianModelSpec& spec, GroupId a, double target_ppv) {
    check_group(spec, a);
    const double p = spec.label_probs[static_cast<std::size_t>(a)];
    if (!(target_ppv >= p && target_ppv < 1.0)) {
        throw UnreachableTargetError("PPV " + std::to_string(target_ppv) + " is not reachable for group " +
                                     std::to_string(a) + " (range [" + std::to_string(p) + ", 1))");
    }
    if (target_ppv == p) return {0.0, p};

    double lo = -40.0, hi = 1.0;
    if (ppv_at_cut(spec, a, lo) >= target_ppv) {
        const double t = threshold_from_cut(spec, a, lo);
        return {t, ppv_at_cut(spec, a, lo)};
    }
    while (ppv_at_cut(spec, a, hi) < target_ppv) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw UnreachableTargetError("PPV target too close to 1");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ppv_at_cut(spec, a, mid) < target_ppv) lo = mid;
        else hi = mid;
    }
    const double z = 0.5 * (lo + hi);
    const double t = threshold_from_cut(spec, a, z);
    // Report the PPV at the returned threshold, which is what callers observe.
    const double achieved = (t > 0.0 && t < 1.0) ? ppv_closed_form(spec, a, t) : ppv_at_cut(spec, a, z);
    return {t, achieved};
}

double match_t0(const GaussianModelSpec& spec, double t) {
    if (spec.num_groups() < 2) throw ConfigError("matching needs at least two groups");
    return solve_threshold_for_ppv(spec, 0, ppv_closed_form(spec, 1, t)).threshold;
}

double risk(const GaussianModelSpec& spec, std::span<const double> thresholds, double c) {
    check_thresholds(spec, thresholds);
    double r = 0.0;
    for (GroupId a = 0; a < spec.num_groups(); ++a) {
        const auto idx = static_cast<std::size_t>(a);
        const double pa = spec.group_probs[idx], py = spec.label_probs[idx];
        const auto g = rates_at(spec, a, thresholds[idx]);
        r += c * pa * (1.0 - py) * g.fpr + (1.0 - c) * pa * py * g.miss;
    }
    return r;
}

double accuracy(const GaussianModelSpec& spec, std::span<const double> thresholds) {
    check_thresholds(spec, thresholds);
    double err = 0.0;
    for (GroupId a = 0; a < spec.num_groups(); ++a) {
        const auto idx = static_cast<std::size_t>(a);
        const double pa = spec.group_probs[idx], py = spec.label_probs[idx];
        const auto g = rates_at(spec, a, thresholds[idx]);
        err += pa * (1.0 - py) * g.fpr + pa * py * g.miss;
    }
    return 1.0 - err;
}

double dpp(const GaussianModelSpec& spec, std::span<const double> thresholds) {
    check_thresholds(spec, thresholds);
    std::vector<double> ppv;
    double tp = 0.0, sel = 0.0;
    for (GroupId a = 0; a < spec.num_groups(); ++a) {
        const auto idx = static_cast<std::size_t>(a);
        const double pa = spec.group_probs[idx], py = spec.label_probs[idx];
        const auto g = rates_at(spec, a, thresholds[idx]);
        const double tp_a = pa * py * g.tpr, sel_a = tp_a + pa * (1.0 - py) * g.fpr;
        tp += tp_a;
        sel += sel_a;
        if (sel_a > 0.0) ppv.push_back(tp_a / sel_a);
    }
    if (!(sel > 0.0)) return 0.0;
    const double pooled = tp / sel;
    double out = 0.0;
    for (double v : ppv) out += std::abs(v - pooled);
    return out;
}

OracleFairSolution solve_fair_optimal(const GaussianModelSpec& spec, double c) {
    spec.validate();
    if (!(c > 0.0 && c < 1.0)) throw DomainError("cost must lie in (0,1)");
    OracleFairSolution out;
    out.condition = check_condition(spec, c);
    out.condition_value = condition_rhs(spec, c, 0);
    if (!out.condition.holds) {
        throw OracleInfeasibleError(
            "sufficient condition fails: smallest group PPV at c is " +
            std::to_string(out.condition.min_ppv) + " but the largest base rate is " +
            std::to_string(out.condition.max_base_rate) +
            "; predictive parity may not be appropriate, consider other fairness measures");
    }

    const auto& probs = spec.label_probs;
    const auto anchor = static_cast<GroupId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    out.anchor_group = anchor;
    const auto groups = static_cast<std::size_t>(spec.num_groups());

    auto fair_thresholds = [&](double t) {
        std::vector<double> th(groups);
        const double target = ppv_closed_form(spec, anchor, t);
        for (GroupId a = 0; a < spec.num_groups(); ++a) {
            th[static_cast<std::size_t>(a)] =
                a == anchor ? t : solve_threshold_for_ppv(spec, a, std::max(target, probs[static_cast<std::size_t>(a)])).threshold;
        }
        return th;
    };
    auto fair_risk = [&](double t) { return risk(spec, fair_thresholds(t), c); };

    constexpr double step = 1e-4;
    double best_t = step, best_r = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 10000; ++k) {
        const double t = k * step;
        const double r = fair_risk(t);
        if (r < best_r) {
            best_r = r;
            best_t = t;
        }
    }
    const double lo = std::max(best_t - step, step / 2.0);
    const double hi = std::min(best_t + step, 1.0 - step / 2.0);
    const auto refined = numeric::golden_section_minimize(fair_risk, lo, hi, 1e-8);
    if (refined.fx <= best_r) {
        best_t = refined.x;
        best_r = refined.fx;
    }

    out.t_star = best_t;
    out.matched_thresholds = fair_thresholds(best_t);
    out.fair_risk = best_r;
    out.fair_accuracy = accuracy(spec, out.matched_thresholds);
    out.fair_dpp = dpp(spec, out.matched_thresholds);
    const std::vector<double> uncon(groups, c);
    out.uncon_risk = risk(spec, uncon, c);
    out.uncon_accuracy = accuracy(spec, uncon);
    out.uncon_dpp = dpp(spec, uncon);
    return out;
}

nlohmann::json to_json(const OracleFairSolution& s) {
    return {{"anchor_group", s.anchor_group},
            {"t_star", s.t_star},
            {"matched_thresholds", s.matched_thresholds},
            {"fair_risk", s.fair_risk},
            {"fair_accuracy", s.fair_accuracy},
            {"fair_dpp", s.fair_dpp},
            {"uncon_risk", s.uncon_risk},
            {"uncon_accuracy", s.uncon_accuracy},
            {"uncon_dpp", s.uncon_dpp},
            {"condition_value", s.condition_value},
            {"condition",
             {{"holds", s.condition.holds},
              {"min_ppv", s.condition.min_ppv},
              {"max_base_rate", s.condition.max_base_rate}}}};
}

OracleFairSolution oracle_solution_from_json(const nlohmann::json& j) {
    OracleFairSolution s;
    s.anchor_group = j.at("anchor_group").get<GroupId>();
    s.t_star = j.at("t_star").get<double>();
    s.matched_thresholds = j.at("matched_thresholds").get<std::vector<double>>();
    s.fair_risk = j.at("fair_risk").get<double>();
    s.fair_accuracy = j.at("fair_accuracy").get<double>();
    s.fair_dpp = j.at("fair_dpp").get<double>();
    s.uncon_risk = j.at("uncon_risk").get<double>();
    s.uncon_accuracy = j.at("uncon_accuracy").get<double>();
    s.uncon_dpp = j.at("uncon_dpp").get<double>();
    s.condition_value = j.at("condition_value").get<double>();
    const auto& c = j.at("condition");
    s.condition = {c.at("holds").get<bool>(), c.at("min_ppv").get<double>(), c.at("max_base_rate").get<double>()};
    return s;
}

}  // namespace fairbayes::oracle
