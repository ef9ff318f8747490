#include "fairbayes/calibration.hpp"

#include <cmath>
#include <limits>

#include "fairbayes/errors.hpp"

namespace fairbayes {

void CalibrationConfig::validate() const {
    if (!(cost >= 0.0 && cost <= 1.0)) throw ConfigError("cost must lie in [0,1]");
    if (!(grid_step > 0.0)) throw ConfigError("grid_step must be positive");
    if (!(condition_slack >= 0.0)) throw ConfigError("condition_slack must be nonnegative");
    if (!(ppv_match_tol >= 0.0)) throw ConfigError("ppv_match_tol must be nonnegative");
    if (anchor_group < 0) throw ConfigError("anchor_group must be a valid group id");
}

double ThresholdSet::at(GroupId g) const {
    if (g < 0 || static_cast<std::size_t>(g) >= thresholds_.size()) {
        throw LookupError("no threshold for group " + std::to_string(g));
    }
    return thresholds_[static_cast<std::size_t>(g)];
}

Label predict(const ThresholdSet& thresholds, double score, GroupId group) {
    return score >= thresholds.at(group) ? 1 : 0;
}

std::vector<Label> predict_all(const ThresholdSet& thresholds, std::span<const double> scores,
                               std::span<const GroupId> groups) {
    if (scores.size() != groups.size()) throw ShapeError("scores and groups differ in length");
    std::vector<Label> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = predict(thresholds, scores[i], groups[i]);
    return out;
}

double ppv_hat(const GroupView& v, double t) {
    const std::size_t k = v.count_at_least(t);
    if (k == 0) {
        throw UndefinedPpvError("PPV undefined for group " + std::to_string(v.group()) +
                                ": no score at or above " + std::to_string(t));
    }
    return static_cast<double>(v.positives_in_top(k)) / static_cast<double>(k);
}

double base_rate_hat(const GroupView& v) {
    return static_cast<double>(v.total_positives()) / static_cast<double>(v.size());
}

namespace {

struct Candidate {
    double t;
    double ppv;
};

// Distinct scores of a view in descending order, each with the PPV of the
// rule 1{score >= t}.
std::vector<Candidate> candidates(const GroupView& v) {
    std::vector<Candidate> out;
    const auto s = v.scores();
    for (std::size_t k = 1; k <= s.size(); ++k) {
        if (k < s.size() && s[k] == s[k - 1]) continue;
        out.push_back({s[k - 1],
                       static_cast<double>(v.positives_in_top(k)) / static_cast<double>(k)});
    }
    return out;
}

ThresholdMatch closest(std::span<const Candidate> cands, double target) {
    ThresholdMatch best{cands.front().t, cands.front().ppv};
    double best_gap = std::abs(cands.front().ppv - target);
    // Descending scan, so `<=` moves ties toward the smaller threshold.
    for (const auto& c : cands.subspan(1)) {
        const double gap = std::abs(c.ppv - target);
        if (gap <= best_gap) {
            best_gap = gap;
            best = {c.t, c.ppv};
        }
    }
    return best;
}

void check_views(std::span<const GroupView> views) {
    if (views.empty()) throw CalibrationInputError("no groups to calibrate");
    for (std::size_t g = 0; g < views.size(); ++g) {
        if (views[g].group() != static_cast<GroupId>(g)) {
            throw CalibrationInputError("views must be indexed by group id");
        }
    }
}

}  // namespace

ConditionCheck check_condition(std::span<const GroupView> views, const CalibrationConfig& cfg) {
    check_views(views);
    ConditionCheck out;
    out.lhs = std::numeric_limits<double>::infinity();
    out.rhs = 0.0;
    for (const auto& v : views) out.rhs = std::max(out.rhs, base_rate_hat(v));
    for (const auto& v : views) {
        if (v.count_at_least(cfg.cost) == 0) {
            out.holds = false;
            out.lhs = std::numeric_limits<double>::quiet_NaN();
            out.diagnostic = "PPV at the cost threshold is undefined for group " +
                             std::to_string(v.group()) + ": no score at or above " +
                             std::to_string(cfg.cost);
            return out;
        }
        out.lhs = std::min(out.lhs, ppv_hat(v, cfg.cost));
    }
    out.holds = out.lhs + cfg.condition_slack >= out.rhs;
    if (!out.holds) {
        out.diagnostic = "smallest group PPV at the cost threshold (" + std::to_string(out.lhs) +
                         ") is below the largest group base rate (" + std::to_string(out.rhs) +
                         "); consider other fairness measures";
    }
    return out;
}

ThresholdMatch match_threshold(const GroupView& v, double target_ppv) {
    const double base = base_rate_hat(v);
    if (target_ppv < base) {
        throw UnreachableTargetError("target PPV " + std::to_string(target_ppv) +
                                     " is below the base rate " + std::to_string(base) +
                                     " of group " + std::to_string(v.group()));
    }
    const auto cands = candidates(v);
    return closest(cands, target_ppv);
}

CalibrationResult calibrate(std::span<const GroupView> views, const ScoredSample& sample,
                            const CalibrationConfig& cfg) {
    cfg.validate();
    check_views(views);
    const std::size_t num_groups = views.size();
    if (static_cast<std::size_t>(cfg.anchor_group) >= num_groups) {
        throw ConfigError("anchor group " + std::to_string(cfg.anchor_group) + " does not exist");
    }
    const std::size_t n = sample.scores.size();
    if (n == 0 || sample.groups.size() != n || sample.labels.size() != n) {
        throw ShapeError("risk sample must be nonempty with equal-length columns");
    }

    CalibrationResult out;
    out.anchor_group = cfg.anchor_group;
    for (const auto& v : views) out.base_rates.push_back(base_rate_hat(v));

    const auto cond = check_condition(views, cfg);
    out.condition_holds = cond.holds;
    out.condition_lhs = cond.lhs;
    out.condition_rhs = cond.rhs;
    out.diagnostic = cond.diagnostic;
    if (!cond.holds) return out;

    const GroupView& anchor = views[static_cast<std::size_t>(cfg.anchor_group)];
    std::vector<std::vector<Candidate>> cands(num_groups);
    for (std::size_t g = 0; g < num_groups; ++g) cands[g] = candidates(views[g]);

    // Smallest anchor candidate whose PPV reaches the largest base rate.
    const double max_base = cond.rhs;
    std::optional<double> t_min;
    const auto& anchor_cands = cands[static_cast<std::size_t>(cfg.anchor_group)];
    for (auto it = anchor_cands.rbegin(); it != anchor_cands.rend(); ++it) {
        if (it->ppv >= max_base) {
            t_min = it->t;
            break;
        }
    }
    if (!t_min) {
        throw CalibrationInfeasibleError("PPV of anchor group " + std::to_string(cfg.anchor_group) +
                                         " never reaches the largest base rate " +
                                         std::to_string(max_base));
    }
    out.t_min = *t_min;

    // Risk is evaluated from per-group sorted counts of the risk sample.
    std::vector<std::vector<double>> rs(num_groups);
    std::vector<std::vector<Label>> rl(num_groups);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = sample.groups[i];
        if (g < 0 || static_cast<std::size_t>(g) >= num_groups) {
            throw DataError("risk sample contains an unknown group");
        }
        rs[static_cast<std::size_t>(g)].push_back(sample.scores[i]);
        rl[static_cast<std::size_t>(g)].push_back(sample.labels[i]);
    }
    std::vector<std::optional<GroupView>> risk_views(num_groups);
    for (std::size_t g = 0; g < num_groups; ++g) {
        if (!rs[g].empty()) {
            risk_views[g] = GroupView::build(static_cast<GroupId>(g), std::move(rs[g]), std::move(rl[g]));
        }
    }
    auto empirical_risk = [&](std::span<const double> thresholds) {
        double fp = 0.0, fn = 0.0;
        for (std::size_t g = 0; g < num_groups; ++g) {
            if (!risk_views[g]) continue;
            const auto& v = *risk_views[g];
            const std::size_t k = v.count_at_least(thresholds[g]);
            const std::size_t tp = v.positives_in_top(k);
            fp += static_cast<double>(k - tp);
            fn += static_cast<double>(v.total_positives() - tp);
        }
        return (cfg.cost * fp + (1.0 - cfg.cost) * fn) / static_cast<double>(n);
    };

    const double t_max = anchor.max_score();
    const auto steps = static_cast<std::size_t>(std::floor((t_max - *t_min) / cfg.grid_step + 1e-9));
    std::vector<double> thresholds(num_groups);
    std::vector<double> best_thresholds;
    double best_risk = std::numeric_limits<double>::infinity();
    out.risk_trace.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = std::min(*t_min + static_cast<double>(k) * cfg.grid_step, t_max);
        const double target = ppv_hat(anchor, t);
        // The anchor threshold is stored as the smallest anchor score it admits,
        // so every group's threshold is an observed score.
        const double anchor_score = anchor.scores()[anchor.count_at_least(t) - 1];
        for (std::size_t g = 0; g < num_groups; ++g) {
            thresholds[g] = static_cast<GroupId>(g) == cfg.anchor_group ? anchor_score
                                                                         : closest(cands[g], target).threshold;
        }
        const double risk = empirical_risk(thresholds);
        out.risk_trace.push_back({t, risk});
        if (risk < best_risk) {
            best_risk = risk;
            best_thresholds = thresholds;
            out.anchor_t = t;
        }
    }

    out.thresholds = ThresholdSet(best_thresholds);
    out.achieved_ppv.resize(num_groups);
    for (std::size_t g = 0; g < num_groups; ++g) out.achieved_ppv[g] = ppv_hat(views[g], best_thresholds[g]);
    const double anchor_ppv = out.achieved_ppv[static_cast<std::size_t>(cfg.anchor_group)];
    out.residuals.resize(num_groups);
    for (std::size_t g = 0; g < num_groups; ++g) {
        out.residuals[g] = std::abs(out.achieved_ppv[g] - anchor_ppv);
        if (out.residuals[g] > cfg.ppv_match_tol) {
            out.warnings.push_back("group " + std::to_string(g) + " PPV differs from the anchor by " +
                                   std::to_string(out.residuals[g]));
        }
    }
    return out;
}

nlohmann::json to_json(const CalibrationResult& r) {
    nlohmann::json j;
    j["condition_holds"] = r.condition_holds;
    j["condition_lhs"] = r.condition_lhs;
    j["condition_rhs"] = r.condition_rhs;
    j["diagnostic"] = r.diagnostic;
    j["anchor_group"] = r.anchor_group;
    j["anchor_t"] = r.anchor_t;
    j["t_min"] = r.t_min;
    j["thresholds"] = r.thresholds ? nlohmann::json(std::vector<double>(r.thresholds->values().begin(),
                                                                        r.thresholds->values().end()))
                                   : nlohmann::json(nullptr);
    j["achieved_ppv"] = r.achieved_ppv;
    j["residuals"] = r.residuals;
    j["base_rates"] = r.base_rates;
    auto& trace = j["risk_trace"] = nlohmann::json::array();
    for (const auto& p : r.risk_trace) trace.push_back({p.t, p.risk});
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace fairbayes
