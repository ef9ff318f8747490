#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbayes/data.hpp"

namespace fairbayes {

struct CalibrationConfig {
    // Weight of a false positive; a false negative weighs 1 - cost.
    double cost = 0.5;
    GroupId anchor_group = 0;
    double grid_step = 0.001;
    // Added to the smallest group PPV before comparing with the largest base
    // rate in the sufficient-condition check.
    double condition_slack = 0.0;
    // Residual |PPV_a - PPV_anchor| above which a warning is recorded.
    double ppv_match_tol = 0.02;

    void validate() const;
};

// Per-group thresholds of the deterministic rule 1{score >= t_a}.
class ThresholdSet {
public:
    ThresholdSet() = default;
    explicit ThresholdSet(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {}

    double at(GroupId g) const;
    std::size_t size() const { return thresholds_.size(); }
    std::span<const double> values() const { return thresholds_; }

    // Same threshold for every group (the unconstrained rule at t = cost).
    static ThresholdSet uniform(int num_groups, double t) {
        return ThresholdSet(std::vector<double>(static_cast<std::size_t>(num_groups), t));
    }

private:
    std::vector<double> thresholds_;
};

// 1 iff score >= thresholds.at(group).
Label predict(const ThresholdSet& thresholds, double score, GroupId group);
std::vector<Label> predict_all(const ThresholdSet& thresholds, std::span<const double> scores,
                               std::span<const GroupId> groups);

// Fraction of positive labels among rows scored at or above t.
double ppv_hat(const GroupView& v, double t);
double base_rate_hat(const GroupView& v);

struct ConditionCheck {
    bool holds = false;
    // Smallest group PPV at the cost threshold (NaN if undefined for some group).
    double lhs = 0.0;
    // Largest group base rate.
    double rhs = 0.0;
    std::string diagnostic;
};

ConditionCheck check_condition(std::span<const GroupView> views, const CalibrationConfig& cfg);

struct ThresholdMatch {
    double threshold = 0.0;
    double achieved = 0.0;
};

// Closest achievable PPV to `target_ppv` over the view's distinct scores;
// ties go to the smallest threshold. Throws UnreachableTargetError when the
// target is below the view's base rate.
ThresholdMatch match_threshold(const GroupView& v, double target_ppv);

struct RiskPoint {
    double t = 0.0;
    double risk = 0.0;
};

struct CalibrationResult {
    bool condition_holds = false;
    double condition_lhs = 0.0;
    double condition_rhs = 0.0;
    std::string diagnostic;
    GroupId anchor_group = 0;
    // Present iff condition_holds.
    std::optional<ThresholdSet> thresholds;
    // Grid point of the winning anchor threshold; the stored anchor threshold is
    // the smallest anchor score at or above it.
    double anchor_t = 0.0;
    double t_min = 0.0;
    std::vector<double> achieved_ppv;
    // |achieved_ppv[a] - achieved_ppv[anchor]|
    std::vector<double> residuals;
    std::vector<double> base_rates;
    std::vector<RiskPoint> risk_trace;
    std::vector<std::string> warnings;
};

// Scored sample on which the empirical cost-sensitive risk is evaluated.
struct ScoredSample {
    std::span<const double> scores;
    std::span<const GroupId> groups;
    std::span<const Label> labels;
};

// Sufficient-condition check, then a grid search over the anchor group's
// threshold; every other group is PPV-matched to the anchor at each grid point
// and the grid point with the smallest empirical cost-sensitive risk on
// `sample` wins (ties go to the smaller threshold). Returns
// condition_holds = false without thresholds when the check fails.
CalibrationResult calibrate(std::span<const GroupView> views, const ScoredSample& sample,
                            const CalibrationConfig& cfg);

nlohmann::json to_json(const CalibrationResult& r);

}  // namespace fairbayes
