#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairbayes/data.hpp"

namespace fairbayes {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    double cost_risk = 0.0;
    // Sum over groups with at least one positive prediction of
    // |PPV_a - PPV_overall|.
    double dpp = 0.0;
    // Groups without positive predictions have no entry.
    std::map<GroupId, double> group_ppv;
    std::optional<double> overall_ppv;
    std::map<GroupId, ConfusionCounts> counts;
    // Groups present in the data but left out of DPP because their PPV is undefined.
    std::vector<GroupId> dpp_omitted_groups;
    bool no_positive_predictions = false;
};

EvalReport evaluate(std::span<const Label> preds, std::span<const Label> labels,
                    std::span<const GroupId> groups, double cost);

struct PairedTTest {
    double t_stat = 0.0;
    // P(T_{n-1} <= t): small values favour DPP_fair < DPP_base.
    double p_value = 0.0;
    std::size_t n = 0;
};

PairedTTest paired_t_one_sided(std::span<const double> d_fair, std::span<const double> d_base);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace fairbayes
