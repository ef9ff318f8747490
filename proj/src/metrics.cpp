#include "fairbayes/metrics.hpp"

#include <cmath>

#include "fairbayes/errors.hpp"
#include "fairbayes/numeric.hpp"

namespace fairbayes {

EvalReport evaluate(std::span<const Label> preds, std::span<const Label> labels,
                    std::span<const GroupId> groups, double cost) {
    const std::size_t n = preds.size();
    if (n == 0 || labels.size() != n || groups.size() != n) {
        throw ShapeError("evaluate needs nonempty sequences of equal length");
    }
    if (!(cost >= 0.0 && cost <= 1.0)) throw ConfigError("cost must lie in [0,1]");

    EvalReport r;
    ConfusionCounts total;
    for (std::size_t i = 0; i < n; ++i) {
        auto& c = r.counts[groups[i]];
        const bool p = preds[i] == 1, y = labels[i] == 1;
        if (p && y) ++c.tp, ++total.tp;
        else if (p) ++c.fp, ++total.fp;
        else if (y) ++c.fn, ++total.fn;
        else ++c.tn, ++total.tn;
    }
    const double nn = static_cast<double>(n);
    r.accuracy = static_cast<double>(total.tp + total.tn) / nn;
    r.cost_risk = (cost * static_cast<double>(total.fp) + (1.0 - cost) * static_cast<double>(total.fn)) / nn;

    if (total.tp + total.fp == 0) {
        r.no_positive_predictions = true;
        for (const auto& [g, c] : r.counts) r.dpp_omitted_groups.push_back(g);
        return r;
    }
    const double overall = static_cast<double>(total.tp) / static_cast<double>(total.tp + total.fp);
    r.overall_ppv = overall;
    for (const auto& [g, c] : r.counts) {
        if (c.tp + c.fp == 0) {
            r.dpp_omitted_groups.push_back(g);
            continue;
        }
        const double ppv = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        r.group_ppv[g] = ppv;
        r.dpp += std::abs(ppv - overall);
    }
    return r;
}

PairedTTest paired_t_one_sided(std::span<const double> d_fair, std::span<const double> d_base) {
    const std::size_t n = d_fair.size();
    if (n != d_base.size()) throw ShapeError("paired samples must have equal length");
    if (n < 2) throw PreconditionError("paired t-test needs at least two pairs");
    std::vector<double> diff(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = d_fair[i] - d_base[i];
        mean += diff[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw DegenerateTestError("paired differences have zero variance");
    PairedTTest out;
    out.n = n;
    out.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
    out.p_value = numeric::student_t_cdf(out.t_stat, static_cast<double>(n - 1));
    return out;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["cost_risk"] = r.cost_risk;
    j["dpp"] = r.dpp;
    j["overall_ppv"] = r.overall_ppv ? nlohmann::json(*r.overall_ppv) : nlohmann::json(nullptr);
    auto& ppv = j["group_ppv"] = nlohmann::json::object();
    for (const auto& [g, v] : r.group_ppv) ppv[std::to_string(g)] = v;
    auto& counts = j["counts"] = nlohmann::json::object();
    for (const auto& [g, c] : r.counts) {
        counts[std::to_string(g)] = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    }
    j["dpp_omitted_groups"] = r.dpp_omitted_groups;
    j["no_positive_predictions"] = r.no_positive_predictions;
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.cost_risk = j.at("cost_risk").get<double>();
    r.dpp = j.at("dpp").get<double>();
    if (!j.at("overall_ppv").is_null()) r.overall_ppv = j.at("overall_ppv").get<double>();
    for (const auto& [k, v] : j.at("group_ppv").items()) r.group_ppv[std::stoi(k)] = v.get<double>();
    for (const auto& [k, v] : j.at("counts").items()) {
        r.counts[std::stoi(k)] = ConfusionCounts{v.at("tp").get<std::size_t>(), v.at("fp").get<std::size_t>(),
                                                 v.at("tn").get<std::size_t>(), v.at("fn").get<std::size_t>()};
    }
    r.dpp_omitted_groups = j.at("dpp_omitted_groups").get<std::vector<GroupId>>();
    r.no_positive_predictions = j.at("no_positive_predictions").get<bool>();
    return r;
}

}  // namespace fairbayes
