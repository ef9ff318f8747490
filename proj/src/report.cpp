#include "fairbayes/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fairbayes/errors.hpp"

namespace fairbayes {

ReportFormat parse_report_format(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "table") return ReportFormat::Table;
    if (s == "csv") return ReportFormat::Csv;
    throw ConfigError("unknown report format '" + s + "' (expected json, table or csv)");
}

namespace {

nlohmann::json to_json(const MeanStd& v) { return {{"mean", v.mean}, {"std", v.std}}; }

MeanStd mean_std_from_json(const nlohmann::json& j) {
    return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

nlohmann::json to_json(const MethodSummary& m) {
    return {{"count", m.count},
            {"accuracy", to_json(m.accuracy)},
            {"dpp", to_json(m.dpp)},
            {"cost_risk", to_json(m.cost_risk)}};
}

MethodSummary method_from_json(const nlohmann::json& j) {
    return {j.at("count").get<std::size_t>(), mean_std_from_json(j.at("accuracy")),
            mean_std_from_json(j.at("dpp")), mean_std_from_json(j.at("cost_risk"))};
}

ReplicationStatus parse_status(const std::string& s) {
    for (auto st : {ReplicationStatus::Ok, ReplicationStatus::ConditionFailed,
                    ReplicationStatus::CalibrationInfeasible}) {
        if (to_string(st) == s) return st;
    }
    throw DataError("unknown replication status '" + s + "'");
}

nlohmann::json to_json(const ReplicationRecord& r) {
    return {{"replication", r.replication},
            {"status", to_string(r.status)},
            {"diagnostic", r.diagnostic},
            {"fair", r.fair ? fairbayes::to_json(*r.fair) : nlohmann::json(nullptr)},
            {"baseline", fairbayes::to_json(r.baseline)},
            {"thresholds", r.thresholds},
            {"anchor_t", r.anchor_t}};
}

ReplicationRecord record_from_json(const nlohmann::json& j) {
    ReplicationRecord r;
    r.replication = j.at("replication").get<std::size_t>();
    r.status = parse_status(j.at("status").get<std::string>());
    r.diagnostic = j.at("diagnostic").get<std::string>();
    if (!j.at("fair").is_null()) r.fair = eval_report_from_json(j.at("fair"));
    r.baseline = eval_report_from_json(j.at("baseline"));
    r.thresholds = j.at("thresholds").get<std::vector<double>>();
    r.anchor_t = j.at("anchor_t").get<double>();
    return r;
}

}  // namespace

nlohmann::json to_json(const ExperimentReport& r, JsonOptions opts) {
    nlohmann::json j;
    j["kind"] = to_string(r.kind);
    j["sweep_parameter"] = r.sweep_parameter ? nlohmann::json(to_string(*r.sweep_parameter)) : nlohmann::json(nullptr);
    j["config"] = r.config;
    auto& points = j["points"] = nlohmann::json::array();
    for (const auto& p : r.points) {
        nlohmann::json pj;
        pj["value"] = p.value ? nlohmann::json(*p.value) : nlohmann::json(nullptr);
        pj["fair"] = to_json(p.fair);
        pj["baseline"] = to_json(p.baseline);
        pj["condition_failed"] = p.condition_failed;
        pj["calibration_infeasible"] = p.calibration_infeasible;
        pj["oracle"] = p.oracle ? oracle::to_json(*p.oracle) : nlohmann::json(nullptr);
        pj["t_test"] = p.t_test ? nlohmann::json{{"t_stat", p.t_test->t_stat},
                                                 {"p_value", p.t_test->p_value},
                                                 {"n", p.t_test->n}}
                                : nlohmann::json(nullptr);
        pj["t_test_note"] = p.t_test_note;
        auto& recs = pj["records"] = nlohmann::json::array();
        for (const auto& rec : p.records) recs.push_back(to_json(rec));
        points.push_back(std::move(pj));
    }
    if (opts.include_timings) {
        j["timings"] = {{"total_seconds", r.timings.total_seconds},
                        {"point_seconds", r.timings.point_seconds}};
    }
    return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    try {
        ExperimentReport r;
        r.kind = parse_experiment_kind(j.at("kind").get<std::string>());
        if (!j.at("sweep_parameter").is_null()) {
            r.sweep_parameter = parse_sweep_parameter(j.at("sweep_parameter").get<std::string>());
        }
        r.config = j.at("config");
        for (const auto& pj : j.at("points")) {
            SweepPoint p;
            if (!pj.at("value").is_null()) p.value = pj.at("value").get<double>();
            p.fair = method_from_json(pj.at("fair"));
            p.baseline = method_from_json(pj.at("baseline"));
            p.condition_failed = pj.at("condition_failed").get<std::size_t>();
            p.calibration_infeasible = pj.at("calibration_infeasible").get<std::size_t>();
            if (!pj.at("oracle").is_null()) p.oracle = oracle::oracle_solution_from_json(pj.at("oracle"));
            if (!pj.at("t_test").is_null()) {
                const auto& t = pj.at("t_test");
                p.t_test = PairedTTest{t.at("t_stat").get<double>(), t.at("p_value").get<double>(),
                                       t.at("n").get<std::size_t>()};
            }
            p.t_test_note = pj.at("t_test_note").get<std::string>();
            for (const auto& rj : pj.at("records")) p.records.push_back(record_from_json(rj));
            r.points.push_back(std::move(p));
        }
        if (j.contains("timings")) {
            r.timings.total_seconds = j.at("timings").at("total_seconds").get<double>();
            r.timings.point_seconds = j.at("timings").at("point_seconds").get<std::vector<double>>();
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report document: ") + e.what());
    }
}

std::string format_mean_std(const MeanStd& v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f (%.3f)", v.mean, v.std);
    return buf;
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string format_value(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string render_table(const ExperimentReport& r) {
    const std::string label = r.sweep_parameter ? to_string(*r.sweep_parameter) : std::string("run");
    const std::vector<std::size_t> w{10, 10, 10, 10, 16, 16, 16, 16, 8, 10};
    std::ostringstream os;
    auto row = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << pad(cells[i], w[i]) << (i + 1 < cells.size() ? " " : "");
        os << '\n';
    };
    os << pad("", w[0]) << " " << pad("Theoretical value", w[1] + w[2] + w[3] + 2) << " "
       << pad("Estimated (mean (std) over replications)", 16 * 4 + 3) << '\n';
    row({"", "Fair", "Unconstr.", "Unconstr.", "FairBayes-DPP", "FairBayes-DPP", "Unconstrained",
         "Unconstrained", "", ""});
    row({label, "ACC", "DPP", "ACC", "DPP", "ACC", "DPP", "ACC", "cond-fail", "infeasible"});
    for (const auto& p : r.points) {
        std::vector<std::string> cells;
        cells.push_back(p.value ? format_value(*p.value) : "-");
        if (p.oracle) {
            cells.push_back(fixed3(p.oracle->fair_accuracy));
            cells.push_back(fixed3(p.oracle->uncon_dpp));
            cells.push_back(fixed3(p.oracle->uncon_accuracy));
        } else {
            cells.insert(cells.end(), {"-", "-", "-"});
        }
        if (p.records.empty()) {
            cells.insert(cells.end(), {"-", "-", "-", "-", "-", "-"});
        } else {
            cells.push_back(p.fair.count ? format_mean_std(p.fair.dpp) : "-");
            cells.push_back(p.fair.count ? format_mean_std(p.fair.accuracy) : "-");
            cells.push_back(format_mean_std(p.baseline.dpp));
            cells.push_back(format_mean_std(p.baseline.accuracy));
            cells.push_back(std::to_string(p.condition_failed));
            cells.push_back(std::to_string(p.calibration_infeasible));
        }
        row(cells);
    }
    for (const auto& p : r.points) {
        if (p.t_test) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "paired one-sided t-test (DPP fair < base)%s: t = %.4f, p = %.3g, n = %zu\n",
                          p.value ? (" at " + to_string(*r.sweep_parameter) + "=" + format_value(*p.value)).c_str() : "",
                          p.t_test->t_stat, p.t_test->p_value, p.t_test->n);
            os << buf;
        }
    }
    return os.str();
}

std::string render_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "sweep_parameter,sweep_value,replication,method,status,accuracy,cost_risk,dpp\n";
    os.precision(17);
    const std::string param = r.sweep_parameter ? to_string(*r.sweep_parameter) : "";
    for (const auto& p : r.points) {
        const std::string value = p.value ? format_value(*p.value) : "";
        for (const auto& rec : p.records) {
            os << param << ',' << value << ',' << rec.replication << ",fairbayes-dpp," << to_string(rec.status) << ',';
            if (rec.fair) os << rec.fair->accuracy << ',' << rec.fair->cost_risk << ',' << rec.fair->dpp;
            else os << ",,";
            os << '\n';
            os << param << ',' << value << ',' << rec.replication << ",unconstrained,ok," << rec.baseline.accuracy
               << ',' << rec.baseline.cost_risk << ',' << rec.baseline.dpp << '\n';
        }
    }
    return os.str();
}

std::string render(const ExperimentReport& r, ReportFormat format, JsonOptions opts) {
    switch (format) {
        case ReportFormat::Json: return to_json(r, opts).dump(2) + "\n";
        case ReportFormat::Table: return render_table(r);
        case ReportFormat::Csv: return render_csv(r);
    }
    return {};
}

void emit_report(const ExperimentReport& r, ReportFormat format, const std::filesystem::path& path,
                 JsonOptions opts) {
    const std::string text = render(r, format, opts);
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report to '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace fairbayes
