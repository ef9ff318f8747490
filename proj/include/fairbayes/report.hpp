#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fairbayes/experiment.hpp"

namespace fairbayes {

enum class ReportFormat { Json, Table, Csv };
ReportFormat parse_report_format(const std::string& s);

struct JsonOptions {
    // Wall-clock timings differ between runs; leave them out for byte-stable output.
    bool include_timings = true;
};

nlohmann::json to_json(const ExperimentReport& r, JsonOptions opts = {});
ExperimentReport report_from_json(const nlohmann::json& j);

// "0.814 (0.005)"
std::string format_mean_std(const MeanStd& v);

std::string render_table(const ExperimentReport& r);
std::string render_csv(const ExperimentReport& r);
std::string render(const ExperimentReport& r, ReportFormat format, JsonOptions opts = {});

// Writes to `path`, or to stdout when the path is empty or "-".
void emit_report(const ExperimentReport& r, ReportFormat format, const std::filesystem::path& path,
                 JsonOptions opts = {});

}  // namespace fairbayes
