// fairbayes: command-line harness for predictive-parity post-processing.
//
//   fairbayes oracle    --preset table1               theoretical block only
//   fairbayes synthetic --preset multi3               Gaussian simulation
//   fairbayes sweep     --preset sample-size          Gaussian simulation sweep
//   fairbayes tabular   --preset adult --set csv=...  CSV pipeline
//   fairbayes generate  --rows 20000 --out data.csv   synthetic CSV
//
// Exit codes: 0 success, 2 sufficient condition fails, 1 any other error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "fairbayes/errors.hpp"
#include "fairbayes/experiment.hpp"
#include "fairbayes/gaussian_oracle.hpp"
#include "fairbayes/report.hpp"

namespace {

struct CommonOptions {
    std::string preset;
    std::string config;
    std::vector<std::string> settings;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t replications = 0;
    std::string out = "-";
    std::string format = "table";
    bool no_timings = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& default_preset) {
    o.preset = default_preset;
    cmd->add_option("--preset", o.preset, "named configuration")->capture_default_str();
    cmd->add_option("--config", o.config, "key = value configuration file");
    cmd->add_option("--set", o.settings, "override one setting, key=value (repeatable)");
    cmd->add_option("--seed", o.seed, "master seed")->each([&o](const std::string&) { o.seed_given = true; });
    cmd->add_option("--replications", o.replications, "replications per configuration");
    cmd->add_option("--out", o.out, "output path, - for stdout")->capture_default_str();
    cmd->add_option("--format", o.format, "json, table or csv")
        ->check(CLI::IsMember({"json", "table", "csv"}))
        ->capture_default_str();
    cmd->add_flag("--no-timings", o.no_timings, "omit wall-clock timings from JSON output");
}

fairbayes::ExperimentConfig build_config(const CommonOptions& o) {
    auto cfg = o.preset.empty() ? fairbayes::ExperimentConfig{} : fairbayes::preset(o.preset);
    if (!o.config.empty()) fairbayes::apply_config_file(cfg, o.config);
    for (const auto& s : o.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw fairbayes::ConfigError("--set expects key=value, got '" + s + "'");
        fairbayes::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (o.seed_given) cfg.seed = o.seed;
    if (o.replications > 0) cfg.replications = o.replications;
    return cfg;
}

void emit(const fairbayes::ExperimentReport& r, const CommonOptions& o) {
    fairbayes::emit_report(r, fairbayes::parse_report_format(o.format), o.out,
                           fairbayes::JsonOptions{!o.no_timings});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fair Bayes-optimal classification under predictive parity"};
    app.require_subcommand(1);

    CommonOptions oracle_opts, synthetic_opts, sweep_opts, tabular_opts, generate_opts;
    std::vector<double> p_values;

    auto* oracle_cmd = app.add_subcommand("oracle", "print the theoretical fair/unconstrained block");
    add_common(oracle_cmd, oracle_opts, "table1");
    oracle_cmd->add_option("--p", p_values, "values of P(Y=1|A=1) to tabulate");

    auto* synthetic_cmd = app.add_subcommand("synthetic", "run the Gaussian simulation");
    add_common(synthetic_cmd, synthetic_opts, "table1");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a Gaussian simulation sweep");
    add_common(sweep_cmd, sweep_opts, "sample-size");

    auto* tabular_cmd = app.add_subcommand("tabular", "run the CSV pipeline");
    add_common(tabular_cmd, tabular_opts, "adult");

    auto* generate_cmd = app.add_subcommand("generate", "write a CSV sampled from the Gaussian model");
    add_common(generate_cmd, generate_opts, "");
    std::size_t generate_rows = 20000;
    generate_cmd->add_option("--rows", generate_rows, "number of rows")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (oracle_cmd->parsed()) {
            auto cfg = build_config(oracle_opts);
            if (!p_values.empty()) cfg.sweep = fairbayes::Sweep{fairbayes::SweepParameter::PY1, p_values};
            emit(fairbayes::run_oracle(cfg), oracle_opts);
        } else if (synthetic_cmd->parsed()) {
            emit(fairbayes::run_synthetic(build_config(synthetic_opts)), synthetic_opts);
        } else if (sweep_cmd->parsed()) {
            auto cfg = build_config(sweep_opts);
            if (!cfg.sweep) throw fairbayes::ConfigError("sweep needs sweep_param and sweep_values");
            emit(fairbayes::run_synthetic(cfg), sweep_opts);
        } else if (tabular_cmd->parsed()) {
            auto cfg = build_config(tabular_opts);
            cfg.kind = fairbayes::ExperimentKind::Tabular;
            const auto report = fairbayes::run_tabular(cfg);
            for (const auto& w : report.config.value("load_warnings", std::vector<std::string>{})) {
                std::cerr << "warning: " << w << '\n';
            }
            emit(report, tabular_opts);
        } else if (generate_cmd->parsed()) {
            const auto cfg = build_config(generate_opts);
            if (generate_opts.out.empty() || generate_opts.out == "-") {
                throw fairbayes::ConfigError("generate needs --out <path>");
            }
            fairbayes::write_csv(fairbayes::oracle::sample(cfg.model, generate_rows, cfg.seed), generate_opts.out);
        }
    } catch (const fairbayes::ConditionFailedError& e) {
        std::cerr << "condition failed: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
