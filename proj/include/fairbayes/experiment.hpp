#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbayes/calibration.hpp"
#include "fairbayes/data.hpp"
#include "fairbayes/gaussian_oracle.hpp"
#include "fairbayes/metrics.hpp"
#include "fairbayes/score_model.hpp"

namespace fairbayes {

enum class ExperimentKind { SyntheticTable1, SyntheticSweep, Tabular };
enum class SweepParameter { PY1, PA0, Cost, NTrain };

std::string to_string(ExperimentKind k);
std::string to_string(SweepParameter p);
ExperimentKind parse_experiment_kind(const std::string& s);
SweepParameter parse_sweep_parameter(const std::string& s);

struct Sweep {
    SweepParameter parameter = SweepParameter::PY1;
    std::vector<double> values;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::SyntheticSweep;
    oracle::GaussianModelSpec model = oracle::GaussianModelSpec::binary(0.3, 0.2, 0.6);
    std::filesystem::path csv_path;
    CsvSchema schema;
    // Fractions and replacement mode for tabular runs; the seed is derived per replication.
    SplitSpec split;
    TrainConfig train;
    CalibrationConfig calib;
    std::size_t n_train = 50000;
    std::size_t n_test = 5000;
    std::size_t replications = 20;
    std::uint64_t seed = 2023;
    std::optional<Sweep> sweep;
    // Worker threads; 0 reads FAIRBAYES_THREADS, falling back to the hardware count.
    unsigned threads = 0;

    void validate() const;
};

// Named configurations: table1, sample-size, minority, cost, multi3, multi5,
// adult, compas. Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);

// Applies one key=value setting (keys as in the README); throws ConfigError
// for unknown keys or malformed values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
// Reads `key = value` lines; '#' starts a comment.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);

enum class ReplicationStatus { Ok, ConditionFailed, CalibrationInfeasible };
std::string to_string(ReplicationStatus s);

struct ReplicationRecord {
    std::size_t replication = 0;
    ReplicationStatus status = ReplicationStatus::Ok;
    std::string diagnostic;
    // Calibrated classifier; absent unless status is Ok.
    std::optional<EvalReport> fair;
    // Thresholds at the cost parameter for every group.
    EvalReport baseline;
    std::vector<double> thresholds;
    double anchor_t = 0.0;
};

struct MeanStd {
    double mean = 0.0;
    // Sample standard deviation; 0 when fewer than two values.
    double std = 0.0;
};

struct MethodSummary {
    std::size_t count = 0;
    MeanStd accuracy, dpp, cost_risk;
};

struct SweepPoint {
    std::optional<double> value;
    std::vector<ReplicationRecord> records;
    MethodSummary fair, baseline;
    std::size_t condition_failed = 0;
    std::size_t calibration_infeasible = 0;
    std::optional<oracle::OracleFairSolution> oracle;
    std::optional<PairedTTest> t_test;
    std::string t_test_note;
};

struct Timings {
    double total_seconds = 0.0;
    std::vector<double> point_seconds;
};

struct ExperimentReport {
    ExperimentKind kind = ExperimentKind::SyntheticSweep;
    std::optional<SweepParameter> sweep_parameter;
    nlohmann::json config;
    std::vector<SweepPoint> points;
    Timings timings;
};

MeanStd mean_std(const std::vector<double>& values);
// Recomputes a point's aggregates, counts and paired test from its records.
void summarize(SweepPoint& point);

// Per replication: sample train and test sets, fit the logistic score model,
// calibrate on the training set, evaluate both the calibrated classifier and
// the threshold-at-cost baseline on the test set. Throws ConditionFailedError
// when the population model violates the sufficient condition.
ExperimentReport run_synthetic(const ExperimentConfig& cfg);

// Per replication: bootstrap train/validation/test splits of the CSV, fit on
// train, calibrate on validation, evaluate on test; includes the one-sided
// paired t-test of fair versus baseline DPP.
ExperimentReport run_tabular(const ExperimentConfig& cfg);
ExperimentReport run_tabular(const ExperimentConfig& cfg, const TabularDataset& data);

// The oracle block alone for each swept value.
ExperimentReport run_oracle(const ExperimentConfig& cfg);

}  // namespace fairbayes
