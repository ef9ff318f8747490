#include "fairbayes/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "fairbayes/errors.hpp"
#include "fairbayes/random.hpp"

namespace fairbayes {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SyntheticTable1: return "synthetic-table1";
        case ExperimentKind::SyntheticSweep: return "synthetic-sweep";
        case ExperimentKind::Tabular: return "tabular";
    }
    return "unknown";
}

std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::PY1: return "p_Y1";
        case SweepParameter::PA0: return "p_A0";
        case SweepParameter::Cost: return "cost";
        case SweepParameter::NTrain: return "n_train";
    }
    return "unknown";
}

std::string to_string(ReplicationStatus s) {
    switch (s) {
        case ReplicationStatus::Ok: return "ok";
        case ReplicationStatus::ConditionFailed: return "condition-failed";
        case ReplicationStatus::CalibrationInfeasible: return "calibration-infeasible";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    for (auto k : {ExperimentKind::SyntheticTable1, ExperimentKind::SyntheticSweep, ExperimentKind::Tabular}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown experiment kind '" + s + "'");
}

SweepParameter parse_sweep_parameter(const std::string& s) {
    for (auto p : {SweepParameter::PY1, SweepParameter::PA0, SweepParameter::Cost, SweepParameter::NTrain}) {
        if (to_string(p) == s) return p;
    }
    throw ConfigError("unknown sweep parameter '" + s + "' (expected p_Y1, p_A0, cost or n_train)");
}

void ExperimentConfig::validate() const {
    if (replications < 1) throw ConfigError("replications must be at least 1");
    train.validate();
    calib.validate();
    if (kind == ExperimentKind::Tabular) {
        if (sweep) throw ConfigError("tabular experiments do not support sweeps");
    } else {
        model.validate();
        if (n_train < 1 || n_test < 1) throw ConfigError("n_train and n_test must be positive");
        if (sweep && sweep->values.empty()) throw ConfigError("sweep needs at least one value");
    }
}

namespace {

std::vector<double> parse_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        item = item.substr(b, e - b + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError("malformed number '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> parse_names(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    const auto v = parse_list(value);
    if (v.size() != 1) throw ConfigError("setting '" + key + "' expects one number");
    return v.front();
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("setting '" + key + "' expects a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

std::uint64_t parse_seed(const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("seed must be an unsigned 64-bit integer");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("setting '" + key + "' expects true or false");
}

void set_binary_prob(oracle::GaussianModelSpec& m, std::size_t which, bool label, double v) {
    if (m.group_probs.size() != 2) throw ConfigError("binary model settings need a two-group model");
    if (label) {
        m.label_probs[which] = v;
    } else {
        m.group_probs[which] = v;
        m.group_probs[1 - which] = 1.0 - v;
    }
}

oracle::GaussianModelSpec with_sweep_value(oracle::GaussianModelSpec m, SweepParameter p, double v) {
    if (p == SweepParameter::PY1) set_binary_prob(m, 1, true, v);
    if (p == SweepParameter::PA0) set_binary_prob(m, 0, false, v);
    m.validate();
    return m;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "kind") cfg.kind = parse_experiment_kind(value);
    else if (key == "p_Y0") set_binary_prob(cfg.model, 0, true, parse_double(key, value));
    else if (key == "p_Y1") set_binary_prob(cfg.model, 1, true, parse_double(key, value));
    else if (key == "p_A1") set_binary_prob(cfg.model, 1, false, parse_double(key, value));
    else if (key == "p_A0") set_binary_prob(cfg.model, 0, false, parse_double(key, value));
    else if (key == "group_probs") {
        cfg.model.group_probs = parse_list(value);
        cfg.model.layout = oracle::MeanLayout::MultiClass;
    } else if (key == "label_probs") {
        cfg.model.label_probs = parse_list(value);
        cfg.model.layout = oracle::MeanLayout::MultiClass;
    } else if (key == "layout") {
        if (value == "binary") cfg.model.layout = oracle::MeanLayout::Binary;
        else if (value == "multi-class") cfg.model.layout = oracle::MeanLayout::MultiClass;
        else throw ConfigError("layout must be binary or multi-class");
    } else if (key == "sigma") cfg.model.sigma = parse_double(key, value);
    else if (key == "cost") cfg.calib.cost = parse_double(key, value);
    else if (key == "anchor_group") cfg.calib.anchor_group = static_cast<GroupId>(parse_count(key, value));
    else if (key == "grid_step") cfg.calib.grid_step = parse_double(key, value);
    else if (key == "condition_slack") cfg.calib.condition_slack = parse_double(key, value);
    else if (key == "ppv_match_tol") cfg.calib.ppv_match_tol = parse_double(key, value);
    else if (key == "lr" || key == "learning_rate") cfg.train.learning_rate = parse_double(key, value);
    else if (key == "epochs") cfg.train.epochs = static_cast<int>(parse_count(key, value));
    else if (key == "batch_size") cfg.train.batch_size = parse_count(key, value);
    else if (key == "l2") cfg.train.l2 = parse_double(key, value);
    else if (key == "n_train") cfg.n_train = parse_count(key, value);
    else if (key == "n_test") cfg.n_test = parse_count(key, value);
    else if (key == "replications") cfg.replications = parse_count(key, value);
    else if (key == "seed") cfg.seed = parse_seed(value);
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_count(key, value));
    else if (key == "csv") cfg.csv_path = value;
    else if (key == "group_col") cfg.schema.group_column = value;
    else if (key == "label_col") cfg.schema.label_column = value;
    else if (key == "numeric_cols") cfg.schema.numeric_columns = parse_names(value);
    else if (key == "categorical_cols") cfg.schema.categorical_columns = parse_names(value);
    else if (key == "train_frac") cfg.split.train_frac = parse_double(key, value);
    else if (key == "calib_frac") cfg.split.calib_frac = parse_double(key, value);
    else if (key == "test_frac") cfg.split.test_frac = parse_double(key, value);
    else if (key == "with_replacement") cfg.split.with_replacement = parse_bool(key, value);
    else if (key == "sweep_param") {
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->parameter = parse_sweep_parameter(value);
    } else if (key == "sweep_values") {
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->values = parse_list(value);
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        apply_setting(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.train = TrainConfig{0.1, 30, 256, 0, 0.0};
    if (name == "table1") {
        cfg.kind = ExperimentKind::SyntheticTable1;
        cfg.sweep = Sweep{SweepParameter::PY1, {0.2, 0.3, 0.4, 0.5, 0.6}};
    } else if (name == "sample-size") {
        cfg.sweep = Sweep{SweepParameter::NTrain, {5000, 10000, 15000, 20000, 25000}};
    } else if (name == "minority") {
        cfg.n_train = 25000;
        cfg.sweep = Sweep{SweepParameter::PA0, {0.5, 0.6, 0.7, 0.8, 0.9}};
    } else if (name == "cost") {
        cfg.model = oracle::GaussianModelSpec::binary(0.3, 0.2, 0.5);
        cfg.n_train = 25000;
        cfg.sweep = Sweep{SweepParameter::Cost, {0.4, 0.5, 0.6, 0.7, 0.8}};
    } else if (name == "multi3") {
        cfg.model = oracle::GaussianModelSpec::multi_class({0.3, 0.3, 0.4}, {0.2, 0.6, 0.3});
    } else if (name == "multi5") {
        cfg.model = oracle::GaussianModelSpec::multi_class({0.2, 0.3, 0.2, 0.15, 0.15},
                                                           {0.2, 0.6, 0.3, 0.4, 0.2});
    } else if (name == "adult") {
        cfg.kind = ExperimentKind::Tabular;
        cfg.train = TrainConfig{1e-1, 200, 512, 0, 0.0};
    } else if (name == "compas") {
        cfg.kind = ExperimentKind::Tabular;
        cfg.train = TrainConfig{5e-4, 500, 2048, 0, 0.0};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["kind"] = to_string(cfg.kind);
    if (cfg.kind == ExperimentKind::Tabular) {
        j["csv"] = cfg.csv_path.string();
        j["schema"] = {{"group_col", cfg.schema.group_column},
                       {"label_col", cfg.schema.label_column},
                       {"numeric_cols", cfg.schema.numeric_columns},
                       {"categorical_cols", cfg.schema.categorical_columns}};
        j["split"] = {{"train_frac", cfg.split.train_frac},
                      {"calib_frac", cfg.split.calib_frac},
                      {"test_frac", cfg.split.test_frac},
                      {"with_replacement", cfg.split.with_replacement}};
    } else {
        j["model"] = {{"group_probs", cfg.model.group_probs},
                      {"label_probs", cfg.model.label_probs},
                      {"sigma", cfg.model.sigma},
                      {"layout", cfg.model.layout == oracle::MeanLayout::Binary ? "binary" : "multi-class"}};
        j["n_train"] = cfg.n_train;
        j["n_test"] = cfg.n_test;
    }
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"l2", cfg.train.l2}};
    j["calibration"] = {{"cost", cfg.calib.cost},
                        {"anchor_group", cfg.calib.anchor_group},
                        {"grid_step", cfg.calib.grid_step},
                        {"condition_slack", cfg.calib.condition_slack},
                        {"ppv_match_tol", cfg.calib.ppv_match_tol}};
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    if (cfg.sweep) j["sweep"] = {{"parameter", to_string(cfg.sweep->parameter)}, {"values", cfg.sweep->values}};
    return j;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

namespace {

MethodSummary summarize_method(const std::vector<const EvalReport*>& reports) {
    std::vector<double> acc, dpp, risk;
    for (const auto* r : reports) {
        acc.push_back(r->accuracy);
        dpp.push_back(r->dpp);
        risk.push_back(r->cost_risk);
    }
    return {reports.size(), mean_std(acc), mean_std(dpp), mean_std(risk)};
}

}  // namespace

void summarize(SweepPoint& point) {
    std::vector<const EvalReport*> fair, base;
    std::vector<double> fair_dpp, base_dpp;
    point.condition_failed = 0;
    point.calibration_infeasible = 0;
    for (const auto& r : point.records) {
        base.push_back(&r.baseline);
        if (r.status == ReplicationStatus::ConditionFailed) ++point.condition_failed;
        if (r.status == ReplicationStatus::CalibrationInfeasible) ++point.calibration_infeasible;
        if (r.fair) {
            fair.push_back(&*r.fair);
            fair_dpp.push_back(r.fair->dpp);
            base_dpp.push_back(r.baseline.dpp);
        }
    }
    point.fair = summarize_method(fair);
    point.baseline = summarize_method(base);
    point.t_test.reset();
    point.t_test_note.clear();
    if (fair_dpp.size() < 2) {
        point.t_test_note = "fewer than two calibrated replications";
        return;
    }
    try {
        point.t_test = paired_t_one_sided(fair_dpp, base_dpp);
    } catch (const DegenerateTestError& e) {
        point.t_test_note = e.what();
    }
}

namespace {

unsigned worker_count(unsigned requested, std::size_t jobs) {
    unsigned n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("FAIRBAYES_THREADS")) n = static_cast<unsigned>(std::atoi(env));
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

// Runs job(i) for i in [0, count) on a small pool; results land in
// caller-owned slots so the reduction order is fixed. The first exception by
// job index is rethrown.
template <typename Job>
void run_parallel(std::size_t count, unsigned threads, Job job) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = worker_count(threads, count);
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Shared tail of one replication: calibrate on `calib`, evaluate on `test`.
ReplicationRecord calibrate_and_evaluate(std::size_t replication, const ScoreModel& model,
                                         const TabularDataset& calib, const TabularDataset& test,
                                         const CalibrationConfig& ccfg) {
    ReplicationRecord rec;
    rec.replication = replication;
    const auto test_scores = score_rows(model, test);
    const auto base_thresholds = ThresholdSet::uniform(test.num_groups(), ccfg.cost);
    const auto base_preds = predict_all(base_thresholds, test_scores, test.groups());
    rec.baseline = evaluate(base_preds, test.labels(), test.groups(), ccfg.cost);

    const auto calib_scores = score_rows(model, calib);
    CalibrationResult cal;
    try {
        const auto views = group_views(calib, calib_scores);
        cal = calibrate(views, ScoredSample{calib_scores, calib.groups(), calib.labels()}, ccfg);
    } catch (const CalibrationInputError& e) {
        rec.status = ReplicationStatus::CalibrationInfeasible;
        rec.diagnostic = e.what();
        return rec;
    } catch (const CalibrationInfeasibleError& e) {
        rec.status = ReplicationStatus::CalibrationInfeasible;
        rec.diagnostic = e.what();
        return rec;
    }
    if (!cal.condition_holds) {
        rec.status = ReplicationStatus::ConditionFailed;
        rec.diagnostic = cal.diagnostic;
        return rec;
    }
    const auto th = cal.thresholds->values();
    rec.thresholds.assign(th.begin(), th.end());
    rec.anchor_t = cal.anchor_t;
    const auto fair_preds = predict_all(*cal.thresholds, test_scores, test.groups());
    rec.fair = evaluate(fair_preds, test.labels(), test.groups(), ccfg.cost);
    return rec;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PointSetup {
    std::optional<double> value;
    oracle::GaussianModelSpec model;
    CalibrationConfig calib;
    std::size_t n_train;
};

std::vector<PointSetup> synthetic_points(const ExperimentConfig& cfg) {
    std::vector<PointSetup> out;
    if (!cfg.sweep) {
        out.push_back({std::nullopt, cfg.model, cfg.calib, cfg.n_train});
        return out;
    }
    for (double v : cfg.sweep->values) {
        PointSetup p{v, cfg.model, cfg.calib, cfg.n_train};
        switch (cfg.sweep->parameter) {
            case SweepParameter::PY1:
            case SweepParameter::PA0: p.model = with_sweep_value(cfg.model, cfg.sweep->parameter, v); break;
            case SweepParameter::Cost:
                p.calib.cost = v;
                p.calib.validate();
                break;
            case SweepParameter::NTrain:
                if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("n_train sweep values must be positive integers");
                p.n_train = static_cast<std::size_t>(v);
                break;
        }
        out.push_back(std::move(p));
    }
    return out;
}

oracle::OracleFairSolution oracle_or_abort(const oracle::GaussianModelSpec& model, double cost) {
    try {
        return oracle::solve_fair_optimal(model, cost);
    } catch (const OracleInfeasibleError& e) {
        throw ConditionFailedError(e.what());
    }
}

}  // namespace

ExperimentReport run_oracle(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    ExperimentReport report;
    report.kind = cfg.kind;
    report.config = to_json(cfg);
    if (cfg.sweep) report.sweep_parameter = cfg.sweep->parameter;
    for (const auto& p : synthetic_points(cfg)) {
        const auto t0 = Clock::now();
        SweepPoint point;
        point.value = p.value;
        point.oracle = oracle_or_abort(p.model, p.calib.cost);
        summarize(point);
        report.points.push_back(std::move(point));
        report.timings.point_seconds.push_back(seconds_since(t0));
    }
    report.timings.total_seconds = seconds_since(start);
    return report;
}

ExperimentReport run_synthetic(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.kind == ExperimentKind::Tabular) throw ConfigError("run_synthetic needs a synthetic experiment kind");
    const auto start = Clock::now();
    const auto setups = synthetic_points(cfg);

    ExperimentReport report;
    report.kind = cfg.kind;
    report.config = to_json(cfg);
    if (cfg.sweep) report.sweep_parameter = cfg.sweep->parameter;
    report.points.resize(setups.size());
    for (std::size_t k = 0; k < setups.size(); ++k) {
        report.points[k].value = setups[k].value;
        report.points[k].oracle = oracle_or_abort(setups[k].model, setups[k].calib.cost);
        report.points[k].records.resize(cfg.replications);
    }

    // Replication r uses the same seeds at every sweep point (common random numbers).
    const std::size_t jobs = setups.size() * cfg.replications;
    std::vector<double> job_seconds(jobs);
    run_parallel(jobs, cfg.threads, [&](std::size_t job) {
        const auto t0 = Clock::now();
        const std::size_t k = job / cfg.replications, r = job % cfg.replications;
        const auto& s = setups[k];
        const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
        const auto train_set = oracle::sample(s.model, s.n_train, derive_seed(rep_seed, 0));
        const auto test_set = oracle::sample(s.model, cfg.n_test, derive_seed(rep_seed, 1));
        TrainConfig tcfg = cfg.train;
        tcfg.seed = derive_seed(rep_seed, 2);
        const auto model = train(train_set, tcfg);
        report.points[k].records[r] = calibrate_and_evaluate(r, model, train_set, test_set, s.calib);
        job_seconds[job] = seconds_since(t0);
    });

    for (std::size_t k = 0; k < setups.size(); ++k) {
        summarize(report.points[k]);
        double secs = 0.0;
        for (std::size_t r = 0; r < cfg.replications; ++r) secs += job_seconds[k * cfg.replications + r];
        report.timings.point_seconds.push_back(secs);
    }
    report.timings.total_seconds = seconds_since(start);
    return report;
}

ExperimentReport run_tabular(const ExperimentConfig& cfg, const TabularDataset& data) {
    cfg.validate();
    const auto start = Clock::now();
    ExperimentReport report;
    report.kind = ExperimentKind::Tabular;
    report.config = to_json(cfg);
    report.points.resize(1);
    auto& point = report.points.front();
    point.records.resize(cfg.replications);

    run_parallel(cfg.replications, cfg.threads, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
        SplitSpec sspec = cfg.split;
        sspec.seed = derive_seed(rep_seed, 3);
        const auto parts = split(data, sspec);
        TrainConfig tcfg = cfg.train;
        tcfg.seed = derive_seed(rep_seed, 2);
        const auto model = train(parts.train, tcfg);
        point.records[r] = calibrate_and_evaluate(r, model, parts.calib, parts.test, cfg.calib);
    });

    summarize(point);
    report.timings.total_seconds = seconds_since(start);
    report.timings.point_seconds.push_back(report.timings.total_seconds);
    return report;
}

ExperimentReport run_tabular(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.csv_path.empty()) throw ConfigError("tabular experiments need a CSV path (set csv=...)");
    const auto loaded = load_csv(cfg.csv_path, cfg.schema);
    auto report = run_tabular(cfg, loaded.data);
    report.config["dropped_columns"] = loaded.dropped_columns;
    report.config["load_warnings"] = loaded.warnings;
    return report;
}

}  // namespace fairbayes
