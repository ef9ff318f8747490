#include "fairbayes/score_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fairbayes/errors.hpp"
#include "fairbayes/numeric.hpp"
#include "fairbayes/random.hpp"

namespace fairbayes {

std::vector<double> score_rows(const ScoreFunction& f, const TabularDataset& ds) {
    std::vector<double> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = f.predict_eta(ds.row(i), ds.group(i));
    return out;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be nonnegative");
}

ScoreModel::ScoreModel(std::size_t num_features, int num_groups)
    : ScoreModel(num_features, num_groups,
                 std::vector<double>(num_features + static_cast<std::size_t>(num_groups), 0.0), 0.0) {}

ScoreModel::ScoreModel(std::size_t num_features, int num_groups, std::vector<double> weights,
                       double bias, TrainingMeta meta)
    : num_features_(num_features),
      num_groups_(num_groups),
      weights_(std::move(weights)),
      bias_(bias),
      meta_(meta) {
    if (num_groups_ < 1) throw ShapeError("model needs at least one group");
    if (weights_.size() != num_features_ + static_cast<std::size_t>(num_groups_)) {
        throw ShapeError("weight vector must have length d + number of groups");
    }
    for (double w : weights_) {
        if (!std::isfinite(w)) throw DataError("non-finite model weight");
    }
    if (!std::isfinite(bias_)) throw DataError("non-finite model bias");
}

double ScoreModel::logit(std::span<const double> x, GroupId a) const {
    if (x.size() != num_features_) {
        throw ShapeError("feature vector has width " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(num_features_));
    }
    if (a < 0 || a >= num_groups_) throw ShapeError("group id out of range for model");
    double z = bias_ + weights_[num_features_ + static_cast<std::size_t>(a)];
    for (std::size_t j = 0; j < num_features_; ++j) z += weights_[j] * x[j];
    return z;
}

double ScoreModel::predict_eta(std::span<const double> x, GroupId a) const {
    // Clamp to the open interval: the logistic link saturates to 0 or 1 in
    // double precision for |z| > ~37.
    const double p = numeric::logistic(logit(x, a));
    constexpr double eps = 0x1.0p-53;
    return std::min(std::max(p, eps), 1.0 - eps);
}

nlohmann::json ScoreModel::to_json() const {
    return {{"weights", weights_},
            {"bias", bias_},
            {"d", num_features_},
            {"num_groups", num_groups_},
            {"meta",
             {{"epochs_run", meta_.epochs_run},
              {"initial_loss", meta_.initial_loss},
              {"final_loss", meta_.final_loss},
              {"seed", meta_.seed}}}};
}

ScoreModel ScoreModel::from_json(const nlohmann::json& j) {
    try {
        TrainingMeta meta;
        if (j.contains("meta")) {
            const auto& m = j.at("meta");
            meta.epochs_run = m.value("epochs_run", 0);
            meta.initial_loss = m.value("initial_loss", 0.0);
            meta.final_loss = m.value("final_loss", 0.0);
            meta.seed = m.value("seed", std::uint64_t{0});
        }
        return ScoreModel(j.at("d").get<std::size_t>(), j.at("num_groups").get<int>(),
                          j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(), meta);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

void ScoreModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
}

ScoreModel ScoreModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file is not JSON: ") + e.what());
    }
    return from_json(j);
}

namespace {

// Per-row loss softplus(z) - y*z equals -log p(y | z) for the logistic link.
double accumulate_batch(const TabularDataset& ds, std::span<const std::size_t> rows,
                        std::span<const double> params, std::span<double> grad) {
    const std::size_t d = ds.num_features();
    const std::size_t n_w = params.size() - 1;
    const double bias = params[n_w];
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t r : rows) {
        const auto x = ds.row(r);
        const auto g = d + static_cast<std::size_t>(ds.group(r));
        double z = bias + params[g];
        for (std::size_t j = 0; j < d; ++j) z += params[j] * x[j];
        const double y = ds.label(r);
        loss += numeric::softplus(z) - y * z;
        if (!grad.empty()) {
            const double resid = numeric::logistic(z) - y;
            for (std::size_t j = 0; j < d; ++j) grad[j] += resid * x[j];
            grad[g] += resid;
            grad[n_w] += resid;
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    if (!grad.empty()) {
        for (double& v : grad) v *= inv;
    }
    return loss * inv;
}

void add_penalty(std::span<const double> params, double l2, double& loss, std::span<double> grad) {
    if (l2 == 0.0) return;
    const std::size_t n_w = params.size() - 1;
    double sq = 0.0;
    for (std::size_t j = 0; j < n_w; ++j) {
        sq += params[j] * params[j];
        if (!grad.empty()) grad[j] += l2 * params[j];
    }
    loss += 0.5 * l2 * sq;
}

}  // namespace

double logistic_objective(const TabularDataset& ds, std::span<const double> params, double l2,
                          std::span<double> grad) {
    const std::size_t n_params = ds.num_features() + static_cast<std::size_t>(ds.num_groups()) + 1;
    if (params.size() != n_params) throw ShapeError("parameter vector has the wrong length");
    if (!grad.empty() && grad.size() != n_params) throw ShapeError("gradient buffer has the wrong length");
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    double loss = accumulate_batch(ds, rows, params, grad);
    add_penalty(params, l2, loss, grad);
    return loss;
}

ScoreModel train(const TabularDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    const auto labels = ds.labels();
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0 || static_cast<std::size_t>(positives) == ds.size()) {
        throw PreconditionError("training data must contain both label values");
    }

    const std::size_t n_params = ds.num_features() + static_cast<std::size_t>(ds.num_groups()) + 1;
    std::vector<double> params(n_params, 0.0);
    std::vector<double> grad(n_params);
    const double initial_loss = logistic_objective(ds, params, cfg.l2, {});

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::min(cfg.batch_size, ds.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t len = std::min(batch, order.size() - start);
            const std::span<const std::size_t> rows(order.data() + start, len);
            double loss = accumulate_batch(ds, rows, params, grad);
            add_penalty(params, cfg.l2, loss, grad);
            for (std::size_t j = 0; j < n_params; ++j) params[j] -= cfg.learning_rate * grad[j];
        }
        for (double p : params) {
            if (!std::isfinite(p)) {
                throw DivergenceError("non-finite parameter after epoch " + std::to_string(epoch + 1));
            }
        }
    }

    const double final_loss = logistic_objective(ds, params, cfg.l2, {});
    if (!std::isfinite(final_loss)) {
        throw DivergenceError("non-finite loss after epoch " + std::to_string(cfg.epochs));
    }
    if (final_loss > initial_loss + 1e-6) {
        throw DivergenceError("training increased the loss from " + std::to_string(initial_loss) +
                              " to " + std::to_string(final_loss) + " after epoch " +
                              std::to_string(cfg.epochs) + "; lower the learning rate");
    }

    const double bias = params.back();
    params.pop_back();
    return ScoreModel(ds.num_features(), ds.num_groups(), std::move(params), bias,
                      TrainingMeta{cfg.epochs, initial_loss, final_loss, cfg.seed});
}

}  // namespace fairbayes
