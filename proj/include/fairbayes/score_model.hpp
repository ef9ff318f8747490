#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbayes/data.hpp"

namespace fairbayes {

// Anything that estimates eta_a(x) = P(Y=1 | X=x, A=a).
class ScoreFunction {
public:
    virtual ~ScoreFunction() = default;
    virtual double predict_eta(std::span<const double> x, GroupId a) const = 0;
};

// Scores every row of a dataset.
std::vector<double> score_rows(const ScoreFunction& f, const TabularDataset& ds);

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 30;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    double l2 = 0.0;

    void validate() const;
};

struct TrainingMeta {
    int epochs_run = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::uint64_t seed = 0;
};

// Logistic regression on [x, one_hot(a)] with an intercept.
class ScoreModel final : public ScoreFunction {
public:
    ScoreModel(std::size_t num_features, int num_groups);
    ScoreModel(std::size_t num_features, int num_groups, std::vector<double> weights, double bias,
               TrainingMeta meta = {});

    double predict_eta(std::span<const double> x, GroupId a) const override;
    // Affine score before the logistic link.
    double logit(std::span<const double> x, GroupId a) const;

    std::size_t num_features() const { return num_features_; }
    int num_groups() const { return num_groups_; }
    std::span<const double> weights() const { return weights_; }
    double bias() const { return bias_; }
    const TrainingMeta& meta() const { return meta_; }

    nlohmann::json to_json() const;
    static ScoreModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static ScoreModel load(const std::filesystem::path& path);

private:
    std::size_t num_features_;
    int num_groups_;
    std::vector<double> weights_;
    double bias_ = 0.0;
    TrainingMeta meta_;
};

// Mean cross-entropy over `ds` plus (l2/2)*|w|^2 for the parameter vector
// [weights..., bias]. Writes the gradient into `grad` when it is non-empty.
double logistic_objective(const TabularDataset& ds, std::span<const double> params, double l2,
                          std::span<double> grad);

// Mini-batch gradient descent on the logistic objective, starting from zero.
ScoreModel train(const TabularDataset& ds, const TrainConfig& cfg);

}  // namespace fairbayes
