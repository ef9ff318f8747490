#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairbayes/data.hpp"

namespace fairbayes::oracle {

enum class MeanLayout {
    // Two groups in R^2, mu_{a,y} = (2a-1, 2y-1).
    Binary,
    // |A| groups in R^|A|, mu_{a,y} = (2y-1) e_a.
    MultiClass,
};

// Synthetic population: A ~ Categorical(group_probs), Y | A=a ~
// Bernoulli(label_probs[a]), X | A,Y ~ N(mu_{A,Y}, sigma^2 I).
//
// In both layouts mu_{a,1} - mu_{a,0} = 2 e_k for a single coordinate k and
// |mu_{a,1}| = |mu_{a,0}|, so the log-odds of eta_a is
// logit(p_{Y|a}) + 2 x_k / sigma^2 and every group reduces to the same
// one-dimensional problem: x_k | Y=y ~ N(2y-1, sigma^2).
struct GaussianModelSpec {
    std::vector<double> group_probs;
    std::vector<double> label_probs;
    double sigma = 2.0;
    MeanLayout layout = MeanLayout::Binary;

    // P(A=1) = p_a1, P(Y=1|A=0) = p_y0, P(Y=1|A=1) = p_y1.
    static GaussianModelSpec binary(double p_a1, double p_y0, double p_y1, double sigma = 2.0);
    static GaussianModelSpec multi_class(std::vector<double> group_probs,
                                         std::vector<double> label_probs, double sigma = 2.0);

    int num_groups() const { return static_cast<int>(group_probs.size()); }
    std::size_t dim() const;
    std::vector<double> mean(GroupId a, Label y) const;
    // Coordinate of x on which eta_a depends.
    std::size_t informative_coordinate(GroupId a) const;
    void validate() const;
};

TabularDataset sample(const GaussianModelSpec& spec, std::size_t n, std::uint64_t seed);

double eta(const GaussianModelSpec& spec, std::span<const double> x, GroupId a);

// P(eta_a(X) >= t | A=a, Y=1) and P(eta_a(X) >= t | A=a, Y=0). Defined on the
// closed interval [0,1] (t=0 selects everything, t=1 nothing).
struct SelectionRates {
    double tpr = 0.0;
    double fpr = 0.0;
};
SelectionRates selection_rates(const GaussianModelSpec& spec, GroupId a, double t);

// P(Y=1 | eta_a(X) >= t, A=a), for t in (0,1).
double ppv_closed_form(const GaussianModelSpec& spec, GroupId a, double t);

// Group PPV of the unconstrained rule at t = c, for the reference group
// (group 0 by default). The sufficient condition in its one-sided form is
// "other group's base rate <= this value".
double condition_rhs(const GaussianModelSpec& spec, double c, GroupId reference = 0);

struct PopulationCondition {
    bool holds = false;
    // min_a P(Y=1 | eta_a >= c, A=a)
    double min_ppv = 0.0;
    // max_a P(Y=1 | A=a)
    double max_base_rate = 0.0;
};
PopulationCondition check_condition(const GaussianModelSpec& spec, double c);

struct ThresholdSolve {
    double threshold = 0.0;
    double achieved = 0.0;
};

// Threshold t_a with ppv_closed_form(spec, a, t_a) = target_ppv, by bisection
// on the strictly increasing closed-form PPV. Throws UnreachableTargetError
// when the target lies outside [p_{Y|a}, 1).
ThresholdSolve solve_threshold_for_ppv(const GaussianModelSpec& spec, GroupId a, double target_ppv);

// Group-0 threshold whose PPV equals group 1's PPV at threshold t.
double match_t0(const GaussianModelSpec& spec, double t);

// Population metrics of the rule 1{eta_a(x) >= thresholds[a]}.
double risk(const GaussianModelSpec& spec, std::span<const double> thresholds, double c);
double accuracy(const GaussianModelSpec& spec, std::span<const double> thresholds);
double dpp(const GaussianModelSpec& spec, std::span<const double> thresholds);

struct OracleFairSolution {
    GroupId anchor_group = 0;
    double t_star = 0.0;
    std::vector<double> matched_thresholds;
    double fair_risk = 0.0;
    double fair_accuracy = 0.0;
    double fair_dpp = 0.0;
    double uncon_risk = 0.0;
    double uncon_accuracy = 0.0;
    double uncon_dpp = 0.0;
    // One-sided condition value (group-0 PPV at c).
    double condition_value = 0.0;
    PopulationCondition condition;
};

// Fair Bayes-optimal group-wise thresholds under predictive parity. The anchor
// is the group with the largest base rate, so every anchor threshold in (0,1)
// has a PPV the other groups can match. A 1e-4 grid over the anchor threshold
// is refined by golden-section search to width 1e-8.
OracleFairSolution solve_fair_optimal(const GaussianModelSpec& spec, double c);

nlohmann::json to_json(const OracleFairSolution& s);
OracleFairSolution oracle_solution_from_json(const nlohmann::json& j);

}  // namespace fairbayes::oracle
