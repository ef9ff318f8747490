#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

namespace fairbayes::numeric {

// Standard normal CDF and survival function, both via erfc so that tails keep
// full relative precision.
double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

inline double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(1 + e^z) without overflow.
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// P(T <= t) for Student's t with `df` degrees of freedom, through the
// regularized incomplete beta function.
double student_t_cdf(double t, double df);

struct GoldenResult {
    double x;
    double fx;
};

// Golden-section minimization of a unimodal function on [lo, hi] until the
// bracket is narrower than `width`.
GoldenResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                     double hi, double width);

}  // namespace fairbayes::numeric
