#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumcal/metrics.hpp"

namespace sumcal {

struct ComparisonResult {
    std::size_t n_pairs = 0;
    double mean_diff = 0.0;
    double t_stat = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
    double p_adjusted = 1.0;  // equals p_value until bh_adjust is applied
};

// Regularized incomplete beta I_x(a, b), continued fraction by modified Lentz.
double incomplete_beta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Two-sided paired t-test on d = a - b. Zero-variance differences give
// p = 1 when the mean is zero and p = 0 otherwise.
ComparisonResult paired_ttest(std::span<const double> a, std::span<const double> b);

// Squared errors of two treatments joined on sample id. Every id must appear
// in both sets, and both must agree on the outcome.
ComparisonResult paired_ttest(std::span<const LabeledSample> a, std::span<const LabeledSample> b);

// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_adjust(std::span<const double> p_values);

// Fills p_adjusted across a family of comparisons.
void bh_adjust(std::span<ComparisonResult> family);

nlohmann::json to_json(const ComparisonResult& r);

}  // namespace sumcal
