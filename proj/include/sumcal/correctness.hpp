#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sumcal/confidence.hpp"
#include "sumcal/corpus.hpp"
#include "sumcal/metrics.hpp"

namespace sumcal {

// A summary is correct iff similarity[metric] >= threshold.
struct CorrectnessRule {
    std::string metric;
    double threshold = 0.0;

    bool operator==(const CorrectnessRule&) const = default;
};

class MissingMetricError : public std::runtime_error {
public:
    MissingMetricError(const std::string& record_id, const std::string& metric);
    const std::string& metric() const noexcept { return metric_; }

private:
    std::string metric_;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct RuleQuality {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion support;
};

enum class Objective { high_precision, high_recall, max_f1 };

Objective parse_objective(std::string_view name);
std::string to_string(Objective o);

// Mean of the three ratings reaches "Agree" (3.0), boundary included.
bool human_similar(const std::array<int, 3>& ratings);

int label(const SummaryRecord& record, const CorrectnessRule& rule);

// 0/0 is taken as 0 for precision, recall and F1.
RuleQuality quality_from_confusion(const Confusion& c);

RuleQuality evaluate_rule(std::span<const RatingRecord> ratings, const CorrectnessRule& rule);

// Candidate thresholds for one metric: 0.01 steps from floor(min/0.01)*0.01 up
// to the observed maximum.
std::vector<double> threshold_grid(double min_value, double max_value);

struct RuleSelection {
    CorrectnessRule rule;
    RuleQuality quality;
    Objective objective = Objective::max_f1;
    double objective_value = 0.0;
};

// Exhaustive search over (metric, threshold). Objectives:
//   high_precision: max recall subject to precision > 0.9
//   high_recall:    max precision subject to recall > 0.9
//   max_f1:         max F1
// Ties go to the higher threshold, then the lexicographically smaller metric.
// nullopt when no candidate satisfies the constraint.
std::optional<RuleSelection> grid_search(std::span<const RatingRecord> ratings, std::span<const std::string> metrics,
                                         Objective objective);

struct RocPoint {
    std::optional<double> threshold;  // nullopt for the (0,0) origin
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// Thresholds at every distinct score (ties grouped), predicting positive when
// score >= threshold. AUC by the trapezoidal rule. Throws if labels are
// single-class.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);
RocCurve roc(std::span<const RatingRecord> ratings, const std::string& metric);
double auc(std::span<const LabeledSample> samples);

// Confidence from the token probabilities, outcome from the rule.
std::vector<LabeledSample> labeled_samples(const Corpus& corpus, const ConfidenceSpec& spec,
                                           const CorrectnessRule& rule);

nlohmann::json to_json(const CorrectnessRule& rule);
CorrectnessRule correctness_rule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RuleQuality& q);
nlohmann::json to_json(const RuleSelection& s);
nlohmann::json to_json(const RocCurve& c);
RocCurve roc_curve_from_json(const nlohmann::json& j);

}  // namespace sumcal
