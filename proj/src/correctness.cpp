#include "sumcal/correctness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sumcal {

using nlohmann::json;

MissingMetricError::MissingMetricError(const std::string& record_id, const std::string& metric)
    : std::runtime_error("record '" + record_id + "' has no similarity metric '" + metric + "'"), metric_(metric) {}

Objective parse_objective(std::string_view name) {
    if (name == "high-precision" || name == "high_precision") return Objective::high_precision;
    if (name == "high-recall" || name == "high_recall") return Objective::high_recall;
    if (name == "max-f1" || name == "max_f1") return Objective::max_f1;
    throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

std::string to_string(Objective o) {
    switch (o) {
        case Objective::high_precision: return "high-precision";
        case Objective::high_recall: return "high-recall";
        case Objective::max_f1: return "max-f1";
    }
    return "max-f1";
}

bool human_similar(const std::array<int, 3>& ratings) {
    // sum >= 9 is mean >= 3.0 without division
    return ratings[0] + ratings[1] + ratings[2] >= 9;
}

int label(const SummaryRecord& record, const CorrectnessRule& rule) {
    auto it = record.similarity.find(rule.metric);
    if (it == record.similarity.end()) throw MissingMetricError(record.id, rule.metric);
    return it->second >= rule.threshold ? 1 : 0;
}

RuleQuality quality_from_confusion(const Confusion& c) {
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    RuleQuality q;
    q.support = c;
    q.precision = ratio(c.tp, c.tp + c.fp);
    q.recall = ratio(c.tp, c.tp + c.fn);
    q.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    return q;
}

namespace {

double metric_value(const RatingRecord& r, const std::string& metric) {
    auto it = r.metric_values.find(metric);
    if (it == r.metric_values.end()) throw MissingMetricError(r.id, metric);
    return it->second;
}

Confusion confusion(std::span<const RatingRecord> ratings, std::span<const double> values,
                    std::span<const char> truth, double threshold) {
    Confusion c;
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        const bool predicted = values[i] >= threshold;
        if (predicted && truth[i]) ++c.tp;
        else if (predicted) ++c.fp;
        else if (truth[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

}  // namespace

RuleQuality evaluate_rule(std::span<const RatingRecord> ratings, const CorrectnessRule& rule) {
    std::vector<double> values;
    std::vector<char> truth;
    for (const auto& r : ratings) {
        values.push_back(metric_value(r, rule.metric));
        truth.push_back(human_similar(r.ratings));
    }
    return quality_from_confusion(confusion(ratings, values, truth, rule.threshold));
}

std::vector<double> threshold_grid(double min_value, double max_value) {
    // Work in integer hundredths; k / 100.0 is the correctly rounded double of
    // the decimal threshold, so 0.49 here equals 0.49 parsed from input.
    const auto lo = static_cast<long long>(std::floor(min_value * 100.0 + 1e-9));
    const auto hi = static_cast<long long>(std::floor(max_value * 100.0 + 1e-9));
    std::vector<double> grid;
    for (long long k = lo; k <= hi; ++k) grid.push_back(static_cast<double>(k) / 100.0);
    return grid;
}

std::optional<RuleSelection> grid_search(std::span<const RatingRecord> ratings, std::span<const std::string> metrics,
                                         Objective objective) {
    if (ratings.empty()) throw std::invalid_argument("grid_search: empty rating corpus");
    if (metrics.empty()) throw std::invalid_argument("grid_search: no metrics given");

    std::vector<std::string> names(metrics.begin(), metrics.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());

    std::vector<char> truth;
    for (const auto& r : ratings) truth.push_back(human_similar(r.ratings));

    std::optional<RuleSelection> best;
    for (const auto& metric : names) {
        std::vector<double> values;
        for (const auto& r : ratings) values.push_back(metric_value(r, metric));
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());

        for (double theta : threshold_grid(*mn, *mx)) {
            const RuleQuality q = quality_from_confusion(confusion(ratings, values, truth, theta));
            double value = 0.0;
            switch (objective) {
                case Objective::high_precision:
                    if (!(q.precision > 0.9)) continue;
                    value = q.recall;
                    break;
                case Objective::high_recall:
                    if (!(q.recall > 0.9)) continue;
                    value = q.precision;
                    break;
                case Objective::max_f1:
                    value = q.f1;
                    break;
            }
            // metrics are visited in ascending name order, so an equal value at
            // an equal threshold never displaces the earlier metric
            if (!best || value > best->objective_value ||
                (value == best->objective_value && theta > best->rule.threshold)) {
                best = RuleSelection{{metric, theta}, q, objective, value};
            }
        }
    }
    return best;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc: length mismatch");
    std::size_t positives = 0;
    for (int l : labels) positives += l != 0;
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) throw std::invalid_argument("roc: need both positive and negative labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::nullopt, 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives)});
    }
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& a = curve.points[k - 1];
        const auto& b = curve.points[k];
        curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return curve;
}

RocCurve roc(std::span<const RatingRecord> ratings, const std::string& metric) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : ratings) {
        scores.push_back(metric_value(r, metric));
        labels.push_back(human_similar(r.ratings) ? 1 : 0);
    }
    return roc_curve(scores, labels);
}

double auc(std::span<const LabeledSample> samples) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : samples) {
        scores.push_back(s.confidence);
        labels.push_back(s.outcome);
    }
    return roc_curve(scores, labels).auc;
}

std::vector<LabeledSample> labeled_samples(const Corpus& corpus, const ConfidenceSpec& spec,
                                           const CorrectnessRule& rule) {
    std::vector<LabeledSample> out;
    out.reserve(corpus.records.size());
    for (const auto& r : corpus.records) {
        out.push_back({r.id, r.repo, aggregate(r.token_probs, spec), label(r, rule)});
    }
    return out;
}

json to_json(const CorrectnessRule& rule) {
    return json{{"metric", rule.metric}, {"threshold", rule.threshold}};
}

CorrectnessRule correctness_rule_from_json(const json& j) {
    if (j.contains("feasible") && j["feasible"] == false) {
        throw std::invalid_argument("rule document is an infeasible search result");
    }
    const json& r = j.contains("rule") ? j["rule"] : j;
    return {r.at("metric").get<std::string>(), r.at("threshold").get<double>()};
}

json to_json(const RuleQuality& q) {
    return json{{"precision", q.precision},
                {"recall", q.recall},
                {"f1", q.f1},
                {"tp", q.support.tp},
                {"fp", q.support.fp},
                {"tn", q.support.tn},
                {"fn", q.support.fn}};
}

json to_json(const RuleSelection& s) {
    return json{{"feasible", true},
                {"objective", to_string(s.objective)},
                {"rule", to_json(s.rule)},
                {"quality", to_json(s.quality)}};
}

json to_json(const RocCurve& c) {
    json points = json::array();
    for (const auto& p : c.points) {
        points.push_back(json{{"threshold", p.threshold ? json(*p.threshold) : json(nullptr)},
                              {"fpr", p.fpr},
                              {"tpr", p.tpr}});
    }
    return json{{"auc", c.auc}, {"points", points}};
}

RocCurve roc_curve_from_json(const json& j) {
    RocCurve c;
    c.auc = j.at("auc").get<double>();
    for (const auto& p : j.at("points")) {
        RocPoint pt;
        if (!p.at("threshold").is_null()) pt.threshold = p["threshold"].get<double>();
        pt.fpr = p.at("fpr").get<double>();
        pt.tpr = p.at("tpr").get<double>();
        c.points.push_back(pt);
    }
    return c;
}

}  // namespace sumcal
