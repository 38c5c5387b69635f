#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumcal/corpus.hpp"

namespace sumcal {

// True success probability as a function of the generated confidence.
struct CalibrationMap {
    enum class Kind { identity, overconfident, constant };
    Kind kind = Kind::identity;
    double param = 1.0;  // gamma for overconfident (g(c) = c^gamma), q for constant

    static CalibrationMap identity() { return {}; }
    static CalibrationMap overconfident(double gamma) { return {Kind::overconfident, gamma}; }
    static CalibrationMap constant(double q) { return {Kind::constant, q}; }

    double operator()(double c) const;
};

// Positions 1..informative_positions carry the confidence; later tokens are
// drawn uniformly from (tail_floor, 1], independent of the outcome.
struct PositionInflation {
    std::size_t informative_positions = 5;
    double tail_floor = 0.95;
};

struct GeneratorSpec {
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::size_t min_tokens = 5;
    std::size_t max_tokens = 30;
    // confidence c = lo + (hi - lo) * u^(1/skew), u uniform
    double confidence_lo = 0.02;
    double confidence_hi = 0.98;
    double confidence_skew = 1.0;
    // per-token log-probability weights are 1 +/- jitter before renormalizing
    double jitter = 0.5;
    CalibrationMap calibration;
    std::optional<PositionInflation> inflation;
    std::size_t repo_count = 20;
    std::string metric = "bertscore";
    double planted_threshold = 0.49;
    std::vector<std::string> decoy_metrics{"sentencebert"};
};

struct GeneratedCorpus {
    Corpus corpus;
    // per record, in corpus order: the planted confidence and g(confidence)
    std::vector<double> confidence;
    std::vector<double> success_probability;
    nlohmann::json truth;
};

// Deterministic for a fixed spec. The geometric mean of the informative
// prefix equals the planted confidence; outcome ~ Bernoulli(g(confidence));
// similarity[metric] >= planted_threshold iff the outcome is 1.
GeneratedCorpus generate(const GeneratorSpec& spec);

struct RatingGeneratorSpec {
    std::size_t n = 200;
    std::uint64_t seed = 0;
    std::string metric = "bertscore";
    double planted_threshold = 0.70;
    double positive_fraction = 0.4;
    std::vector<std::string> decoy_metrics{"sentencebert"};
};

struct GeneratedRatings {
    std::vector<RatingRecord> ratings;
    nlohmann::json truth;
};

// human_similar(ratings) holds iff metric >= planted_threshold, and one
// positive sits exactly on the threshold. Decoy metrics never separate.
GeneratedRatings generate_ratings(const RatingGeneratorSpec& spec);

nlohmann::json to_json(const CalibrationMap& g);
CalibrationMap calibration_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RatingGeneratorSpec& spec);
RatingGeneratorSpec rating_generator_spec_from_json(const nlohmann::json& j);

}  // namespace sumcal
