#include "sumcal/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sumcal/rng.hpp"

namespace sumcal {

using nlohmann::json;

double CalibrationMap::operator()(double c) const {
    switch (kind) {
        case Kind::identity: return c;
        case Kind::overconfident: return std::pow(c, param);
        case Kind::constant: return param;
    }
    return c;
}

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

void check(const GeneratorSpec& s) {
    if (s.n == 0) throw std::invalid_argument("generator: n must be > 0");
    if (s.repo_count == 0) throw std::invalid_argument("generator: repo_count must be >= 1");
    if (s.min_tokens == 0 || s.min_tokens > s.max_tokens) throw std::invalid_argument("generator: bad token length range");
    if (!(s.confidence_lo > 0.0 && s.confidence_lo <= s.confidence_hi && s.confidence_hi <= 1.0)) {
        throw std::invalid_argument("generator: confidence range must lie in (0,1]");
    }
    if (!(s.confidence_skew > 0.0)) throw std::invalid_argument("generator: confidence_skew must be > 0");
    if (!(s.jitter >= 0.0 && s.jitter < 1.0)) throw std::invalid_argument("generator: jitter must be in [0,1)");
    const auto& g = s.calibration;
    if (g.kind == CalibrationMap::Kind::overconfident && !(g.param > 0.0)) {
        throw std::invalid_argument("generator: gamma must be > 0");
    }
    if (g.kind == CalibrationMap::Kind::constant && !(g.param >= 0.0 && g.param <= 1.0)) {
        throw std::invalid_argument("generator: constant q must be in [0,1]");
    }
    if (s.inflation) {
        if (s.inflation->informative_positions == 0) throw std::invalid_argument("generator: k must be >= 1");
        if (!(s.inflation->tail_floor >= 0.0 && s.inflation->tail_floor < 1.0)) {
            throw std::invalid_argument("generator: tail_floor must be in [0,1)");
        }
    }
}

}  // namespace

GeneratedCorpus generate(const GeneratorSpec& spec) {
    check(spec);
    Rng rng(spec.seed);
    GeneratedCorpus out;
    out.corpus.source = "synthetic(seed=" + std::to_string(spec.seed) + ")";

    const double theta = spec.planted_threshold;
    for (std::size_t i = 0; i < spec.n; ++i) {
        SummaryRecord r;
        r.id = padded("s", i, 6);
        r.repo = padded("repo-", static_cast<std::size_t>(rng.below(spec.repo_count)), 4);
        r.tags["source"] = "synthetic";

        const std::size_t length = spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
        const double c = spec.confidence_lo +
                         (spec.confidence_hi - spec.confidence_lo) * std::pow(rng.uniform(), 1.0 / spec.confidence_skew);
        const std::size_t informative =
            spec.inflation ? std::min(spec.inflation->informative_positions, length) : length;

        // weights with mean exactly 1 so that mean(log p) = log c
        std::vector<double> w(informative);
        double wsum = 0.0;
        for (auto& x : w) {
            x = 1.0 + spec.jitter * (2.0 * rng.uniform() - 1.0);
            wsum += x;
        }
        const double log_c = std::log(c);
        for (std::size_t t = 0; t < informative; ++t) {
            const double wt = w[t] * static_cast<double>(informative) / wsum;
            r.token_probs.push_back(std::min(1.0, std::exp(wt * log_c)));
        }
        for (std::size_t t = informative; t < length; ++t) {
            r.token_probs.push_back(1.0 - (1.0 - spec.inflation->tail_floor) * rng.uniform());
        }

        const double g = spec.calibration(c);
        const int outcome = rng.bernoulli(g) ? 1 : 0;
        r.similarity[spec.metric] = outcome ? theta + (1.0 - theta) * rng.uniform() : theta - 0.01 - 0.3 * rng.uniform();
        for (const auto& decoy : spec.decoy_metrics) {
            if (decoy == spec.metric) continue;
            r.similarity[decoy] = std::clamp(0.5 + 0.15 * (outcome - 0.5) + 0.25 * (rng.uniform() - 0.5), 0.0, 1.0);
        }

        out.confidence.push_back(c);
        out.success_probability.push_back(g);
        out.corpus.records.push_back(std::move(r));
    }

    json records = json::array();
    for (std::size_t i = 0; i < spec.n; ++i) {
        records.push_back(json{{"id", out.corpus.records[i].id},
                               {"confidence", out.confidence[i]},
                               {"success_probability", out.success_probability[i]}});
    }
    out.truth = json{{"spec", to_json(spec)},
                     {"planted_rule", json{{"metric", spec.metric}, {"threshold", theta}}},
                     {"calibration_map", to_json(spec.calibration)},
                     {"records", records}};
    return out;
}

GeneratedRatings generate_ratings(const RatingGeneratorSpec& spec) {
    if (spec.n < 2) throw std::invalid_argument("rating generator: n must be >= 2");
    const double theta = spec.planted_threshold;
    if (!(theta > 0.05 && theta < 1.0)) throw std::invalid_argument("rating generator: threshold must be in (0.05,1)");

    static constexpr std::array<std::array<int, 3>, 6> kAgree{{{3, 3, 3}, {3, 3, 4}, {3, 4, 4}, {4, 4, 4}, {2, 3, 4}, {2, 4, 4}}};
    static constexpr std::array<std::array<int, 3>, 6> kDisagree{{{2, 3, 3}, {1, 2, 3}, {2, 2, 2}, {1, 1, 2}, {2, 2, 4}, {1, 3, 4}}};

    Rng rng(spec.seed);
    GeneratedRatings out;
    for (std::size_t i = 0; i < spec.n; ++i) {
        RatingRecord r;
        r.id = padded("r", i, 5);
        const bool positive = i == 0 || (i != 1 && rng.bernoulli(spec.positive_fraction));
        r.ratings = positive ? kAgree[rng.below(kAgree.size())] : kDisagree[rng.below(kDisagree.size())];

        double value;
        if (i == 0) value = theta;
        else if (positive) value = theta + (1.0 - theta) * rng.uniform();
        else value = (theta - 0.02) * (1.0 - rng.uniform());
        r.metric_values[spec.metric] = value;

        for (const auto& decoy : spec.decoy_metrics) {
            if (decoy == spec.metric) continue;
            double d = std::clamp(0.5 + 0.2 * (positive ? 1.0 : -1.0) + 0.6 * (rng.uniform() - 0.5), 0.0, 1.0);
            // a positive below a negative rules out any perfect threshold
            if (i == 0) d = 0.0;
            if (i == 1) d = 1.0;
            r.metric_values[decoy] = d;
        }
        out.ratings.push_back(std::move(r));
    }
    out.truth = json{{"spec", to_json(spec)}, {"planted_rule", json{{"metric", spec.metric}, {"threshold", theta}}}};
    return out;
}

json to_json(const CalibrationMap& g) {
    switch (g.kind) {
        case CalibrationMap::Kind::identity: return json{{"map", "identity"}};
        case CalibrationMap::Kind::overconfident: return json{{"map", "overconfident"}, {"gamma", g.param}};
        case CalibrationMap::Kind::constant: return json{{"map", "constant"}, {"q", g.param}};
    }
    return json{{"map", "identity"}};
}

CalibrationMap calibration_map_from_json(const json& j) {
    const auto name = j.at("map").get<std::string>();
    if (name == "identity") return CalibrationMap::identity();
    if (name == "overconfident") return CalibrationMap::overconfident(j.at("gamma").get<double>());
    if (name == "constant") return CalibrationMap::constant(j.at("q").get<double>());
    throw std::invalid_argument("unknown calibration map '" + name + "'");
}

json to_json(const GeneratorSpec& s) {
    json j{{"n", s.n},
           {"seed", s.seed},
           {"min_tokens", s.min_tokens},
           {"max_tokens", s.max_tokens},
           {"confidence_lo", s.confidence_lo},
           {"confidence_hi", s.confidence_hi},
           {"confidence_skew", s.confidence_skew},
           {"jitter", s.jitter},
           {"calibration", to_json(s.calibration)},
           {"repo_count", s.repo_count},
           {"metric", s.metric},
           {"planted_threshold", s.planted_threshold},
           {"decoy_metrics", s.decoy_metrics}};
    j["position_inflation"] = s.inflation ? json{{"k", s.inflation->informative_positions},
                                                 {"tail_floor", s.inflation->tail_floor}}
                                          : json(nullptr);
    return j;
}

GeneratorSpec generator_spec_from_json(const json& j) {
    GeneratorSpec s;
    s.n = j.value("n", s.n);
    s.seed = j.value("seed", s.seed);
    s.min_tokens = j.value("min_tokens", s.min_tokens);
    s.max_tokens = j.value("max_tokens", s.max_tokens);
    s.confidence_lo = j.value("confidence_lo", s.confidence_lo);
    s.confidence_hi = j.value("confidence_hi", s.confidence_hi);
    s.confidence_skew = j.value("confidence_skew", s.confidence_skew);
    s.jitter = j.value("jitter", s.jitter);
    if (j.contains("calibration")) s.calibration = calibration_map_from_json(j["calibration"]);
    if (j.contains("position_inflation") && !j["position_inflation"].is_null()) {
        const auto& p = j["position_inflation"];
        s.inflation = PositionInflation{p.at("k").get<std::size_t>(), p.value("tail_floor", 0.95)};
    }
    s.repo_count = j.value("repo_count", s.repo_count);
    s.metric = j.value("metric", s.metric);
    s.planted_threshold = j.value("planted_threshold", s.planted_threshold);
    s.decoy_metrics = j.value("decoy_metrics", s.decoy_metrics);
    return s;
}

json to_json(const RatingGeneratorSpec& s) {
    return json{{"n", s.n},
                {"seed", s.seed},
                {"metric", s.metric},
                {"planted_threshold", s.planted_threshold},
                {"positive_fraction", s.positive_fraction},
                {"decoy_metrics", s.decoy_metrics}};
}

RatingGeneratorSpec rating_generator_spec_from_json(const json& j) {
    RatingGeneratorSpec s;
    s.n = j.value("n", s.n);
    s.seed = j.value("seed", s.seed);
    s.metric = j.value("metric", s.metric);
    s.planted_threshold = j.value("planted_threshold", s.planted_threshold);
    s.positive_fraction = j.value("positive_fraction", s.positive_fraction);
    s.decoy_metrics = j.value("decoy_metrics", s.decoy_metrics);
    return s;
}

}  // namespace sumcal
