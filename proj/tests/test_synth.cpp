#include <doctest.h>

#include <cmath>
#include <set>

#include "sumcal/confidence.hpp"
#include "sumcal/correctness.hpp"
#include "sumcal/metrics.hpp"
#include "sumcal/synth.hpp"

using namespace sumcal;

TEST_CASE("generate is deterministic per seed") {
    GeneratorSpec spec;
    spec.n = 200;
    spec.seed = 3;
    const auto a = generate(spec), b = generate(spec);
    CHECK(a.corpus.records == b.corpus.records);
    spec.seed = 4;
    CHECK_FALSE(generate(spec).corpus.records == a.corpus.records);
}

TEST_CASE("generated corpora honour their spec") {
    GeneratorSpec spec;
    spec.n = 500;
    spec.seed = 1;
    spec.repo_count = 7;
    const auto g = generate(spec);
    REQUIRE(g.corpus.records.size() == 500);
    std::set<std::string> repos, ids;
    for (std::size_t i = 0; i < 500; ++i) {
        const auto& r = g.corpus.records[i];
        repos.insert(r.repo);
        ids.insert(r.id);
        CHECK(r.token_probs.size() >= spec.min_tokens);
        CHECK(r.token_probs.size() <= spec.max_tokens);
        for (double p : r.token_probs) {
            CHECK(p > 0.0);
            CHECK(p <= 1.0);
        }
        CHECK(aggregate(r.token_probs, {}) == doctest::Approx(g.confidence[i]).epsilon(1e-12));
        const double sim = r.similarity.at("bertscore");
        CHECK(r.similarity.count("sentencebert") == 1);
        // the planted metric encodes the outcome
        CHECK((sim >= spec.planted_threshold) == (label(r, {"bertscore", spec.planted_threshold}) == 1));
    }
    CHECK(repos.size() == 7);
    CHECK(ids.size() == 500);
    CHECK(g.truth.contains("spec"));
}

TEST_CASE("identity map yields calibrated confidences") {
    GeneratorSpec spec;
    spec.n = 10000;
    spec.seed = 2;
    const auto g = generate(spec);
    const auto s = labeled_samples(g.corpus, {}, {"bertscore", spec.planted_threshold});
    CHECK(ece(s) < 0.02);
}

TEST_CASE("constant map fixes the base rate") {
    GeneratorSpec spec;
    spec.n = 10000;
    spec.seed = 8;
    spec.calibration = CalibrationMap::constant(0.19);
    const auto g = generate(spec);
    const auto s = labeled_samples(g.corpus, {}, {"bertscore", spec.planted_threshold});
    const double p = success_rate(s);
    CHECK(std::abs(p - 0.19) < 0.015);
    CHECK(std::abs(reference_brier(p) - 0.1539) < 0.01);
}

TEST_CASE("position inflation flattens the tail") {
    GeneratorSpec spec;
    spec.n = 2000;
    spec.seed = 4;
    spec.inflation = PositionInflation{};
    const auto g = generate(spec);
    const auto prof = token_position_profile(g.corpus, 30);
    for (const auto& b : prof)
        if (b.first_position > 20) CHECK(b.median > 0.9);
}

TEST_CASE("calibration maps") {
    CHECK(CalibrationMap::identity()(0.3) == 0.3);
    CHECK(CalibrationMap::overconfident(3)(0.5) == 0.125);
    CHECK(CalibrationMap::constant(0.2)(0.9) == 0.2);
    for (const auto& g : {CalibrationMap::identity(), CalibrationMap::overconfident(2.5), CalibrationMap::constant(0.4)})
        CHECK(calibration_map_from_json(to_json(g))(0.37) == g(0.37));
}

TEST_CASE("spec JSON round-trip and validation") {
    GeneratorSpec spec;
    spec.n = 77;
    spec.seed = 9;
    spec.calibration = CalibrationMap::overconfident(3);
    spec.inflation = PositionInflation{4, 0.9};
    const auto back = generator_spec_from_json(to_json(spec));
    CHECK(back.n == 77);
    CHECK(back.inflation->informative_positions == 4);
    CHECK(generate(back).corpus.records == generate(spec).corpus.records);

    spec.n = 0;
    CHECK_THROWS(generate(spec));
    spec.n = 10;
    spec.repo_count = 0;
    CHECK_THROWS(generate(spec));
}

TEST_CASE("generate_ratings plants an exact separation") {
    RatingGeneratorSpec spec;
    spec.seed = 5;
    const auto g = generate_ratings(spec);
    REQUIRE(g.ratings.size() == spec.n);
    bool on_boundary = false;
    for (const auto& r : g.ratings) {
        const double v = r.metric_values.at("bertscore");
        CHECK(human_similar(r.ratings) == (v >= spec.planted_threshold));
        if (v == spec.planted_threshold) on_boundary = true;
        for (int x : r.ratings) {
            CHECK(x >= 1);
            CHECK(x <= 4);
        }
    }
    CHECK(on_boundary);
}
