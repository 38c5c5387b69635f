#include <doctest.h>

#include <cmath>
#include <vector>

#include "sumcal/correctness.hpp"
#include "sumcal/rng.hpp"
#include "sumcal/synth.hpp"

using namespace sumcal;

namespace {

RatingRecord rating(const std::string& id, std::map<std::string, double> metrics, std::array<int, 3> r) {
    RatingRecord out;
    out.id = id;
    out.metric_values = std::move(metrics);
    out.ratings = r;
    return out;
}

std::array<int, 3> yes() { return {3, 3, 4}; }
std::array<int, 3> no() { return {1, 2, 3}; }

// Reference for the grid search: every candidate, compared by brute force.
std::optional<std::pair<CorrectnessRule, double>> brute_force(std::span<const RatingRecord> ratings,
                                                               const std::vector<std::string>& metrics,
                                                               Objective objective) {
    std::optional<std::pair<CorrectnessRule, double>> best;
    for (const auto& m : metrics) {
        double lo = 1e300, hi = -1e300;
        for (const auto& r : ratings) {
            lo = std::min(lo, r.metric_values.at(m));
            hi = std::max(hi, r.metric_values.at(m));
        }
        for (double theta : threshold_grid(lo, hi)) {
            const CorrectnessRule rule{m, theta};
            const auto q = evaluate_rule(ratings, rule);
            double value = 0.0;
            bool feasible = true;
            switch (objective) {
            case Objective::high_precision: feasible = q.precision > 0.9; value = q.recall; break;
            case Objective::high_recall: feasible = q.recall > 0.9; value = q.precision; break;
            case Objective::max_f1: value = q.f1; break;
            }
            if (!feasible) continue;
            if (!best || value > best->second) best = std::make_pair(rule, value);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("human_similar") {
    CHECK(human_similar({3, 3, 3}));
    CHECK(human_similar({4, 4, 4}));
    CHECK_FALSE(human_similar({2, 3, 3}));
    CHECK(human_similar({2, 3, 4}));
}

TEST_CASE("label") {
    SummaryRecord r;
    r.id = "x";
    r.similarity["bertscore"] = 0.49;
    const CorrectnessRule rule{"bertscore", 0.49};
    CHECK(label(r, rule) == 1);
    r.similarity["bertscore"] = 0.48;
    CHECK(label(r, rule) == 0);
    try {
        label(r, {"sentencebert", 0.80});
        FAIL("expected MissingMetricError");
    } catch (const MissingMetricError& e) {
        CHECK(e.metric() == "sentencebert");
    }
}

TEST_CASE("evaluate_rule") {
    SUBCASE("perfect separation") {
        std::vector<RatingRecord> rs;
        for (int i = 0; i < 10; ++i) {
            const double v = i / 10.0 + 0.05;
            rs.push_back(rating(std::to_string(i), {{"m", v}}, v >= 0.7 ? yes() : no()));
        }
        const auto q = evaluate_rule(rs, {"m", 0.7});
        CHECK(q.precision == 1.0);
        CHECK(q.recall == 1.0);
        CHECK(q.f1 == 1.0);
        const auto empty = evaluate_rule(rs, {"m", 0.951});
        CHECK(empty.precision == 0.0);
        CHECK(empty.recall == 0.0);
        CHECK(empty.f1 == 0.0);
    }
    SUBCASE("four-record hand case") {
        const std::vector<RatingRecord> rs{
            rating("a", {{"m", 0.2}}, no()),
            rating("b", {{"m", 0.5}}, no()),
            rating("c", {{"m", 0.8}}, yes()),
            rating("d", {{"m", 0.9}}, yes()),
        };
        const auto q = evaluate_rule(rs, {"m", 0.5});
        CHECK(q.support.tp == 2);
        CHECK(q.support.fp == 1);
        CHECK(q.support.tn == 1);
        CHECK(q.support.fn == 0);
        CHECK(q.precision == doctest::Approx(2.0 / 3.0));
        CHECK(q.recall == 1.0);
        CHECK(q.f1 == doctest::Approx(0.8));
    }
}

TEST_CASE("threshold grid") {
    const auto g = threshold_grid(0.483, 0.52);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.48);
    CHECK(g.back() == 0.52);
    CHECK(threshold_grid(0.7, 0.7) == std::vector<double>{0.7});
}

TEST_CASE("grid_search recovers a planted threshold") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RatingGeneratorSpec spec;
        spec.seed = seed;
        const auto gen = generate_ratings(spec);
        const std::vector<std::string> metrics{"bertscore", "sentencebert"};
        const auto sel = grid_search(gen.ratings, metrics, Objective::max_f1);
        REQUIRE(sel.has_value());
        CHECK(sel->rule.metric == "bertscore");
        CHECK(sel->rule.threshold == 0.70);
        CHECK(sel->quality.f1 == 1.0);
    }
}

TEST_CASE("grid_search returns a global optimum of the objective") {
    Rng rng(17);
    const std::vector<std::string> metrics{"a", "b"};
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<RatingRecord> rs;
        const auto n = 5 + rng.below(40);
        for (std::size_t i = 0; i < n; ++i) {
            const int r0 = 1 + static_cast<int>(rng.below(4));
            const int r1 = 1 + static_cast<int>(rng.below(4));
            const int r2 = 1 + static_cast<int>(rng.below(4));
            const double signal = (r0 + r1 + r2) / 12.0;
            rs.push_back(rating(std::to_string(i),
                                {{"a", std::round((signal + rng.uniform(-0.3, 0.3)) * 1000) / 1000},
                                 {"b", std::round(rng.uniform() * 1000) / 1000}},
                                {r0, r1, r2}));
        }
        for (auto obj : {Objective::high_precision, Objective::high_recall, Objective::max_f1}) {
            const auto sel = grid_search(rs, metrics, obj);
            const auto ref = brute_force(rs, {"a", "b"}, obj);
            REQUIRE(sel.has_value() == ref.has_value());
            if (!sel) continue;
            CHECK(sel->objective_value == ref->second);
            const auto q = evaluate_rule(rs, sel->rule);
            if (obj == Objective::high_precision) CHECK(q.precision > 0.9);
            if (obj == Objective::high_recall) CHECK(q.recall > 0.9);
        }
    }
}

TEST_CASE("grid_search signals infeasibility") {
    // interleaved labels with a negative on top: precision never exceeds 0.5
    std::vector<RatingRecord> rs;
    for (int i = 0; i < 20; ++i)
        rs.push_back(rating(std::to_string(i), {{"m", i / 20.0}}, i % 2 ? no() : yes()));
    const std::vector<std::string> metrics{"m"};
    CHECK_FALSE(grid_search(rs, metrics, Objective::high_precision).has_value());
    CHECK(grid_search(rs, metrics, Objective::max_f1).has_value());
}

TEST_CASE("grid_search tie-breaking prefers the higher threshold") {
    // any threshold in (0.2, 0.8] separates perfectly
    std::vector<RatingRecord> rs{
        rating("a", {{"m", 0.2}}, no()),
        rating("b", {{"m", 0.8}}, yes()),
    };
    const std::vector<std::string> metrics{"m"};
    const auto sel = grid_search(rs, metrics, Objective::max_f1);
    REQUIRE(sel);
    CHECK(sel->rule.threshold == 0.8);
}

TEST_CASE("roc curve") {
    const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
    const std::vector<int> lab{0, 0, 1, 1};
    CHECK(roc_curve(sep, lab).auc == 1.0);

    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    const auto c = roc_curve(flat, lab);
    CHECK(c.auc == 0.5);
    REQUIRE(c.points.size() == 2);
    CHECK_FALSE(c.points[0].threshold.has_value());

    const std::vector<int> single{1, 1, 1, 1};
    CHECK_THROWS(roc_curve(sep, single));

    // reference value from sklearn.metrics.roc_auc_score
    const std::vector<double> s5{0.1, 0.4, 0.35, 0.8, 0.35};
    const std::vector<int> l5{0, 1, 0, 1, 1};
    CHECK(roc_curve(s5, l5).auc == doctest::Approx(0.9166666666666666).epsilon(1e-14));
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 4 + rng.below(100);
        std::vector<double> s(n), t(n);
        std::vector<int> l(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = std::round(rng.uniform() * 50) / 50;
            l[i] = rng.bernoulli(s[i]) ? 1 : 0;
            t[i] = 1.0 / (1.0 + std::exp(-3.0 * s[i] + 1.0));
        }
        l[0] = 0;
        l[1] = 1;
        const double a = roc_curve(s, l).auc;
        CHECK(roc_curve(t, l).auc == doctest::Approx(a).epsilon(1e-12));
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
}

TEST_CASE("objective names") {
    CHECK(parse_objective("high-precision") == Objective::high_precision);
    CHECK(parse_objective("high_recall") == Objective::high_recall);
    CHECK(parse_objective("max-f1") == Objective::max_f1);
    CHECK_THROWS(parse_objective("accuracy"));
    CHECK(to_string(Objective::high_recall) == "high-recall");
}

TEST_CASE("rule JSON") {
    const CorrectnessRule r{"bertscore", 0.49};
    CHECK(correctness_rule_from_json(to_json(r)) == r);
    CHECK(correctness_rule_from_json(nlohmann::json{{"rule", to_json(r)}}) == r);
    CHECK_THROWS(correctness_rule_from_json(nlohmann::json{{"feasible", false}}));
}
