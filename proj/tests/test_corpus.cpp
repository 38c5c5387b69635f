#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sumcal/corpus.hpp"
#include "sumcal/rng.hpp"

using namespace sumcal;

namespace {

Corpus parse(const std::string& text) {
    std::istringstream in(text);
    return parse_records(in, "inline");
}

const char* kThree =
    R"({"id":"a","repo":"r1","token_probs":[0.9,0.4],"similarity":{"bertscore":0.5},"tags":{"language":"java"}})"
    "\n"
    R"({"id":"b","repo":"r1","token_probs":[1.0],"similarity":{"bertscore":0.3}})"
    "\n"
    R"({"id":"c","repo":"r2","token_probs":[0.2,0.3,0.4],"similarity":{"bertscore":0.9},"summary_text":"Returns x."})"
    "\n";

}  // namespace

TEST_CASE("load_records reads well-formed lines") {
    const Corpus c = parse(kThree);
    REQUIRE(c.records.size() == 3);
    CHECK(c.records[0].id == "a");
    CHECK(c.records[0].tags.at("language") == "java");
    CHECK(c.records[1].token_probs == std::vector<double>{1.0});
    CHECK(c.records[2].summary_text == std::optional<std::string>("Returns x."));
    CHECK(c.records[2].reference_text == std::nullopt);
    CHECK(c.lines == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("zero probability is rejected with line and field") {
    const std::string text = std::string(kThree) + R"({"id":"d","repo":"r3","token_probs":[0.5,0.0]})" + "\n";
    try {
        parse(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 4);
        CHECK(e.field() == "token_probs[1]");
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("duplicate ids are rejected") {
    const std::string text = R"({"id":"a","repo":"r","token_probs":[0.5]})"
                             "\n"
                             R"({"id":"a","repo":"r","token_probs":[0.6]})"
                             "\n";
    try {
        parse(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("duplicate id") != std::string::npos);
    }
}

TEST_CASE("empty token list is rejected") {
    CHECK_THROWS_AS(parse(R"({"id":"a","repo":"r","token_probs":[]})"), ValidationError);
}

TEST_CASE("malformed lines report their line number") {
    const std::string text = std::string(R"({"id":"a","repo":"r","token_probs":[0.5]})") + "\n\n{not json\n";
    try {
        parse(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse(R"({"id":"a","token_probs":[0.5]})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"id":"a","repo":"r","token_probs":"0.5"})"), ParseError);
    CHECK_THROWS_AS(parse(R"([1,2])"), ParseError);
}

TEST_CASE("logprob header converts to linear probabilities") {
    const std::string text = R"({"encoding":"logprob"})"
                             "\n"
                             R"({"id":"a","repo":"r","token_probs":[0.0,-0.6931471805599453]})"
                             "\n";
    const Corpus c = parse(text);
    REQUIRE(c.records.size() == 1);
    CHECK(c.records[0].token_probs[0] == 1.0);
    CHECK(c.records[0].token_probs[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.lines[0] == 2);

    // a positive log-probability is a probability above 1
    CHECK_THROWS_AS(parse(R"({"encoding":"logprob"})"
                          "\n"
                          R"({"id":"a","repo":"r","token_probs":[0.1]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse(R"({"encoding":"bits"})"), ParseError);
}

TEST_CASE("validate reports findings without throwing") {
    std::istringstream in(R"({"id":"a","repo":"r","token_probs":[1.5, 0.2],"similarity":{"sentencebert":0.7}})"
                          "\n"
                          R"({"id":"b","repo":"r","token_probs":[0.2],"similarity":{"bertscore":0.7}})"
                          "\n");
    const Corpus c = read_records(in, "inline");
    const std::string required[] = {"bertscore"};
    const auto findings = validate(c, required);
    REQUIRE(findings.size() == 2);
    CHECK(findings[0].record_id == "a");
    CHECK(findings[0].rule.find("probability out of range") != std::string::npos);
    CHECK(findings[0].line == 1);
    CHECK(findings[1].field == "similarity.bertscore");
    CHECK(findings[1].rule == "missing similarity metric");

    const Corpus ok = parse(kThree);
    CHECK(validate(ok, required).empty());
}

TEST_CASE("load_ratings enforces three ratings in 1..4") {
    auto ratings = [](const std::string& s) {
        std::istringstream in(s);
        return parse_ratings(in);
    };
    const auto r = ratings(R"({"id":"m1","metric_values":{"bertscore":0.8},"ratings":[3,4,3]})");
    REQUIRE(r.size() == 1);
    CHECK(r[0].mean_rating() == doctest::Approx(10.0 / 3.0));

    try {
        ratings(R"({"id":"m1","metric_values":{},"ratings":[3,4]})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("expected 3 ratings") != std::string::npos);
    }
    try {
        ratings(R"({"id":"m1","metric_values":{},"ratings":[3,5,3]})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }
}

TEST_CASE("serialize then load reproduces the corpus (random corpora)") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Corpus c;
        const auto n = 1 + rng.below(15);
        for (std::size_t i = 0; i < n; ++i) {
            SummaryRecord r;
            r.id = "id" + std::to_string(i);
            r.repo = "repo" + std::to_string(rng.below(4));
            const auto len = 1 + rng.below(30);
            for (std::size_t t = 0; t < len; ++t) r.token_probs.push_back(1.0 - rng.uniform());
            r.similarity["bertscore"] = rng.uniform(-0.2, 1.0);
            if (rng.bernoulli(0.5)) r.tags["model"] = "m\"" + std::to_string(i);
            if (rng.bernoulli(0.3)) r.summary_text = "text \n with é unicode";
            c.records.push_back(std::move(r));
        }
        std::ostringstream out;
        write_records(out, c);
        std::istringstream in(out.str());
        const Corpus back = parse_records(in, "roundtrip");
        CHECK(back.records == c.records);
    }
}
