#include "sumcal/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace sumcal {

using nlohmann::json;

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

ValidationError::ValidationError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) + field + ": " + what),
      line_(line),
      field_(std::move(field)) {}

namespace {

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

json parse_object(const std::string& text, std::size_t line) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError(line, "expected a JSON object");
    }
    return j;
}

std::string required_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::map<std::string, double> number_map(const json& j, const char* key, std::size_t line, bool required) {
    std::map<std::string, double> out;
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) throw ParseError(line, std::string("missing field '") + key + "'");
        return out;
    }
    if (!it->is_object()) throw ParseError(line, std::string("field '") + key + "' must be an object");
    for (const auto& [name, value] : it->items()) {
        if (!value.is_number()) {
            throw ParseError(line, std::string(key) + "." + name + " must be a number");
        }
        out.emplace(name, value.get<double>());
    }
    return out;
}

SummaryRecord record_from_json(const json& j, std::size_t line, ProbEncoding encoding) {
    SummaryRecord r;
    r.id = required_string(j, "id", line);
    r.repo = required_string(j, "repo", line);

    auto probs = j.find("token_probs");
    if (probs == j.end()) throw ParseError(line, "missing field 'token_probs'");
    if (!probs->is_array()) throw ParseError(line, "field 'token_probs' must be an array");
    r.token_probs.reserve(probs->size());
    for (const auto& v : *probs) {
        if (!v.is_number()) throw ParseError(line, "token_probs entries must be numbers");
        const double x = v.get<double>();
        r.token_probs.push_back(encoding == ProbEncoding::logprob ? std::exp(x) : x);
    }

    if (auto tags = j.find("tags"); tags != j.end()) {
        if (!tags->is_object()) throw ParseError(line, "field 'tags' must be an object");
        for (const auto& [name, value] : tags->items()) {
            if (!value.is_string()) throw ParseError(line, "tags." + name + " must be a string");
            r.tags.emplace(name, value.get<std::string>());
        }
    }
    r.similarity = number_map(j, "similarity", line, false);
    r.summary_text = optional_string(j, "summary_text", line);
    r.reference_text = optional_string(j, "reference_text", line);
    return r;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

}  // namespace

Corpus read_records(std::istream& in, std::string source) {
    Corpus corpus;
    corpus.source = std::move(source);
    ProbEncoding encoding = ProbEncoding::linear;

    std::string text;
    std::size_t line = 0;
    bool first = true;
    while (std::getline(in, text)) {
        ++line;
        if (is_blank(text)) continue;
        json j = parse_object(text, line);
        if (first && j.contains("encoding") && !j.contains("id")) {
            first = false;
            const auto& enc = j["encoding"];
            if (enc == "logprob") {
                encoding = ProbEncoding::logprob;
            } else if (enc == "prob") {
                encoding = ProbEncoding::linear;
            } else {
                throw ParseError(line, "unknown encoding " + enc.dump() + " (expected \"prob\" or \"logprob\")");
            }
            continue;
        }
        first = false;
        corpus.records.push_back(record_from_json(j, line, encoding));
        corpus.lines.push_back(line);
    }
    return corpus;
}

std::vector<Finding> validate(const Corpus& corpus, std::span<const std::string> required_metrics) {
    std::vector<Finding> findings;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& r = corpus.records[i];
        const std::size_t line = corpus.line_of(i);
        auto add = [&](std::string field, std::string rule) {
            findings.push_back({r.id, line, std::move(field), std::move(rule)});
        };

        if (r.id.empty()) add("id", "empty id");
        if (!seen.insert(r.id).second) add("id", "duplicate id");
        if (r.repo.empty()) add("repo", "empty repo");
        if (r.token_probs.empty()) add("token_probs", "empty token list");
        for (std::size_t t = 0; t < r.token_probs.size(); ++t) {
            const double p = r.token_probs[t];
            if (!(p > 0.0 && p <= 1.0)) {
                add("token_probs[" + std::to_string(t) + "]", "probability out of range (0,1]");
            }
        }
        for (const auto& metric : required_metrics) {
            auto it = r.similarity.find(metric);
            if (it == r.similarity.end()) {
                add("similarity." + metric, "missing similarity metric");
            } else if (!std::isfinite(it->second)) {
                add("similarity." + metric, "non-finite similarity");
            }
        }
    }
    return findings;
}

Corpus parse_records(std::istream& in, std::string source) {
    Corpus corpus = read_records(in, std::move(source));
    auto findings = validate(corpus);
    if (!findings.empty()) {
        const auto& f = findings.front();
        throw ValidationError(f.line, f.field, f.rule + " (record '" + f.record_id + "')");
    }
    return corpus;
}

Corpus load_records(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_records(in, path.string());
}

std::vector<RatingRecord> parse_ratings(std::istream& in) {
    std::vector<RatingRecord> out;
    std::set<std::string> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (is_blank(text)) continue;
        json j = parse_object(text, line);
        RatingRecord r;
        r.id = required_string(j, "id", line);
        r.metric_values = number_map(j, "metric_values", line, true);

        auto ratings = j.find("ratings");
        if (ratings == j.end()) throw ParseError(line, "missing field 'ratings'");
        if (!ratings->is_array()) throw ParseError(line, "field 'ratings' must be an array");
        if (ratings->size() != 3) {
            throw ValidationError(line, "ratings",
                                  "expected 3 ratings, got " + std::to_string(ratings->size()));
        }
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& v = (*ratings)[k];
            if (!v.is_number_integer()) throw ParseError(line, "ratings must be integers");
            const int x = v.get<int>();
            if (x < 1 || x > 4) {
                throw ValidationError(line, "ratings[" + std::to_string(k) + "]",
                                      "rating " + std::to_string(x) + " out of range 1..4");
            }
            r.ratings[k] = x;
        }
        if (!seen.insert(r.id).second) throw ValidationError(line, "id", "duplicate id '" + r.id + "'");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_ratings(in);
}

json to_json(const SummaryRecord& r) {
    json j;
    j["id"] = r.id;
    j["repo"] = r.repo;
    j["tags"] = r.tags;
    j["token_probs"] = r.token_probs;
    j["similarity"] = r.similarity;
    if (r.summary_text) j["summary_text"] = *r.summary_text;
    if (r.reference_text) j["reference_text"] = *r.reference_text;
    return j;
}

json to_json(const RatingRecord& r) {
    json j;
    j["id"] = r.id;
    j["metric_values"] = r.metric_values;
    j["ratings"] = r.ratings;
    return j;
}

void write_records(std::ostream& out, const Corpus& corpus) {
    for (const auto& r : corpus.records) {
        out << to_json(r).dump() << '\n';
    }
}

void write_ratings(std::ostream& out, std::span<const RatingRecord> ratings) {
    for (const auto& r : ratings) {
        out << to_json(r).dump() << '\n';
    }
}

}  // namespace sumcal
