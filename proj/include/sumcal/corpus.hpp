#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sumcal {

// Malformed input line (not valid JSON, wrong field types).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed record that breaks a data invariant.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::size_t line, std::string field, const std::string& what);
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

struct SummaryRecord {
    std::string id;
    std::string repo;
    std::map<std::string, std::string> tags;
    std::vector<double> token_probs;
    std::map<std::string, double> similarity;
    std::optional<std::string> summary_text;
    std::optional<std::string> reference_text;

    bool operator==(const SummaryRecord&) const = default;
};

struct Corpus {
    std::vector<SummaryRecord> records;
    std::string source;
    // 1-based input line of each record; empty for corpora built in memory.
    std::vector<std::size_t> lines;

    std::size_t line_of(std::size_t index) const { return index < lines.size() ? lines[index] : 0; }
};

struct RatingRecord {
    std::string id;
    std::map<std::string, double> metric_values;
    std::array<int, 3> ratings{};

    double mean_rating() const { return (ratings[0] + ratings[1] + ratings[2]) / 3.0; }
    bool operator==(const RatingRecord&) const = default;
};

struct Finding {
    std::string record_id;
    std::size_t line = 0;
    std::string field;
    std::string rule;
};

enum class ProbEncoding { linear, logprob };

// Syntax-only read: every line must be a JSON object with correctly typed
// fields, but value invariants are left to validate(). A first line of the
// form {"encoding":"logprob"} switches token_probs to natural-log input.
Corpus read_records(std::istream& in, std::string source);

// read_records + validate; throws ValidationError on the first finding.
Corpus parse_records(std::istream& in, std::string source);
Corpus load_records(const std::filesystem::path& path);

std::vector<RatingRecord> parse_ratings(std::istream& in);
std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);

// Never throws on a syntactically valid corpus. required_metrics names the
// similarity keys every record must carry.
std::vector<Finding> validate(const Corpus& corpus, std::span<const std::string> required_metrics = {});

nlohmann::json to_json(const SummaryRecord& record);
nlohmann::json to_json(const RatingRecord& record);

// One record per line, linear probabilities, no header.
void write_records(std::ostream& out, const Corpus& corpus);
void write_ratings(std::ostream& out, std::span<const RatingRecord> ratings);

}  // namespace sumcal
