#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumcal/corpus.hpp"

namespace sumcal {

enum class Aggregator { geometric, arithmetic };

// Number of leading tokens to aggregate; nullopt means all of them.
using Cutoff = std::optional<std::size_t>;

struct ConfidenceSpec {
    Aggregator aggregator = Aggregator::geometric;
    Cutoff cutoff;
};

Aggregator parse_aggregator(std::string_view name);
std::string to_string(Aggregator a);

// "inf" / "unbounded" / "all" or a positive integer.
Cutoff parse_cutoff(std::string_view text);
std::string to_string(const Cutoff& c);

// Sequence confidence over the first min(cutoff, size) tokens. The geometric
// mean is evaluated as exp(mean(log p)) so long sequences do not underflow.
// Throws std::invalid_argument on an empty list, a probability outside (0,1]
// or a zero cutoff.
double aggregate(std::span<const double> token_probs, const ConfidenceSpec& spec);

struct PositionSummary {
    std::size_t first_position = 0;  // 1-based, inclusive
    std::size_t last_position = 0;
    std::size_t count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Distribution of token probabilities by (1-based) position, over positions
// 1..max_position grouped into buckets of bucket_width. Buckets no record
// reaches are omitted.
std::vector<PositionSummary> token_position_profile(const Corpus& corpus, std::size_t max_position,
                                                    std::size_t bucket_width = 1);

// Linear-interpolation quantile of sorted data, q in [0,1].
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace sumcal
