#include "sumcal/confidence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace sumcal {

Aggregator parse_aggregator(std::string_view name) {
    if (name == "geometric") return Aggregator::geometric;
    if (name == "arithmetic") return Aggregator::arithmetic;
    throw std::invalid_argument("unknown aggregator '" + std::string(name) + "'");
}

std::string to_string(Aggregator a) {
    return a == Aggregator::geometric ? "geometric" : "arithmetic";
}

Cutoff parse_cutoff(std::string_view text) {
    if (text == "inf" || text == "unbounded" || text == "all") return std::nullopt;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
        throw std::invalid_argument("cutoff must be a positive integer or 'inf', got '" + std::string(text) + "'");
    }
    return value;
}

std::string to_string(const Cutoff& c) {
    return c ? std::to_string(*c) : "inf";
}

double aggregate(std::span<const double> token_probs, const ConfidenceSpec& spec) {
    if (token_probs.empty()) throw std::invalid_argument("aggregate: empty token list");
    if (spec.cutoff && *spec.cutoff == 0) throw std::invalid_argument("aggregate: cutoff must be >= 1");

    const std::size_t n = spec.cutoff ? std::min(*spec.cutoff, token_probs.size()) : token_probs.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = token_probs[i];
        if (!(p > 0.0 && p <= 1.0)) {
            throw std::invalid_argument("aggregate: token probability " + std::to_string(p) + " outside (0,1]");
        }
        sum += spec.aggregator == Aggregator::geometric ? std::log(p) : p;
    }
    const double mean = sum / static_cast<double>(n);
    const double c = spec.aggregator == Aggregator::geometric ? std::exp(mean) : mean;
    return std::min(c, 1.0);
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<PositionSummary> token_position_profile(const Corpus& corpus, std::size_t max_position,
                                                    std::size_t bucket_width) {
    if (corpus.records.empty()) throw std::invalid_argument("token_position_profile: empty corpus");
    if (bucket_width == 0) throw std::invalid_argument("token_position_profile: bucket width must be >= 1");

    const std::size_t n_buckets = (max_position + bucket_width - 1) / bucket_width;
    std::vector<std::vector<double>> values(n_buckets);
    for (const auto& r : corpus.records) {
        const std::size_t n = std::min(max_position, r.token_probs.size());
        for (std::size_t i = 0; i < n; ++i) {
            values[i / bucket_width].push_back(r.token_probs[i]);
        }
    }

    std::vector<PositionSummary> out;
    for (std::size_t b = 0; b < n_buckets; ++b) {
        auto& v = values[b];
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        PositionSummary s;
        s.first_position = b * bucket_width + 1;
        s.last_position = std::min((b + 1) * bucket_width, max_position);
        s.count = v.size();
        s.min = v.front();
        s.q1 = quantile_sorted(v, 0.25);
        s.median = quantile_sorted(v, 0.5);
        s.q3 = quantile_sorted(v, 0.75);
        s.max = v.back();
        out.push_back(s);
    }
    return out;
}

}  // namespace sumcal
