#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sumcal {

// One (confidence, outcome) pair, the unit of all calibration math.
struct LabeledSample {
    std::string id;
    std::string repo;
    double confidence = 0.0;
    int outcome = 0;

    bool operator==(const LabeledSample&) const = default;
};

struct ReliabilityBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;  // 0 when empty
    double accuracy = 0.0;         // 0 when empty
};

struct CalibrationReport {
    std::size_t n = 0;
    double success_rate = 0.0;
    double brier = 0.0;
    double ref_brier = 0.0;
    std::optional<double> skill;  // nullopt when the base rate is 0 or 1
    double ece = 0.0;
    std::vector<ReliabilityBin> bins;
};

double success_rate(std::span<const LabeledSample> samples);

// Per-sample (confidence - outcome)^2, in input order.
std::vector<double> squared_errors(std::span<const LabeledSample> samples);

// Mean of squared_errors(); throws std::invalid_argument on empty input.
double brier(std::span<const LabeledSample> samples);

// p(1-p) for the empirical success rate p.
double reference_brier(double base_rate);

// (B_ref - B) / B_ref; nullopt when B_ref == 0.
std::optional<double> skill_score(double base_rate, double brier_score);
std::optional<double> skill_score(std::span<const LabeledSample> samples);

// Equal-width bins over [0,1]; bin i is [i/n, (i+1)/n) except the last,
// which is closed on the right.
std::size_t bin_index(double confidence, std::size_t n_bins);
std::vector<ReliabilityBin> reliability_bins(std::span<const LabeledSample> samples, std::size_t n_bins = 10);
double ece(std::span<const LabeledSample> samples, std::size_t n_bins = 10);
double ece_from_bins(std::span<const ReliabilityBin> bins);

CalibrationReport calibration_report(std::span<const LabeledSample> samples, std::size_t n_bins = 10);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. nullopt if either input is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

nlohmann::json to_json(const LabeledSample& s);
LabeledSample labeled_sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReliabilityBin& b);
ReliabilityBin reliability_bin_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CalibrationReport& r);
CalibrationReport calibration_report_from_json(const nlohmann::json& j);

std::vector<LabeledSample> read_samples(std::istream& in);
std::vector<LabeledSample> load_samples(const std::string& path);
void write_samples(std::ostream& out, std::span<const LabeledSample> samples);

}  // namespace sumcal
