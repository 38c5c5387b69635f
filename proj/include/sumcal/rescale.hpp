#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sumcal/confidence.hpp"
#include "sumcal/correctness.hpp"
#include "sumcal/corpus.hpp"
#include "sumcal/metrics.hpp"

namespace sumcal {

enum class FeatureSpace { raw, logit };

FeatureSpace parse_feature_space(std::string_view name);
std::string to_string(FeatureSpace f);

inline constexpr double kLogitClamp = 1e-6;
inline constexpr double kDefaultL2 = 1e-6;

// sigmoid(slope * feature(x) + intercept)
struct PlattModel {
    double slope = 1.0;
    double intercept = 0.0;
    FeatureSpace feature_space = FeatureSpace::logit;
    int iterations = 0;
    double neg_log_likelihood = 0.0;  // unpenalized, at the solution
};

double sigmoid(double z);

// x itself, or log(x/(1-x)) with x clamped to [1e-6, 1-1e-6].
double platt_feature(double confidence, FeatureSpace space);

// Damped Newton on the L2-penalized Bernoulli log-likelihood. Stops when the
// gradient norm drops below 1e-10, after 100 iterations, or when the line
// search can no longer decrease the objective.
PlattModel fit_platt(std::span<const LabeledSample> train, FeatureSpace space = FeatureSpace::logit,
                     double l2 = kDefaultL2);

double apply(const PlattModel& model, double confidence);
std::vector<LabeledSample> rescale_samples(const PlattModel& model, std::span<const LabeledSample> samples);

// Every repository maps to exactly one fold.
struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::map<std::string, int> repo_to_fold;

    int fold_of(const std::string& repo) const;
};

// Repos are sorted, shuffled with the seeded generator, then each is dealt
// to the fold with the fewest records so far (lowest index on ties).
FoldAssignment assign_folds(const std::map<std::string, std::size_t>& repo_sizes, int k, std::uint64_t seed);
FoldAssignment assign_folds(const Corpus& corpus, int k, std::uint64_t seed);
FoldAssignment assign_folds(std::span<const LabeledSample> samples, int k, std::uint64_t seed);

struct CrossvalResult {
    // Out-of-fold rescaled samples sorted by id; fold[i] is the held-out fold
    // that produced samples[i].
    std::vector<LabeledSample> samples;
    std::vector<int> fold;
    std::vector<PlattModel> models;  // indexed by fold
};

CrossvalResult crossval_rescale(std::span<const LabeledSample> samples, const FoldAssignment& folds,
                                FeatureSpace space = FeatureSpace::logit, double l2 = kDefaultL2);

struct CutoffChoice {
    std::vector<Cutoff> grid;       // ascending, unbounded last
    std::vector<Cutoff> per_fold;   // selected t for each held-out fold
    // training-fold skill per [fold][candidate]; nullopt when undefined
    std::vector<std::vector<std::optional<double>>> training_skill;
};

struct CutoffResult {
    CutoffChoice choice;
    CrossvalResult out_of_fold;
};

// For each held-out fold: score every candidate t on the other folds
// (confidence with cutoff t, Platt fit and evaluated on those folds), keep the
// best training skill (ties to the larger t), and rescale the held-out fold
// with that t and that model.
CutoffResult tune_cutoff(const Corpus& corpus, const CorrectnessRule& rule, const FoldAssignment& folds,
                         const ConfidenceSpec& base, std::span<const Cutoff> t_grid,
                         FeatureSpace space = FeatureSpace::logit, double l2 = kDefaultL2);

// "1..30,inf" style lists: comma separated integers, ranges a..b, and inf.
std::vector<Cutoff> parse_cutoff_grid(std::string_view text);

nlohmann::json to_json(const PlattModel& m);
PlattModel platt_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FoldAssignment& f);
FoldAssignment fold_assignment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CutoffChoice& c);

}  // namespace sumcal
