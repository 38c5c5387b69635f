#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumcal/confidence.hpp"
#include "sumcal/correctness.hpp"
#include "sumcal/rescale.hpp"

namespace sumcal {

struct RunConfig {
    std::filesystem::path records;
    std::optional<std::filesystem::path> ratings;
    ConfidenceSpec confidence;
    // Either an explicit rule, or ratings + objective to search one.
    std::optional<CorrectnessRule> rule;
    Objective objective = Objective::max_f1;
    std::vector<std::string> search_metrics{"bertscore", "sentencebert"};
    int k = 5;
    std::uint64_t seed = 0;
    double l2 = kDefaultL2;
    FeatureSpace feature_space = FeatureSpace::logit;
    std::size_t bins = 10;
    bool tune_cutoff = false;
    std::vector<Cutoff> t_grid = parse_cutoff_grid("1..30,inf");
    std::size_t max_position = 30;
    std::filesystem::path output_dir = "sumcal-out";
};

// "key = value" lines; '#' starts a comment. Relative input paths are
// resolved against base_dir. Unknown keys are an error.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});

// Also applies the SUMCAL_OUTPUT_DIR environment override.
RunConfig load_run_config(const std::filesystem::path& path);

struct PipelineResult {
    nlohmann::json summary;
    std::vector<std::filesystem::path> written;
};

// Labels the corpus, reports raw calibration, rescales out of fold (and
// optionally tunes the token cutoff), then writes samples, fold models,
// summary.json, tables and figures into config.output_dir.
PipelineResult run_pipeline(const RunConfig& config);

// Tables and figures derived from summary.json alone.
std::vector<std::filesystem::path> render_summary(const nlohmann::json& summary, const std::filesystem::path& out_dir);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace sumcal
