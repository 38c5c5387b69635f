#include "sumcal/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "sumcal/render.hpp"
#include "sumcal/stats.hpp"

namespace sumcal {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    return p.is_relative() && !base.empty() ? base / p : p;
}

std::string grid_string(const std::vector<Cutoff>& grid) {
    std::string s;
    for (std::size_t i = 0; i < grid.size(); ++i) s += (i ? "," : "") + sumcal::to_string(grid[i]);
    return s;
}

json config_json(const RunConfig& c) {
    return json{{"records", c.records.string()},
                {"ratings", c.ratings ? json(c.ratings->string()) : json(nullptr)},
                {"aggregator", to_string(c.confidence.aggregator)},
                {"cutoff", to_string(c.confidence.cutoff)},
                {"objective", to_string(c.objective)},
                {"search_metrics", c.search_metrics},
                {"k", c.k},
                {"seed", c.seed},
                {"l2", c.l2},
                {"feature_space", to_string(c.feature_space)},
                {"bins", c.bins},
                {"tune_cutoff", c.tune_cutoff},
                {"t_grid", grid_string(c.t_grid)},
                {"max_position", c.max_position}};
}

json profile_json(const std::vector<PositionSummary>& profile) {
    json out = json::array();
    for (const auto& p : profile) {
        out.push_back(json{{"first_position", p.first_position},
                           {"last_position", p.last_position},
                           {"count", p.count},
                           {"min", p.min},
                           {"q1", p.q1},
                           {"median", p.median},
                           {"q3", p.q3},
                           {"max", p.max}});
    }
    return out;
}

std::vector<PositionSummary> profile_from_json(const json& j) {
    std::vector<PositionSummary> out;
    for (const auto& p : j) {
        PositionSummary s;
        s.first_position = p.at("first_position").get<std::size_t>();
        s.last_position = p.at("last_position").get<std::size_t>();
        s.count = p.at("count").get<std::size_t>();
        s.min = p.at("min").get<double>();
        s.q1 = p.at("q1").get<double>();
        s.median = p.at("median").get<double>();
        s.q3 = p.at("q3").get<double>();
        s.max = p.at("max").get<double>();
        out.push_back(s);
    }
    return out;
}

std::vector<LabeledSample> sorted_by_id(std::vector<LabeledSample> v) {
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return v;
}

void write_samples_file(const fs::path& path, std::span<const LabeledSample> samples) {
    std::ostringstream os;
    write_samples(os, samples);
    write_text_file(path, os.str());
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir) {
    RunConfig c;
    std::optional<std::string> metric;
    std::optional<double> threshold;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "records") c.records = resolve(base_dir, value);
            else if (key == "ratings") c.ratings = resolve(base_dir, value);
            else if (key == "aggregator") c.confidence.aggregator = parse_aggregator(value);
            else if (key == "cutoff") c.confidence.cutoff = parse_cutoff(value);
            else if (key == "metric") metric = value;
            else if (key == "threshold") threshold = std::stod(value);
            else if (key == "objective") c.objective = parse_objective(value);
            else if (key == "search_metrics") c.search_metrics = split_list(value);
            else if (key == "k") c.k = std::stoi(value);
            else if (key == "seed") c.seed = std::stoull(value);
            else if (key == "l2") c.l2 = std::stod(value);
            else if (key == "feature_space") c.feature_space = parse_feature_space(value);
            else if (key == "bins") c.bins = std::stoul(value);
            else if (key == "tune_cutoff") c.tune_cutoff = parse_bool(value);
            else if (key == "t_grid") c.t_grid = parse_cutoff_grid(value);
            else if (key == "max_position") c.max_position = std::stoul(value);
            else if (key == "output_dir") c.output_dir = resolve(base_dir, value);
            else throw std::invalid_argument("unknown key");
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + " (" + key + "): " + e.what());
        }
    }
    if (metric.has_value() != threshold.has_value()) {
        throw std::invalid_argument("config: 'metric' and 'threshold' must be given together");
    }
    if (metric) c.rule = CorrectnessRule{*metric, *threshold};
    if (c.records.empty()) throw std::invalid_argument("config: 'records' is required");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    RunConfig c = parse_run_config(in, path.parent_path());
    if (const char* dir = std::getenv("SUMCAL_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
    return c;
}

PipelineResult run_pipeline(const RunConfig& config) {
    if (config.bins == 0) throw std::invalid_argument("bins must be >= 1");
    const Corpus corpus = load_records(config.records);
    if (corpus.records.empty()) throw std::invalid_argument("corpus " + config.records.string() + " is empty");

    json summary;
    summary["config"] = config_json(config);

    std::optional<std::vector<RatingRecord>> ratings;
    if (config.ratings) ratings = load_ratings(*config.ratings);

    CorrectnessRule rule;
    if (config.rule) {
        rule = *config.rule;
        summary["rule_selection"] = nullptr;
    } else {
        if (!ratings) throw std::invalid_argument("no correctness rule: give metric/threshold or a ratings file");
        auto selection = grid_search(*ratings, config.search_metrics, config.objective);
        if (!selection) {
            throw std::runtime_error("threshold search infeasible for objective " + to_string(config.objective));
        }
        rule = selection->rule;
        summary["rule_selection"] = to_json(*selection);
    }
    summary["rule"] = to_json(rule);

    const std::string required[] = {rule.metric};
    const auto findings = validate(corpus, required);
    if (!findings.empty()) {
        throw std::runtime_error("similarity metric '" + rule.metric + "' missing or invalid in " +
                                 std::to_string(findings.size()) + " record(s), first: '" +
                                 findings.front().record_id + "'");
    }

    const auto raw = sorted_by_id(labeled_samples(corpus, config.confidence, rule));
    const auto raw_report = calibration_report(raw, config.bins);
    summary["raw"] = to_json(raw_report);

    const FoldAssignment folds = assign_folds(corpus, config.k, config.seed);
    const CrossvalResult cv = crossval_rescale(raw, folds, config.feature_space, config.l2);
    summary["rescaled"] = to_json(calibration_report(cv.samples, config.bins));
    summary["folds"] = to_json(folds);
    json models = json::array();
    for (const auto& m : cv.models) models.push_back(to_json(m));
    summary["models"] = models;

    std::optional<CutoffResult> tuned;
    if (config.tune_cutoff) {
        tuned = tune_cutoff(corpus, rule, folds, config.confidence, config.t_grid, config.feature_space, config.l2);
        summary["tuned"] = to_json(calibration_report(tuned->out_of_fold.samples, config.bins));
        summary["cutoff"] = to_json(tuned->choice);
        json tuned_models = json::array();
        for (const auto& m : tuned->out_of_fold.models) tuned_models.push_back(to_json(m));
        summary["tuned_models"] = tuned_models;
        ComparisonResult cmp[] = {paired_ttest(tuned->out_of_fold.samples, cv.samples)};
        bh_adjust(cmp);
        summary["comparison"] = json{{"a", "tuned-cutoff"}, {"b", "all-tokens"}, {"result", to_json(cmp[0])}};
    } else {
        summary["tuned"] = nullptr;
        summary["cutoff"] = nullptr;
        summary["tuned_models"] = nullptr;
        summary["comparison"] = nullptr;
    }

    std::vector<double> conf, sim;
    for (const auto& r : corpus.records) {
        conf.push_back(aggregate(r.token_probs, config.confidence));
        sim.push_back(r.similarity.at(rule.metric));
    }
    const auto rho = spearman(conf, sim);
    summary["spearman_confidence_similarity"] = rho ? json(*rho) : json(nullptr);

    summary["position_profile"] = profile_json(token_position_profile(corpus, config.max_position));

    summary["roc"] = nullptr;
    if (ratings) {
        try {
            summary["roc"] = to_json(roc(*ratings, rule.metric));
        } catch (const std::invalid_argument&) {
            // single-class or metric absent from the ratings: no curve
        }
    }

    fs::create_directories(config.output_dir);
    PipelineResult result;
    auto out = [&](const std::string& name) {
        result.written.push_back(config.output_dir / name);
        return config.output_dir / name;
    };
    write_samples_file(out("raw_samples.jsonl"), raw);
    write_samples_file(out("rescaled_samples.jsonl"), cv.samples);
    if (tuned) write_samples_file(out("tuned_samples.jsonl"), tuned->out_of_fold.samples);
    write_text_file(out("folds.json"), json{{"assignment", summary["folds"]}, {"models", summary["models"]}}.dump(2) + "\n");
    write_text_file(out("summary.json"), summary.dump(2) + "\n");
    for (auto& p : render_summary(summary, config.output_dir)) result.written.push_back(std::move(p));
    result.summary = std::move(summary);
    return result;
}

std::vector<fs::path> render_summary(const json& summary, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    auto write = [&](const std::string& name, const std::string& content) {
        write_text_file(out_dir / name, content);
        written.push_back(out_dir / name);
    };

    const std::string headers[] = {"Treatment"};
    std::vector<TableRow> rows;
    for (const char* key : {"raw", "rescaled", "tuned"}) {
        if (!summary.contains(key) || summary[key].is_null()) continue;
        const auto report = calibration_report_from_json(summary[key]);
        rows.push_back({{key}, report});
        write(std::string("bins_") + key + ".csv", render_bins_csv(report.bins));
        write(std::string("reliability_") + key + ".svg",
              render_reliability_svg(report.bins, std::string("Reliability (") + key + ")"));
    }
    write("table.txt", render_table_text(rows, headers));
    write("table.csv", render_table_csv(rows, headers));

    if (summary.contains("position_profile")) {
        const auto profile = profile_from_json(summary["position_profile"]);
        write("token_positions.csv", render_position_csv(profile));
        write("token_positions.svg", render_position_boxplot_svg(profile, "Token probability by position"));
    }
    if (summary.contains("roc") && !summary["roc"].is_null()) {
        const std::string metric = summary.at("rule").at("metric").get<std::string>();
        write("roc.svg", render_roc_svg(roc_curve_from_json(summary["roc"]), metric + " ROC"));
    }
    return written;
}

}  // namespace sumcal
