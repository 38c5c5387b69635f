// sumcal: command-line front end for the summary-calibration toolkit.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sumcal/confidence.hpp"
#include "sumcal/correctness.hpp"
#include "sumcal/corpus.hpp"
#include "sumcal/metrics.hpp"
#include "sumcal/pipeline.hpp"
#include "sumcal/render.hpp"
#include "sumcal/rescale.hpp"
#include "sumcal/stats.hpp"
#include "sumcal/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sumcal;

namespace {

constexpr int kExitInfeasible = 3;

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        write_text_file(path, content);
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

struct ConfidenceOptions {
    std::string aggregator = "geometric";
    std::string cutoff = "inf";

    void add(CLI::App* app) {
        app->add_option("--aggregator", aggregator, "geometric|arithmetic")->capture_default_str();
        app->add_option("--cutoff", cutoff, "leading tokens to aggregate (N or inf)")->capture_default_str();
    }
    ConfidenceSpec spec() const { return {parse_aggregator(aggregator), parse_cutoff(cutoff)}; }
};

struct RuleOptions {
    std::string rule_file;
    std::string metric;
    double threshold = 0.0;
    CLI::Option* threshold_opt = nullptr;

    void add(CLI::App* app) {
        app->add_option("--rule", rule_file, "rule JSON from search-thresholds");
        app->add_option("--metric", metric, "similarity metric of the rule");
        threshold_opt = app->add_option("--threshold", threshold, "similarity threshold (>=)");
    }
    CorrectnessRule rule() const {
        if (!rule_file.empty()) return correctness_rule_from_json(read_json_file(rule_file));
        if (metric.empty() || !*threshold_opt) throw std::invalid_argument("give --rule or both --metric and --threshold");
        return {metric, threshold};
    }
};

std::vector<LabeledSample> sorted_samples(std::vector<LabeledSample> v) {
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return v;
}

std::string samples_text(std::span<const LabeledSample> samples) {
    std::ostringstream os;
    write_samples(os, samples);
    return os.str();
}

// "name a-file b-file" per line, paths relative to the manifest.
struct ManifestEntry {
    std::string name;
    fs::path a, b;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ss(line);
        ManifestEntry e;
        std::string a, b, extra;
        if (!(ss >> e.name)) continue;
        if (!(ss >> a >> b) || (ss >> extra)) {
            throw std::invalid_argument("manifest line " + std::to_string(n) + ": expected '<name> <a> <b>'");
        }
        e.a = fs::path(a).is_relative() ? path.parent_path() / a : fs::path(a);
        e.b = fs::path(b).is_relative() ? path.parent_path() / b : fs::path(b);
        out.push_back(std::move(e));
    }
    if (out.empty()) throw std::invalid_argument("manifest " + path.string() + " lists no comparisons");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibration toolkit for token-probability confidence of generated code summaries"};
    app.require_subcommand(1);

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a corpus or rating file against its invariants");
    std::string v_records, v_ratings;
    std::vector<std::string> v_metrics;
    validate_cmd->add_option("--records", v_records, "summary records (JSON-lines)");
    validate_cmd->add_option("--ratings", v_ratings, "human rating records (JSON-lines)");
    validate_cmd->add_option("--require-metric", v_metrics, "similarity metric every record must carry");

    // score
    auto* score_cmd = app.add_subcommand("score", "Aggregate token probabilities into confidences");
    std::string s_records, s_out;
    ConfidenceOptions s_conf;
    score_cmd->add_option("--records", s_records)->required();
    score_cmd->add_option("--out", s_out, "output JSON-lines (default stdout)");
    s_conf.add(score_cmd);

    // label
    auto* label_cmd = app.add_subcommand("label", "Produce labeled samples (confidence, outcome)");
    std::string l_records, l_out;
    ConfidenceOptions l_conf;
    RuleOptions l_rule;
    label_cmd->add_option("--records", l_records)->required();
    label_cmd->add_option("--out", l_out, "output JSON-lines (default stdout)");
    l_conf.add(label_cmd);
    l_rule.add(label_cmd);

    // search-thresholds
    auto* search_cmd = app.add_subcommand("search-thresholds", "Grid-search a correctness rule on human ratings");
    std::string t_ratings, t_objective = "max-f1", t_metrics = "bertscore,sentencebert", t_out, t_roc;
    search_cmd->add_option("--ratings", t_ratings)->required();
    search_cmd->add_option("--objective", t_objective, "high-precision|high-recall|max-f1")->capture_default_str();
    search_cmd->add_option("--metrics", t_metrics, "comma-separated metric names")->capture_default_str();
    search_cmd->add_option("--out", t_out, "rule JSON (default stdout)");
    search_cmd->add_option("--roc-svg", t_roc, "also draw the ROC curve of the selected metric");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Calibration report for labeled samples");
    std::string e_samples, e_out, e_csv, e_svg;
    std::size_t e_bins = 10;
    eval_cmd->add_option("--samples", e_samples)->required();
    eval_cmd->add_option("--bins", e_bins)->capture_default_str();
    eval_cmd->add_option("--out", e_out, "report JSON (default stdout)");
    eval_cmd->add_option("--csv", e_csv, "table CSV");
    eval_cmd->add_option("--svg", e_svg, "reliability diagram");

    // rescale
    auto* rescale_cmd = app.add_subcommand("rescale", "Repository-grouped cross-validated Platt rescaling");
    std::string r_samples, r_records, r_out_dir = ".", r_feature = "logit", r_grid = "1..30,inf";
    int r_k = 5;
    std::uint64_t r_seed = 0;
    double r_l2 = kDefaultL2;
    bool r_tune = false;
    ConfidenceOptions r_conf;
    RuleOptions r_rule;
    rescale_cmd->add_option("--samples", r_samples, "labeled samples (alternative to --records)");
    rescale_cmd->add_option("--records", r_records, "summary records");
    rescale_cmd->add_option("--k", r_k)->capture_default_str();
    rescale_cmd->add_option("--seed", r_seed)->capture_default_str();
    rescale_cmd->add_option("--l2", r_l2)->capture_default_str();
    rescale_cmd->add_option("--feature-space", r_feature, "logit|raw")->capture_default_str();
    rescale_cmd->add_flag("--tune-cutoff", r_tune, "select the token cutoff per fold");
    rescale_cmd->add_option("--t-grid", r_grid, "cutoff candidates, e.g. 1..30,inf")->capture_default_str();
    rescale_cmd->add_option("--out-dir", r_out_dir)->capture_default_str();
    r_conf.add(rescale_cmd);
    r_rule.add(rescale_cmd);

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "Paired t-test on squared errors, BH-adjusted over a family");
    std::string c_a, c_b, c_manifest, c_out, c_csv;
    double c_alpha = 0.01;
    compare_cmd->add_option("--a", c_a, "samples of treatment A");
    compare_cmd->add_option("--b", c_b, "samples of treatment B");
    compare_cmd->add_option("--manifest", c_manifest, "lines of '<name> <a> <b>'");
    compare_cmd->add_option("--alpha", c_alpha, "reported significance level")->capture_default_str();
    compare_cmd->add_option("--out", c_out, "result JSON (default stdout)");
    compare_cmd->add_option("--csv", c_csv, "family table CSV");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic corpus with known ground truth");
    std::string g_spec, g_out, g_truth = "truth.json", g_ratings;
    sim_cmd->add_option("--spec", g_spec, "generator spec JSON")->required();
    sim_cmd->add_option("--out", g_out, "corpus JSON-lines")->required();
    sim_cmd->add_option("--truth", g_truth, "truth sidecar")->capture_default_str();
    sim_cmd->add_option("--ratings-out", g_ratings, "rating corpus, when the spec has a 'ratings' section");

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "Regenerate tables and figures from summary.json");
    std::string p_summary, p_out_dir = ".";
    plot_cmd->add_option("--summary", p_summary)->required();
    plot_cmd->add_option("--out-dir", p_out_dir)->capture_default_str();

    // report
    auto* report_cmd = app.add_subcommand("report", "Run the full pipeline from a config file");
    std::string rp_config, rp_out_dir;
    report_cmd->add_option("--config", rp_config)->required();
    report_cmd->add_option("--output-dir", rp_out_dir, "overrides output_dir and SUMCAL_OUTPUT_DIR");

    CLI11_PARSE(app, argc, argv);

    const std::string which = app.get_subcommands().front()->get_name();
    try {
        if (*validate_cmd) {
            if (v_records.empty() == v_ratings.empty()) throw std::invalid_argument("give exactly one of --records, --ratings");
            if (!v_ratings.empty()) {
                const auto ratings = load_ratings(v_ratings);
                std::cout << "ok: " << ratings.size() << " rating records\n";
                return 0;
            }
            std::ifstream in(v_records);
            if (!in) throw std::runtime_error("cannot open " + v_records);
            const Corpus corpus = read_records(in, v_records);
            const auto findings = validate(corpus, v_metrics);
            for (const auto& f : findings) {
                std::cout << "line " << f.line << ": record '" << f.record_id << "': " << f.field << ": " << f.rule << '\n';
            }
            if (!findings.empty()) return 1;
            std::cout << "ok: " << corpus.records.size() << " records\n";
        } else if (*score_cmd) {
            const Corpus corpus = load_records(s_records);
            const auto spec = s_conf.spec();
            std::ostringstream os;
            for (const auto& r : corpus.records) {
                os << json{{"id", r.id}, {"repo", r.repo}, {"confidence", aggregate(r.token_probs, spec)}}.dump() << '\n';
            }
            emit(s_out, os.str());
        } else if (*label_cmd) {
            const Corpus corpus = load_records(l_records);
            emit(l_out, samples_text(sorted_samples(labeled_samples(corpus, l_conf.spec(), l_rule.rule()))));
        } else if (*search_cmd) {
            const auto ratings = load_ratings(t_ratings);
            std::vector<std::string> metrics;
            std::stringstream ss(t_metrics);
            for (std::string m; std::getline(ss, m, ',');) {
                if (!m.empty()) metrics.push_back(m);
            }
            const Objective objective = parse_objective(t_objective);
            const auto selection = grid_search(ratings, metrics, objective);
            if (!selection) {
                emit(t_out, json{{"feasible", false}, {"objective", to_string(objective)}}.dump(2) + "\n");
                std::cerr << "sumcal search-thresholds: no (metric, threshold) satisfies " << to_string(objective) << '\n';
                return kExitInfeasible;
            }
            emit(t_out, to_json(*selection).dump(2) + "\n");
            if (!t_roc.empty()) {
                write_text_file(t_roc, render_roc_svg(roc(ratings, selection->rule.metric), selection->rule.metric + " ROC"));
            }
        } else if (*eval_cmd) {
            const auto samples = load_samples(e_samples);
            const auto report = calibration_report(samples, e_bins);
            emit(e_out, to_json(report).dump(2) + "\n");
            const std::string headers[] = {"Samples"};
            const TableRow rows[] = {{{fs::path(e_samples).filename().string()}, report}};
            if (!e_csv.empty()) write_text_file(e_csv, render_table_csv(rows, headers));
            if (!e_svg.empty()) write_text_file(e_svg, render_reliability_svg(report.bins, "Reliability"));
            std::cerr << render_table_text(rows, headers);
        } else if (*rescale_cmd) {
            if (r_samples.empty() == r_records.empty()) throw std::invalid_argument("give exactly one of --samples, --records");
            const FeatureSpace space = parse_feature_space(r_feature);
            fs::create_directories(r_out_dir);
            const fs::path dir(r_out_dir);
            if (!r_samples.empty()) {
                if (r_tune) throw std::invalid_argument("--tune-cutoff needs --records (token probabilities)");
                const auto samples = sorted_samples(load_samples(r_samples));
                const auto folds = assign_folds(samples, r_k, r_seed);
                const auto cv = crossval_rescale(samples, folds, space, r_l2);
                json models = json::array();
                for (const auto& m : cv.models) models.push_back(to_json(m));
                write_text_file(dir / "folds.json", json{{"assignment", to_json(folds)}, {"models", models}}.dump(2) + "\n");
                write_text_file(dir / "oof_samples.jsonl", samples_text(cv.samples));
            } else {
                const Corpus corpus = load_records(r_records);
                const auto rule = r_rule.rule();
                const auto spec = r_conf.spec();
                const auto folds = assign_folds(corpus, r_k, r_seed);
                CrossvalResult cv;
                json extra = nullptr;
                if (r_tune) {
                    auto tuned = tune_cutoff(corpus, rule, folds, spec, parse_cutoff_grid(r_grid), space, r_l2);
                    extra = to_json(tuned.choice);
                    cv = std::move(tuned.out_of_fold);
                } else {
                    cv = crossval_rescale(sorted_samples(labeled_samples(corpus, spec, rule)), folds, space, r_l2);
                }
                json models = json::array();
                for (const auto& m : cv.models) models.push_back(to_json(m));
                write_text_file(dir / "folds.json",
                                json{{"assignment", to_json(folds)}, {"models", models}, {"cutoff", extra}}.dump(2) + "\n");
                write_text_file(dir / "oof_samples.jsonl", samples_text(cv.samples));
            }
        } else if (*compare_cmd) {
            if (!c_manifest.empty()) {
                const auto entries = read_manifest(c_manifest);
                std::vector<ComparisonResult> family;
                for (const auto& e : entries) {
                    family.push_back(paired_ttest(load_samples(e.a.string()), load_samples(e.b.string())));
                }
                bh_adjust(family);
                json out = json::array();
                std::ostringstream csv, table;
                csv << "name,n_pairs,mean_diff,t_stat,df,p_value,p_adjusted,significant\n";
                char buf[256];
                std::snprintf(buf, sizeof buf, "%-24s %8s %12s %10s %10s %10s  %s\n", "comparison", "pairs", "mean_diff",
                              "t", "p", "p_adj", "sig");
                table << buf;
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    const auto& r = family[i];
                    const bool sig = r.p_adjusted < c_alpha;
                    json j = to_json(r);
                    j["name"] = entries[i].name;
                    j["significant"] = sig;
                    out.push_back(j);
                    std::snprintf(buf, sizeof buf, "%s,%zu,%.10g,%.10g,%zu,%.10g,%.10g,%s\n", entries[i].name.c_str(),
                                  r.n_pairs, r.mean_diff, r.t_stat, r.df, r.p_value, r.p_adjusted, sig ? "yes" : "no");
                    csv << buf;
                    std::snprintf(buf, sizeof buf, "%-24s %8zu %12.6f %10.4f %10.4g %10.4g  %s\n", entries[i].name.c_str(),
                                  r.n_pairs, r.mean_diff, r.t_stat, r.p_value, r.p_adjusted, sig ? "*" : "");
                    table << buf;
                }
                emit(c_out, json{{"alpha", c_alpha}, {"comparisons", out}}.dump(2) + "\n");
                if (!c_csv.empty()) write_text_file(c_csv, csv.str());
                std::cerr << table.str();
            } else {
                if (c_a.empty() || c_b.empty()) throw std::invalid_argument("give --a and --b, or --manifest");
                auto r = paired_ttest(load_samples(c_a), load_samples(c_b));
                json j = to_json(r);
                j["alpha"] = c_alpha;
                j["significant"] = r.p_adjusted < c_alpha;
                emit(c_out, j.dump(2) + "\n");
            }
        } else if (*sim_cmd) {
            const json spec_json = read_json_file(g_spec);
            const auto generated = generate(generator_spec_from_json(spec_json));
            std::ostringstream os;
            write_records(os, generated.corpus);
            write_text_file(g_out, os.str());
            json truth = generated.truth;
            if (spec_json.contains("ratings")) {
                if (g_ratings.empty()) throw std::invalid_argument("spec has a 'ratings' section; give --ratings-out");
                const auto ratings = generate_ratings(rating_generator_spec_from_json(spec_json["ratings"]));
                std::ostringstream rs;
                write_ratings(rs, ratings.ratings);
                write_text_file(g_ratings, rs.str());
                truth["ratings"] = ratings.truth;
            }
            write_text_file(g_truth, truth.dump(2) + "\n");
        } else if (*plot_cmd) {
            for (const auto& p : render_summary(read_json_file(p_summary), p_out_dir)) std::cout << p.string() << '\n';
        } else if (*report_cmd) {
            RunConfig config = load_run_config(rp_config);
            if (!rp_out_dir.empty()) config.output_dir = rp_out_dir;
            const auto result = run_pipeline(config);
            std::ifstream table(config.output_dir / "table.txt");
            std::cout << table.rdbuf();
        }
    } catch (const std::exception& e) {
        std::cerr << "sumcal " << which << ": error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
