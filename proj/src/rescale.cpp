#include "sumcal/rescale.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "sumcal/rng.hpp"

namespace sumcal {

using nlohmann::json;

FeatureSpace parse_feature_space(std::string_view name) {
    if (name == "raw") return FeatureSpace::raw;
    if (name == "logit") return FeatureSpace::logit;
    throw std::invalid_argument("unknown feature space '" + std::string(name) + "'");
}

std::string to_string(FeatureSpace f) {
    return f == FeatureSpace::raw ? "raw" : "logit";
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double platt_feature(double confidence, FeatureSpace space) {
    if (space == FeatureSpace::raw) return confidence;
    const double x = std::clamp(confidence, kLogitClamp, 1.0 - kLogitClamp);
    return std::log(x / (1.0 - x));
}

namespace {

// log(1 + e^z) without overflow
double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct PenalizedNll {
    std::span<const double> x;
    std::span<const double> y;
    double l2;

    double nll(double a, double b) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = a * x[i] + b;
            s += softplus(z) - y[i] * z;
        }
        return s;
    }

    double value(double a, double b) const { return nll(a, b) + 0.5 * l2 * (a * a + b * b); }
};

}  // namespace

PlattModel fit_platt(std::span<const LabeledSample> train, FeatureSpace space, double l2) {
    if (train.empty()) throw std::invalid_argument("fit_platt: empty training set");
    if (!(l2 >= 0.0)) throw std::invalid_argument("fit_platt: l2 must be non-negative");

    std::vector<double> x, y;
    x.reserve(train.size());
    y.reserve(train.size());
    for (const auto& s : train) {
        x.push_back(platt_feature(s.confidence, space));
        y.push_back(s.outcome ? 1.0 : 0.0);
    }
    const PenalizedNll obj{x, y, l2};

    double a = 0.0, b = 0.0;
    double f = obj.value(a, b);
    int iter = 0;
    for (; iter < 100; ++iter) {
        double ga = l2 * a, gb = l2 * b;
        double haa = l2, hab = 0.0, hbb = l2;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double p = sigmoid(a * x[i] + b);
            const double r = p - y[i];
            const double w = p * (1.0 - p);
            ga += r * x[i];
            gb += r;
            haa += w * x[i] * x[i];
            hab += w * x[i];
            hbb += w;
        }
        if (std::hypot(ga, gb) < 1e-10) break;

        const double det = haa * hbb - hab * hab;
        double da, db;
        if (det > 0.0 && std::isfinite(det)) {
            da = -(hbb * ga - hab * gb) / det;
            db = -(haa * gb - hab * ga) / det;
        } else {
            da = -ga;
            db = -gb;
        }

        // Armijo backtracking
        const double slope = ga * da + gb * db;
        double step = 1.0;
        bool moved = false;
        while (step > 1e-12) {
            const double na = a + step * da, nb = b + step * db;
            const double nf = obj.value(na, nb);
            if (nf <= f + 1e-4 * step * slope) {
                moved = nf < f;
                a = na;
                b = nb;
                f = nf;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }

    PlattModel m;
    m.slope = a;
    m.intercept = b;
    m.feature_space = space;
    m.iterations = iter;
    m.neg_log_likelihood = obj.nll(a, b);
    return m;
}

double apply(const PlattModel& model, double confidence) {
    return sigmoid(model.slope * platt_feature(confidence, model.feature_space) + model.intercept);
}

std::vector<LabeledSample> rescale_samples(const PlattModel& model, std::span<const LabeledSample> samples) {
    std::vector<LabeledSample> out(samples.begin(), samples.end());
    for (auto& s : out) s.confidence = apply(model, s.confidence);
    return out;
}

int FoldAssignment::fold_of(const std::string& repo) const {
    auto it = repo_to_fold.find(repo);
    if (it == repo_to_fold.end()) throw std::out_of_range("repository '" + repo + "' has no fold assignment");
    return it->second;
}

FoldAssignment assign_folds(const std::map<std::string, std::size_t>& repo_sizes, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("assign_folds: k must be >= 2");
    if (repo_sizes.size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("assign_folds: " + std::to_string(repo_sizes.size()) +
                                    " repositories cannot fill " + std::to_string(k) + " folds");
    }

    std::vector<std::string> repos;
    for (const auto& [repo, size] : repo_sizes) repos.push_back(repo);
    Rng rng(seed);
    rng.shuffle(repos);

    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
    for (const auto& repo : repos) {
        const auto fold = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
        load[fold] += repo_sizes.at(repo);
        out.repo_to_fold.emplace(repo, static_cast<int>(fold));
    }
    return out;
}

FoldAssignment assign_folds(const Corpus& corpus, int k, std::uint64_t seed) {
    std::map<std::string, std::size_t> sizes;
    for (const auto& r : corpus.records) ++sizes[r.repo];
    return assign_folds(sizes, k, seed);
}

FoldAssignment assign_folds(std::span<const LabeledSample> samples, int k, std::uint64_t seed) {
    std::map<std::string, std::size_t> sizes;
    for (const auto& s : samples) ++sizes[s.repo];
    return assign_folds(sizes, k, seed);
}

namespace {

std::vector<std::size_t> id_order(std::span<const LabeledSample> samples) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
    return order;
}

std::vector<LabeledSample> subset(std::span<const LabeledSample> samples, std::span<const int> fold_of, int fold,
                                  bool in_fold) {
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if ((fold_of[i] == fold) == in_fold) out.push_back(samples[i]);
    }
    return out;
}

}  // namespace

CrossvalResult crossval_rescale(std::span<const LabeledSample> samples, const FoldAssignment& folds,
                                FeatureSpace space, double l2) {
    std::vector<int> fold_of;
    fold_of.reserve(samples.size());
    for (const auto& s : samples) fold_of.push_back(folds.fold_of(s.repo));

    CrossvalResult result;
    std::vector<LabeledSample> rescaled(samples.begin(), samples.end());
    for (int f = 0; f < folds.k; ++f) {
        const auto train = subset(samples, fold_of, f, false);
        if (train.empty()) throw std::invalid_argument("crossval_rescale: fold " + std::to_string(f) + " has no training samples");
        const PlattModel model = fit_platt(train, space, l2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (fold_of[i] == f) rescaled[i].confidence = apply(model, samples[i].confidence);
        }
        result.models.push_back(model);
    }

    for (std::size_t i : id_order(rescaled)) {
        result.samples.push_back(rescaled[i]);
        result.fold.push_back(fold_of[i]);
    }
    return result;
}

namespace {

bool cutoff_less(const Cutoff& a, const Cutoff& b) {
    if (!a) return false;
    if (!b) return true;
    return *a < *b;
}

}  // namespace

CutoffResult tune_cutoff(const Corpus& corpus, const CorrectnessRule& rule, const FoldAssignment& folds,
                         const ConfidenceSpec& base, std::span<const Cutoff> t_grid, FeatureSpace space, double l2) {
    if (t_grid.empty()) throw std::invalid_argument("tune_cutoff: empty t grid");

    CutoffResult result;
    auto& grid = result.choice.grid;
    grid.assign(t_grid.begin(), t_grid.end());
    for (const auto& t : grid) {
        if (t && *t == 0) throw std::invalid_argument("tune_cutoff: cutoff candidates must be >= 1");
    }
    std::sort(grid.begin(), grid.end(), cutoff_less);
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const std::size_t n = corpus.records.size();
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[i] = folds.fold_of(corpus.records[i].repo);

    // samples per candidate, in corpus order
    std::vector<std::vector<LabeledSample>> by_t;
    for (const auto& t : grid) {
        ConfidenceSpec spec = base;
        spec.cutoff = t;
        by_t.push_back(labeled_samples(corpus, spec, rule));
    }

    std::vector<LabeledSample> rescaled(n);
    for (int f = 0; f < folds.k; ++f) {
        std::optional<std::size_t> best;
        std::optional<double> best_skill;
        std::vector<std::optional<double>> skills;
        std::vector<PlattModel> models;
        for (std::size_t c = 0; c < grid.size(); ++c) {
            const auto train = subset(by_t[c], fold_of, f, false);
            if (train.empty()) {
                throw std::invalid_argument("tune_cutoff: fold " + std::to_string(f) + " has no training samples");
            }
            models.push_back(fit_platt(train, space, l2));
            const auto fitted = rescale_samples(models.back(), train);
            const auto skill = skill_score(fitted);
            skills.push_back(skill);
            // >= so that later (larger) candidates win ties
            if (skill && (!best_skill || *skill >= *best_skill)) {
                best = c;
                best_skill = skill;
            }
        }
        const std::size_t chosen = best.value_or(grid.size() - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] != f) continue;
            rescaled[i] = by_t[chosen][i];
            rescaled[i].confidence = apply(models[chosen], by_t[chosen][i].confidence);
        }
        result.choice.per_fold.push_back(grid[chosen]);
        result.choice.training_skill.push_back(std::move(skills));
        result.out_of_fold.models.push_back(models[chosen]);
    }

    for (std::size_t i : id_order(rescaled)) {
        result.out_of_fold.samples.push_back(rescaled[i]);
        result.out_of_fold.fold.push_back(fold_of[i]);
    }
    return result;
}

std::vector<Cutoff> parse_cutoff_grid(std::string_view text) {
    std::vector<Cutoff> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string_view item = text.substr(pos, comma - pos);
        if (item.empty()) throw std::invalid_argument("empty entry in cutoff grid");
        if (const auto dots = item.find(".."); dots != std::string_view::npos) {
            const Cutoff lo = parse_cutoff(item.substr(0, dots));
            const Cutoff hi = parse_cutoff(item.substr(dots + 2));
            if (!lo || !hi || *lo > *hi) throw std::invalid_argument("bad cutoff range '" + std::string(item) + "'");
            for (std::size_t t = *lo; t <= *hi; ++t) out.push_back(t);
        } else {
            out.push_back(parse_cutoff(item));
        }
        pos = comma + 1;
    }
    return out;
}

json to_json(const PlattModel& m) {
    return json{{"slope", m.slope},
                {"intercept", m.intercept},
                {"feature_space", to_string(m.feature_space)},
                {"iterations", m.iterations},
                {"neg_log_likelihood", m.neg_log_likelihood}};
}

PlattModel platt_model_from_json(const json& j) {
    PlattModel m;
    m.slope = j.at("slope").get<double>();
    m.intercept = j.at("intercept").get<double>();
    m.feature_space = parse_feature_space(j.at("feature_space").get<std::string>());
    m.iterations = j.value("iterations", 0);
    m.neg_log_likelihood = j.value("neg_log_likelihood", 0.0);
    return m;
}

json to_json(const FoldAssignment& f) {
    return json{{"k", f.k}, {"seed", f.seed}, {"repo_to_fold", f.repo_to_fold}};
}

FoldAssignment fold_assignment_from_json(const json& j) {
    FoldAssignment f;
    f.k = j.at("k").get<int>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.repo_to_fold = j.at("repo_to_fold").get<std::map<std::string, int>>();
    return f;
}

json to_json(const CutoffChoice& c) {
    json grid = json::array(), per_fold = json::array(), skill = json::array();
    for (const auto& t : c.grid) grid.push_back(to_string(t));
    for (const auto& t : c.per_fold) per_fold.push_back(to_string(t));
    for (const auto& row : c.training_skill) {
        json r = json::array();
        for (const auto& s : row) r.push_back(s ? json(*s) : json(nullptr));
        skill.push_back(r);
    }
    return json{{"grid", grid}, {"per_fold", per_fold}, {"training_skill", skill}};
}

}  // namespace sumcal
