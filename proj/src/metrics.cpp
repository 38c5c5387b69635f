#include "sumcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace sumcal {

using nlohmann::json;

namespace {

void require_non_empty(std::span<const LabeledSample> samples, const char* what) {
    if (samples.empty()) throw std::invalid_argument(std::string(what) + ": empty sample set");
}

// Neumaier summation
double compensated_sum(std::span<const double> values) {
    double sum = 0.0, carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

}  // namespace

double success_rate(std::span<const LabeledSample> samples) {
    require_non_empty(samples, "success_rate");
    std::size_t hits = 0;
    for (const auto& s : samples) hits += s.outcome != 0;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<double> squared_errors(std::span<const LabeledSample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const double d = s.confidence - static_cast<double>(s.outcome);
        out.push_back(d * d);
    }
    return out;
}

double brier(std::span<const LabeledSample> samples) {
    require_non_empty(samples, "brier");
    const auto errors = squared_errors(samples);
    return compensated_sum(errors) / static_cast<double>(errors.size());
}

double reference_brier(double base_rate) {
    return base_rate * (1.0 - base_rate);
}

std::optional<double> skill_score(double base_rate, double brier_score) {
    const double ref = reference_brier(base_rate);
    if (!(ref > 0.0)) return std::nullopt;
    return (ref - brier_score) / ref;
}

std::optional<double> skill_score(std::span<const LabeledSample> samples) {
    return skill_score(success_rate(samples), brier(samples));
}

std::size_t bin_index(double confidence, std::size_t n_bins) {
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw std::invalid_argument("confidence " + std::to_string(confidence) + " outside [0,1]");
    }
    const auto i = static_cast<std::size_t>(std::floor(confidence * static_cast<double>(n_bins)));
    return std::min(i, n_bins - 1);
}

std::vector<ReliabilityBin> reliability_bins(std::span<const LabeledSample> samples, std::size_t n_bins) {
    require_non_empty(samples, "reliability_bins");
    if (n_bins == 0) throw std::invalid_argument("reliability_bins: n_bins must be >= 1");

    std::vector<ReliabilityBin> bins(n_bins);
    std::vector<double> conf_sum(n_bins, 0.0);
    std::vector<std::size_t> hits(n_bins, 0);
    for (std::size_t i = 0; i < n_bins; ++i) {
        bins[i].lo = static_cast<double>(i) / static_cast<double>(n_bins);
        bins[i].hi = static_cast<double>(i + 1) / static_cast<double>(n_bins);
    }
    for (const auto& s : samples) {
        const std::size_t b = bin_index(s.confidence, n_bins);
        ++bins[b].count;
        conf_sum[b] += s.confidence;
        hits[b] += s.outcome != 0;
    }
    for (std::size_t i = 0; i < n_bins; ++i) {
        if (bins[i].count == 0) continue;
        const auto c = static_cast<double>(bins[i].count);
        bins[i].mean_confidence = conf_sum[i] / c;
        bins[i].accuracy = static_cast<double>(hits[i]) / c;
    }
    return bins;
}

double ece_from_bins(std::span<const ReliabilityBin> bins) {
    std::size_t total = 0;
    for (const auto& b : bins) total += b.count;
    if (total == 0) throw std::invalid_argument("ece: no samples in bins");
    double sum = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        sum += static_cast<double>(b.count) / static_cast<double>(total) * std::abs(b.accuracy - b.mean_confidence);
    }
    return sum;
}

double ece(std::span<const LabeledSample> samples, std::size_t n_bins) {
    return ece_from_bins(reliability_bins(samples, n_bins));
}

CalibrationReport calibration_report(std::span<const LabeledSample> samples, std::size_t n_bins) {
    CalibrationReport r;
    r.n = samples.size();
    r.success_rate = success_rate(samples);
    r.brier = brier(samples);
    r.ref_brier = reference_brier(r.success_rate);
    r.skill = skill_score(r.success_rate, r.brier);
    r.bins = reliability_bins(samples, n_bins);
    r.ece = ece_from_bins(r.bins);
    return r;
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("spearman: need at least 2 pairs");

    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

json to_json(const LabeledSample& s) {
    return json{{"id", s.id}, {"repo", s.repo}, {"confidence", s.confidence}, {"outcome", s.outcome}};
}

LabeledSample labeled_sample_from_json(const json& j) {
    LabeledSample s;
    s.id = j.at("id").get<std::string>();
    s.repo = j.value("repo", std::string());
    s.confidence = j.at("confidence").get<double>();
    s.outcome = j.at("outcome").get<int>();
    if (!(s.confidence >= 0.0 && s.confidence <= 1.0)) {
        throw std::invalid_argument("sample '" + s.id + "': confidence outside [0,1]");
    }
    if (s.outcome != 0 && s.outcome != 1) {
        throw std::invalid_argument("sample '" + s.id + "': outcome must be 0 or 1");
    }
    return s;
}

json to_json(const ReliabilityBin& b) {
    return json{{"lo", b.lo},
                {"hi", b.hi},
                {"count", b.count},
                {"mean_confidence", b.mean_confidence},
                {"accuracy", b.accuracy}};
}

ReliabilityBin reliability_bin_from_json(const json& j) {
    ReliabilityBin b;
    b.lo = j.at("lo").get<double>();
    b.hi = j.at("hi").get<double>();
    b.count = j.at("count").get<std::size_t>();
    b.mean_confidence = j.at("mean_confidence").get<double>();
    b.accuracy = j.at("accuracy").get<double>();
    return b;
}

json to_json(const CalibrationReport& r) {
    json bins = json::array();
    for (const auto& b : r.bins) bins.push_back(to_json(b));
    return json{{"n", r.n},
                {"success_rate", r.success_rate},
                {"brier", r.brier},
                {"ref_brier", r.ref_brier},
                {"skill", r.skill ? json(*r.skill) : json(nullptr)},
                {"ece", r.ece},
                {"bins", bins}};
}

CalibrationReport calibration_report_from_json(const json& j) {
    CalibrationReport r;
    r.n = j.at("n").get<std::size_t>();
    r.success_rate = j.at("success_rate").get<double>();
    r.brier = j.at("brier").get<double>();
    r.ref_brier = j.at("ref_brier").get<double>();
    if (!j.at("skill").is_null()) r.skill = j.at("skill").get<double>();
    r.ece = j.at("ece").get<double>();
    for (const auto& b : j.at("bins")) r.bins.push_back(reliability_bin_from_json(b));
    return r;
}

std::vector<LabeledSample> read_samples(std::istream& in) {
    std::vector<LabeledSample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(labeled_sample_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("samples line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::vector<LabeledSample> load_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_samples(in);
}

void write_samples(std::ostream& out, std::span<const LabeledSample> samples) {
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

}  // namespace sumcal
