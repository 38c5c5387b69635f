#include "sumcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sumcal {

namespace {

// Continued fraction for I_x(a,b); converges fast for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_two_sided_p: df must be positive");
    if (std::isnan(t)) throw std::invalid_argument("student_t_two_sided_p: t is NaN");
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

ComparisonResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_ttest: treatments differ in length");
    if (a.size() < 2) throw std::invalid_argument("paired_ttest: need at least 2 pairs");

    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    ComparisonResult r;
    r.n_pairs = n;
    r.mean_diff = mean;
    r.df = n - 1;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t_stat = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.p_value = 0.0;
        }
    } else {
        r.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
        r.p_value = student_t_two_sided_p(r.t_stat, static_cast<double>(r.df));
    }
    r.p_adjusted = r.p_value;
    return r;
}

ComparisonResult paired_ttest(std::span<const LabeledSample> a, std::span<const LabeledSample> b) {
    std::map<std::string, const LabeledSample*> by_id;
    for (const auto& s : b) {
        if (!by_id.emplace(s.id, &s).second) throw std::invalid_argument("paired_ttest: duplicate id '" + s.id + "' in B");
    }
    if (a.size() != b.size()) throw std::invalid_argument("paired_ttest: unmatched ids (treatment sizes differ)");

    std::map<std::string, std::pair<double, double>> joined;
    for (const auto& s : a) {
        auto it = by_id.find(s.id);
        if (it == by_id.end()) throw std::invalid_argument("paired_ttest: id '" + s.id + "' missing from B");
        if (it->second->outcome != s.outcome) {
            throw std::invalid_argument("paired_ttest: outcome of '" + s.id + "' differs between treatments");
        }
        const double ea = s.confidence - s.outcome;
        const double eb = it->second->confidence - it->second->outcome;
        if (!joined.emplace(s.id, std::pair{ea * ea, eb * eb}).second) {
            throw std::invalid_argument("paired_ttest: duplicate id '" + s.id + "' in A");
        }
    }
    std::vector<double> ea, eb;
    for (const auto& [id, e] : joined) {
        ea.push_back(e.first);
        eb.push_back(e.second);
    }
    return paired_ttest(ea, eb);
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bh_adjust: p-value outside [0,1]");
    }
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });

    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        const std::size_t i = order[rank - 1];
        const double scaled =
            rank == m ? p_values[i] : p_values[i] * static_cast<double>(m) / static_cast<double>(rank);
        running = std::min(running, scaled);
        adjusted[i] = running;
    }
    return adjusted;
}

void bh_adjust(std::span<ComparisonResult> family) {
    std::vector<double> p;
    for (const auto& r : family) p.push_back(r.p_value);
    const auto adj = bh_adjust(p);
    for (std::size_t i = 0; i < family.size(); ++i) family[i].p_adjusted = adj[i];
}

nlohmann::json to_json(const ComparisonResult& r) {
    // t is infinite in the zero-variance case; JSON has no infinity
    nlohmann::json t = std::isfinite(r.t_stat) ? nlohmann::json(r.t_stat)
                                               : nlohmann::json(r.t_stat > 0 ? "inf" : "-inf");
    return {{"n_pairs", r.n_pairs}, {"mean_diff", r.mean_diff}, {"t_stat", t},
            {"df", r.df},           {"p_value", r.p_value},     {"p_adjusted", r.p_adjusted}};
}

}  // namespace sumcal
