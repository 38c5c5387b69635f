#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "sumcal/rng.hpp"
#include "sumcal/stats.hpp"

using namespace sumcal;

namespace {

double boost_two_sided(double t, double df) {
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

TEST_CASE("incomplete beta agrees with Boost") {
    Rng rng(2);
    for (int i = 0; i < 300; ++i) {
        const double a = 0.1 + rng.uniform() * 40;
        const double b = 0.1 + rng.uniform() * 40;
        const double x = rng.uniform();
        CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
    }
    CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("two-sided t p-values") {
    // scipy.stats.t.sf(|t|, df) * 2
    CHECK(student_t_two_sided_p(2.5, 10) == doctest::Approx(0.031446844236608776).epsilon(1e-12));
    CHECK(student_t_two_sided_p(0.3, 1) == doctest::Approx(0.8144528418445154).epsilon(1e-12));
    CHECK(student_t_two_sided_p(10, 3) == doctest::Approx(0.0021283990584141494).epsilon(1e-12));
    CHECK(student_t_two_sided_p(0.0, 7) == 1.0);
    CHECK(student_t_two_sided_p(std::numeric_limits<double>::infinity(), 7) == 0.0);

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(-8, 8);
        const double df = 1 + static_cast<double>(rng.below(200));
        const double p = student_t_two_sided_p(t, df);
        CHECK(p == doctest::Approx(boost_two_sided(t, df)).epsilon(1e-9));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("paired t-test") {
    SUBCASE("identical treatments") {
        const std::vector<double> a{0.1, 0.5, 0.9};
        const auto r = paired_ttest(a, a);
        CHECK(r.t_stat == 0.0);
        CHECK(r.p_value == 1.0);
        CHECK(r.mean_diff == 0.0);
    }
    SUBCASE("zero variance, nonzero mean") {
        const std::vector<double> a{2, 3, 4}, b{1, 2, 3};
        const auto r = paired_ttest(a, b);
        CHECK(r.p_value == 0.0);
        CHECK(std::isinf(r.t_stat));
        CHECK(to_json(r)["t_stat"] == "inf");
    }
    SUBCASE("five differences, reference from scipy.stats.ttest_rel") {
        const std::vector<double> a{0.1, -0.2, 0.3, 0.2, 0.1}, b(5, 0.0);
        const auto r = paired_ttest(a, b);
        CHECK(r.n_pairs == 5);
        CHECK(r.df == 4);
        CHECK(r.mean_diff == doctest::Approx(0.1));
        CHECK(r.t_stat == doctest::Approx(1.1952286093343936).epsilon(1e-12));
        CHECK(r.p_value == doctest::Approx(0.2980148117312104).epsilon(1e-10));
        CHECK(r.p_value == doctest::Approx(boost_two_sided(r.t_stat, 4)).epsilon(1e-12));
    }
    SUBCASE("errors") {
        const std::vector<double> a{1, 2, 3}, b{1, 2};
        CHECK_THROWS(paired_ttest(a, b));
        const std::vector<double> one{1};
        CHECK_THROWS(paired_ttest(one, one));
    }
    SUBCASE("sign flips with the order of treatments") {
        Rng rng(6);
        std::vector<double> a(30), b(30);
        for (std::size_t i = 0; i < 30; ++i) {
            a[i] = rng.uniform();
            b[i] = rng.uniform();
        }
        const auto ab = paired_ttest(a, b), ba = paired_ttest(b, a);
        CHECK(ab.t_stat == doctest::Approx(-ba.t_stat));
        CHECK(ab.p_value == doctest::Approx(ba.p_value));
    }
}

TEST_CASE("paired t-test on samples joins by id") {
    const std::vector<LabeledSample> a{{"x", "r", 0.9, 1}, {"y", "r", 0.2, 0}, {"z", "r", 0.6, 1}};
    const std::vector<LabeledSample> b{{"z", "r", 0.5, 1}, {"x", "r", 0.7, 1}, {"y", "r", 0.1, 0}};
    const auto r = paired_ttest(a, b);
    CHECK(r.n_pairs == 3);
    const double d[] = {0.01 - 0.09, 0.04 - 0.01, 0.16 - 0.25};
    CHECK(r.mean_diff == doctest::Approx((d[0] + d[1] + d[2]) / 3));

    auto missing = b;
    missing.pop_back();
    CHECK_THROWS(paired_ttest(a, missing));
    auto flipped = b;
    flipped[0].outcome = 0;
    CHECK_THROWS(paired_ttest(a, flipped));
}

TEST_CASE("Benjamini-Hochberg") {
    const std::vector<double> hand{0.005, 0.01, 0.03, 0.04};
    const auto adj = bh_adjust(hand);
    CHECK(adj == std::vector<double>{0.02, 0.02, 0.04, 0.04});

    // statsmodels multipletests(method="fdr_bh")
    const std::vector<double> six{0.04, 0.005, 0.03, 0.01, 0.5, 0.2};
    const std::vector<double> ref{0.06, 0.03, 0.06, 0.03, 0.5, 0.24};
    const auto got = bh_adjust(six);
    for (std::size_t i = 0; i < six.size(); ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-14));

    const std::vector<double> single{0.3};
    CHECK(bh_adjust(single) == single);
    const std::vector<double> ones(5, 1.0);
    CHECK(bh_adjust(ones) == ones);
    CHECK(bh_adjust(std::vector<double>{}).empty());
}

TEST_CASE("Benjamini-Hochberg properties") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = 1 + rng.below(30);
        std::vector<double> p(m);
        for (auto& x : p) x = rng.uniform() * rng.uniform();
        const auto adj = bh_adjust(p);

        std::vector<std::size_t> order(m);
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(adj[i] >= p[i]);
            CHECK(adj[i] <= 1.0);
        }
        for (std::size_t i = 1; i < m; ++i) CHECK(adj[order[i]] >= adj[order[i - 1]]);

        // equivariant under permutation
        auto perm = order;
        rng.shuffle(perm);
        std::vector<double> pp(m);
        for (std::size_t i = 0; i < m; ++i) pp[i] = p[perm[i]];
        const auto adj_perm = bh_adjust(pp);
        for (std::size_t i = 0; i < m; ++i) CHECK(adj_perm[i] == adj[perm[i]]);
    }
}

TEST_CASE("family adjustment fills p_adjusted") {
    std::vector<ComparisonResult> fam(4);
    const double p[] = {0.005, 0.01, 0.03, 0.04};
    for (std::size_t i = 0; i < 4; ++i) fam[i].p_value = p[i];
    bh_adjust(fam);
    CHECK(fam[0].p_adjusted == 0.02);
    CHECK(fam[3].p_adjusted == 0.04);
    CHECK(fam[3].p_value == 0.04);
}
