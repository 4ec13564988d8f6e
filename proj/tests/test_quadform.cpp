#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <random>

#include "pvar/quadform.hpp"

using namespace pvar;

namespace {

double chi2_tail(int df, double x) {
    boost::math::chi_squared dist(df);
    return boost::math::cdf(boost::math::complement(dist, x));
}

double chi2_quantile(int df, double p) {
    boost::math::chi_squared dist(df);
    return boost::math::quantile(dist, p);
}

}  // namespace

TEST_SUITE_BEGIN("quadform");

TEST_CASE("equal weights reduce to the chi-squared law") {
    for (int m : {1, 4, 12, 40}) {
        const WeightedChiSq dist(Vector::Ones(m));
        for (double level : {0.5, 0.9, 0.95, 0.99}) {
            const double x = chi2_quantile(m, level);
            const auto p = survival(dist, x);
            CHECK(p.converged);
            CHECK(std::abs(p.value - (1.0 - level)) < 1e-5);
        }
    }
}

TEST_CASE("chi-squared(1) at the 5% critical value") {
    const WeightedChiSq dist(Vector::Ones(1));
    CHECK(std::abs(survival(dist, 3.841459).value - 0.05) < 1e-4);
}

TEST_CASE("nonpositive threshold gives probability one") {
    Vector w(3);
    w << 1.0, 2.0, 3.0;
    const WeightedChiSq dist(w);
    CHECK(survival(dist, 0.0).value == 1.0);
    CHECK(survival(dist, -5.0).value == 1.0);
    CHECK(mc_survival(dist, 0.0, 1000, 7) == 1.0);
}

TEST_CASE("scaling identity for a single weight") {
    for (double c : {0.5, 2.0, 10.0}) {
        const WeightedChiSq dist(Vector::Constant(1, c));
        for (double x : {1.0, 3.0, 7.5}) {
            const double expected = chi2_tail(1, x / c);
            CHECK(std::abs(survival(dist, x).value - expected) < 1e-5);
        }
    }
}

TEST_CASE("monte carlo oracle agrees on random weight vectors") {
    std::mt19937_64 rng(20240805);
    std::uniform_real_distribution<double> unif(0.05, 2.0);
    std::uniform_int_distribution<int> len(1, 40);
    for (int trial = 0; trial < 6; ++trial) {
        Vector w(len(rng));
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = unif(rng);
        const WeightedChiSq dist(w);
        const double x = 1.1 * w.sum();
        const double exact = survival(dist, x).value;
        const double mc = mc_survival(dist, x, 200000, 991 + trial);
        CHECK(std::abs(exact - mc) < 0.005);
    }
}

TEST_CASE("survival is monotone nonincreasing and bounded") {
    Vector w(5);
    w << 0.3, 0.9, 1.4, 0.05, 1.9;
    const WeightedChiSq dist(w);
    double last = 1.0;
    for (double x = 0.0; x <= 25.0; x += 0.5) {
        const double p = survival(dist, x).value;
        CHECK(p >= 0.0);
        CHECK(p <= last + 1e-9);
        last = p;
    }
}

TEST_CASE("the mean is an interior point of the distribution") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unif(0.01, 2.0);
    for (int m : {1, 3, 17, 40}) {
        Vector w(m);
        for (int i = 0; i < m; ++i) w(i) = unif(rng);
        const WeightedChiSq dist(w);
        const double p = survival(dist, dist.sum()).value;
        CHECK(p > 0.15);
        CHECK(p < 0.65);
    }
}

TEST_CASE("construction clips negative and drops negligible weights") {
    Vector w(4);
    w << 1.0, -0.3, 1e-20, 0.5;
    const WeightedChiSq dist(w);
    CHECK(dist.clipped_count() == 1);
    CHECK(dist.weights().size() == 2);

    Vector bad(2);
    bad << -1.0, -2.0;
    CHECK_THROWS_AS(WeightedChiSq{bad}, EmptyWeights);
    CHECK_THROWS_AS(WeightedChiSq{Vector{}}, EmptyWeights);
}

TEST_SUITE_END();
