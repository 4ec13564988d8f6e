#include <doctest.h>

#include <random>

#include "pvar/lrv.hpp"

using namespace pvar;

namespace {

Matrix iid_sample(int q, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix w(q, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < q; ++i) w(i, j) = normal(rng);
    return w;
}

// Scalar MA(1) with unit innovations: w_n = u_n + u_{n-1}; true LRV = 4.
Matrix ma1_sample(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix w(1, n);
    double prev = normal(rng);
    for (int j = 0; j < n; ++j) {
        const double cur = normal(rng);
        w(0, j) = cur + prev;
        prev = cur;
    }
    return w;
}

Matrix sample_cov(const Matrix& w) {
    Matrix c = w;
    c.colwise() -= Vector(w.rowwise().mean());
    return Matrix((c * c.transpose()) / static_cast<double>(w.cols()));
}

}  // namespace

TEST_SUITE_BEGIN("lrv");

TEST_CASE("iid data: the long-run variance is the covariance") {
    std::mt19937_64 rng(401);
    Matrix w = iid_sample(4, 5000, rng);
    Matrix shift(4, 1);
    shift << 1.0, -2.0, 0.5, 3.0;
    w.colwise() += Vector(shift);  // translation invariance

    const Matrix truth = Matrix::Identity(4, 4);
    const Matrix sp = var_spectral_lrv(w);
    const Matrix hac = hac_lrv(w);
    CHECK((sp - truth).norm() / truth.norm() < 0.2);
    CHECK((hac - truth).norm() / truth.norm() < 0.25);
}

TEST_CASE("scalar MA(1): both estimators find the long-run variance 4") {
    std::mt19937_64 rng(402);
    const Matrix w = ma1_sample(5000, rng);
    const double sp = var_spectral_lrv(w)(0, 0);
    const double hac = hac_lrv(w)(0, 0);
    CHECK(std::abs(sp - 4.0) < 1.0);
    CHECK(std::abs(hac - 4.0) < 1.0);
}

TEST_CASE("quadratic homogeneity") {
    std::mt19937_64 rng(403);
    const Matrix w = iid_sample(3, 400, rng);
    const Matrix base_sp = var_spectral_lrv(w);
    const Matrix base_hac = hac_lrv(w);
    const Matrix scaled_sp = var_spectral_lrv(Matrix(2.0 * w));
    const Matrix scaled_hac = hac_lrv(Matrix(2.0 * w));
    CHECK((scaled_sp - 4.0 * base_sp).norm() < 1e-10 * base_sp.norm());
    CHECK((scaled_hac - 4.0 * base_hac).norm() < 1e-10 * base_hac.norm());
}

TEST_CASE("bandwidth zero reduces HAC to the sample covariance") {
    std::mt19937_64 rng(404);
    const Matrix w = iid_sample(3, 200, rng);
    LrvConfig cfg;
    cfg.bandwidth = 0;
    CHECK((hac_lrv(w, cfg) - sample_cov(w)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fixed order zero reduces the VAR estimator to the sample covariance") {
    std::mt19937_64 rng(405);
    const Matrix w = iid_sample(2, 300, rng);
    LrvConfig cfg;
    cfg.order = 0;
    CHECK((var_spectral_lrv(w, cfg) - sample_cov(w)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("outputs are positive semidefinite") {
    std::mt19937_64 rng(406);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix w = ma1_sample(150, rng);
        Matrix stacked(3, 150);
        stacked.row(0) = w.row(0);
        stacked.row(1) = w.row(0);  // perfectly collinear rows
        stacked.row(2) = iid_sample(1, 150, rng).row(0);
        for (const Matrix& xi : {var_spectral_lrv(stacked), hac_lrv(stacked)}) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(xi);
            CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        }
    }
}

TEST_CASE("insufficient samples are rejected") {
    std::mt19937_64 rng(407);
    const Matrix w = iid_sample(4, 12, rng);
    LrvConfig cfg;
    cfg.max_order = 5;
    CHECK_THROWS_AS(var_spectral_lrv(w, cfg), InsufficientSample);
    LrvConfig hac_cfg;
    hac_cfg.bandwidth = 20;
    CHECK_THROWS_AS(hac_lrv(w, hac_cfg), InsufficientSample);
}

TEST_CASE("near-unit-root auxiliary VAR falls back to HAC through the dispatcher") {
    // A random walk drives A(1) toward singularity; long_run_variance must still
    // return something PSD by falling back.
    std::mt19937_64 rng(408);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix w(1, 2000);
    double acc = 0.0;
    for (int j = 0; j < 2000; ++j) {
        acc += normal(rng);
        w(0, j) = acc;
    }
    LrvConfig cfg;
    cfg.order = 1;
    const Matrix xi = long_run_variance(w, cfg);
    CHECK(xi(0, 0) >= 0.0);
}

TEST_SUITE_END();
