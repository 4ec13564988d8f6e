#include <doctest.h>

#include "pvar/montecarlo.hpp"
#include "pvar/serialize.hpp"

using namespace pvar;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.dgp = Dgp::Dgp1;
    cfg.noise = NoiseKind::StrongGaussian;
    cfg.years_list = {60};
    cfg.replications = 8;
    cfg.lags = {1, 2};
    cfg.tests = {TestKind::Q1, TestKind::Q3};
    cfg.alphas = {0.05};
    cfg.fitted_order = 1;
    cfg.seed = 99;
    cfg.include_global = false;
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("montecarlo");

TEST_CASE("the catalog reproduces the published parameter tables") {
    const PvarModel dgp1 = dgp_catalog(Dgp::Dgp1);
    CHECK(is_causal(dgp1).causal);
    CHECK(dgp1.coeff(1, 1)(0, 0) == 0.50);
    CHECK(dgp1.coeff(3, 1)(0, 0) == -0.80);
    CHECK(dgp1.coeff(4, 1)(1, 0) == 0.90);
    CHECK(dgp1.sigma_eps[0](0, 1) == 0.5);
    CHECK(dgp1.sigma_eps[3](0, 1) == 0.1);

    const PvarModel dgp2 = dgp_catalog(Dgp::Dgp2);
    CHECK(is_causal(dgp2).causal);
    for (int nu = 1; nu <= 4; ++nu) {
        REQUIRE(dgp2.spec.constraints[nu - 1].has_value());
        CHECK(dgp2.spec.constraints[nu - 1]->R.cols() == 2);  // two free parameters
        CHECK(dgp2.coeff(nu, 1)(0, 1) == 0.0);
        CHECK(dgp2.coeff(nu, 1)(1, 0) == 0.0);
    }
    CHECK(dgp2.coeff(1, 1)(0, 0) == 0.95);
    CHECK(dgp2.coeff(4, 1)(1, 1) == -0.95);

    const PvarModel dgp3 = dgp_catalog(Dgp::Dgp3);
    CHECK(dgp3.spec.max_order() == 2);
    CHECK(is_causal(dgp3).causal);
    CHECK(dgp3.coeff(1, 2)(0, 1) == 0.60);

    const PvarModel power = dgp_catalog(Dgp::PowerPvar2);
    CHECK(power.spec.max_order() == 2);
    CHECK(is_causal(power).causal);
    CHECK(power.coeff(1, 1)(0, 0) == 0.50);    // shares the DGP1 first-lag block
    CHECK(power.coeff(2, 2)(1, 1) == -0.30);
    CHECK((power.sigma_eps[0] - Matrix::Identity(2, 2)).norm() == 0.0);

    CHECK_THROWS_AS(dgp_catalog("dgp9"), UnknownDgp);
}

TEST_CASE("runs are deterministic for any worker count") {
    ExperimentConfig cfg = tiny_config();
    cfg.workers = 1;
    const RejectionTable serial = run_size(cfg);
    cfg.workers = 3;
    const RejectionTable parallel = run_size(cfg);

    REQUIRE(serial.cells.size() == parallel.cells.size());
    auto it1 = serial.cells.begin();
    auto it2 = parallel.cells.begin();
    for (; it1 != serial.cells.end(); ++it1, ++it2) {
        CHECK(it1->second.rejections == it2->second.rejections);
        CHECK(it1->second.valid == it2->second.valid);
    }
    CHECK(serial.failures == parallel.failures);
}

TEST_CASE("rejection cells are well-formed") {
    const RejectionTable table = run_size(tiny_config());
    CHECK_FALSE(table.cells.empty());
    for (const auto& [key, cell] : table.cells) {
        CHECK(cell.valid <= table.replications);
        CHECK(cell.frequency >= 0.0);
        CHECK(cell.frequency <= 1.0);
        CHECK(cell.wilson_low <= cell.frequency + 1e-12);
        CHECK(cell.wilson_high >= cell.frequency - 1e-12);
        if (key.test == TestKind::Q1 && key.max_lag == 1) {
            // M <= p: the chi-squared test is not applicable, so no cell at all.
            FAIL_CHECK("Q1 cell should be absent at M = 1 for a PVAR(1) fit");
        }
    }
}

TEST_CASE("power runs must underfit and size runs must not") {
    ExperimentConfig cfg = tiny_config();
    cfg.dgp = Dgp::PowerPvar2;
    cfg.noise = NoiseKind::WeakProduct;
    cfg.fitted_order = 2;
    CHECK_THROWS_AS(run_power(cfg), Error);
    cfg.fitted_order = 1;
    CHECK_THROWS_AS(run_size(cfg), Error);
    cfg.replications = 4;
    cfg.lags = {2};
    cfg.tests = {TestKind::Q3};
    const RejectionTable table = run_power(cfg);
    CHECK_FALSE(table.cells.empty());
}

TEST_CASE("experiment config round trips through json") {
    ExperimentConfig cfg = tiny_config();
    cfg.lrv.method = LrvConfig::Method::HacBartlett;
    cfg.lrv.bandwidth = 7;
    cfg.fit_constrained = false;
    const Json j = experiment_to_json(cfg);
    const ExperimentConfig back = experiment_from_json(j);
    CHECK(back.dgp == cfg.dgp);
    CHECK(back.years_list == cfg.years_list);
    CHECK(back.replications == cfg.replications);
    CHECK(back.lags == cfg.lags);
    CHECK(back.tests == cfg.tests);
    CHECK(back.alphas == cfg.alphas);
    CHECK(back.seed == cfg.seed);
    CHECK(back.lrv.method == cfg.lrv.method);
    CHECK(back.lrv.bandwidth == cfg.lrv.bandwidth);
    CHECK(back.fit_constrained == cfg.fit_constrained);
    CHECK(back.include_global == cfg.include_global);
}

TEST_SUITE_END();
