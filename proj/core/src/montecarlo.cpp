#include "pvar/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "pvar/quadform.hpp"

namespace pvar {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t master, int years, int replication) {
    std::uint64_t x = splitmix64(master);
    x = splitmix64(x ^ static_cast<std::uint64_t>(years));
    return splitmix64(x ^ static_cast<std::uint64_t>(replication));
}

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix mat2(double a11, double a12, double a21, double a22) {
    Matrix m(2, 2);
    m << a11, a12, a21, a22;
    return m;
}

std::vector<Matrix> table4_covariances() {
    std::vector<Matrix> sigma;
    for (double off : {0.5, 0.3, 0.2, 0.1}) sigma.push_back(mat2(1.0, off, off, 1.0));
    return sigma;
}

std::vector<Matrix> dgp1_phi() {
    return {mat2(0.50, 0.30, 0.10, 0.20), mat2(0.42, 0.24, -0.20, 0.50),
            mat2(-0.80, 0.20, 0.60, 0.70), mat2(-0.30, 0.50, 0.90, -0.20)};
}

// Zero restrictions keeping the two diagonal entries of a 2x2 coefficient free.
SeasonConstraint diagonal_constraint() {
    Matrix r = Matrix::Zero(4, 2);
    r(0, 0) = 1.0;  // Phi(1,1)
    r(3, 1) = 1.0;  // Phi(2,2)
    return {r, Vector::Zero(4)};
}

struct Workload {
    int years = 0;
    int replication = 0;
};

struct CellValue {
    double p = std::numeric_limits<double>::quiet_NaN();  // NaN = not applicable
};

// p-values of one replication, ordered (test, M, season/global) with season 0 global.
struct RepOutcome {
    bool failed = false;
    std::map<std::tuple<TestKind, int, int>, double> p;
};

int worker_count(const ExperimentConfig& cfg) {
    int n = cfg.workers > 0 ? cfg.workers
                            : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("PVAR_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return n;
}

RejectionCell make_cell(int rejections, int valid) {
    RejectionCell cell;
    cell.rejections = rejections;
    cell.valid = valid;
    cell.frequency = valid > 0 ? static_cast<double>(rejections) / valid : 0.0;
    const double z = 1.959963984540054;
    if (valid > 0) {
        const double n = valid;
        const double ph = cell.frequency;
        const double denom = 1.0 + z * z / n;
        const double center = (ph + z * z / (2.0 * n)) / denom;
        const double half =
            z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n)) / denom;
        cell.wilson_low = std::max(0.0, center - half);
        cell.wilson_high = std::min(1.0, center + half);
    }
    return cell;
}

RepOutcome run_replication(const ExperimentConfig& cfg, const PvarModel& model,
                           int years, int replication, bool power) {
    RepOutcome out;
    try {
        const std::uint64_t seed = stream_seed(cfg.seed, years, replication);
        const SeriesData data =
            simulate(model, years, cfg.noise, cfg.burn_in_years, seed);

        PvarSpec fit_spec =
            PvarSpec::unconstrained(model.spec.seasons, model.spec.dim, cfg.fitted_order);
        const bool constrained =
            cfg.fit_constrained.value_or(!power && model.spec.constrained());
        if (constrained) {
            fit_spec.constraints = model.spec.constraints;
            fit_spec.validate();
        }
        const FitResult fit = constrained ? fit_constrained(data, fit_spec)
                                          : fit_ols(data, fit_spec);

        const int max_m = *std::max_element(cfg.lags.begin(), cfg.lags.end());
        const LagCovSet lagcov = lag_covariances(fit.residuals, max_m);

        const bool want_q2 = std::find(cfg.tests.begin(), cfg.tests.end(), TestKind::Q2) !=
                             cfg.tests.end();
        const bool want_q3 = std::find(cfg.tests.begin(), cfg.tests.end(), TestKind::Q3) !=
                             cfg.tests.end();
        const bool want_q1 = std::find(cfg.tests.begin(), cfg.tests.end(), TestKind::Q1) !=
                             cfg.tests.end();
        const CovMode strong_mode = constrained ? CovMode::StrongR : CovMode::StrongU;
        const CovMode weak_mode = constrained ? CovMode::WeakR : CovMode::WeakU;

        for (int m : cfg.lags) {
            const PortmanteauStats q_star = portmanteau(lagcov, m, true);
            std::optional<AsymptoticCov> acov_strong, acov_weak;
            if (want_q2)
                acov_strong =
                    asymptotic_cov(fit, m, strong_mode, cfg.lrv, cfg.include_global);
            if (want_q3)
                acov_weak = asymptotic_cov(fit, m, weak_mode, cfg.lrv, cfg.include_global);

            for (int nu = 1; nu <= model.spec.seasons; ++nu) {
                const double q = q_star.q[nu - 1];
                if (want_q1) {
                    // The standard chi-squared test; not applicable for M <= p(nu).
                    double p = std::numeric_limits<double>::quiet_NaN();
                    if (m > fit_spec.order[nu - 1]) {
                        const int d = fit_spec.dim;
                        const int df =
                            constrained
                                ? d * d * m -
                                      static_cast<int>(fit_spec.constraints[nu - 1]->R.cols())
                                : d * d * (m - fit_spec.order[nu - 1]);
                        if (df > 0) p = chi_squared_survival(df, q);
                    }
                    out.p[{TestKind::Q1, m, nu}] = p;
                }
                if (want_q2)
                    out.p[{TestKind::Q2, m, nu}] =
                        survival(WeightedChiSq(acov_strong->eigenvalues[nu - 1]), q).value;
                if (want_q3)
                    out.p[{TestKind::Q3, m, nu}] =
                        survival(WeightedChiSq(acov_weak->eigenvalues[nu - 1]), q).value;
            }
            if (cfg.include_global) {
                const double qg = q_star.q_global;
                if (want_q1) {
                    double p = std::numeric_limits<double>::quiet_NaN();
                    int df = 0;
                    bool ok = true;
                    for (int nu = 1; nu <= model.spec.seasons; ++nu) {
                        if (m <= fit_spec.order[nu - 1]) {
                            ok = false;
                            break;
                        }
                        df += constrained
                                  ? fit_spec.dim * fit_spec.dim * m -
                                        static_cast<int>(
                                            fit_spec.constraints[nu - 1]->R.cols())
                                  : fit_spec.dim * fit_spec.dim *
                                        (m - fit_spec.order[nu - 1]);
                    }
                    if (ok && df > 0) p = chi_squared_survival(df, qg);
                    out.p[{TestKind::Q1, m, 0}] = p;
                }
                if (want_q2)
                    out.p[{TestKind::Q2, m, 0}] =
                        survival(WeightedChiSq(*acov_strong->eigenvalues_global), qg).value;
                if (want_q3)
                    out.p[{TestKind::Q3, m, 0}] =
                        survival(WeightedChiSq(*acov_weak->eigenvalues_global), qg).value;
            }
        }
    } catch (const Error&) {
        out.failed = true;
    }
    return out;
}

}  // namespace

PvarModel dgp_catalog(Dgp which) {
    PvarModel model;
    switch (which) {
        case Dgp::Dgp1: {
            model.spec = PvarSpec::unconstrained(4, 2, 1);
            for (const auto& phi : dgp1_phi()) model.phi.push_back({phi});
            model.sigma_eps = table4_covariances();
            break;
        }
        case Dgp::Dgp2: {
            model.spec = PvarSpec::unconstrained(4, 2, 1);
            model.spec.constraints.assign(4, diagonal_constraint());
            model.spec.validate();
            model.phi.push_back({diag2(0.95, 0.90)});
            model.phi.push_back({diag2(-0.90, 0.95)});
            model.phi.push_back({diag2(-0.85, 0.90)});
            model.phi.push_back({diag2(-0.95, -0.95)});
            model.sigma_eps = table4_covariances();
            break;
        }
        case Dgp::Dgp3: {
            model.spec = PvarSpec::unconstrained(4, 2, 2);
            model.phi.push_back({mat2(0.60, 0.30, 0.60, 0.20), mat2(0.40, 0.60, -0.20, 0.50)});
            model.phi.push_back({mat2(-0.30, 0.40, 0.20, 0.40), mat2(-0.30, 0.30, 0.30, -0.40)});
            model.phi.push_back({mat2(0.30, 0.30, 0.30, 0.20), mat2(0.20, 0.50, -0.30, -0.30)});
            model.phi.push_back({mat2(-0.40, -0.40, 0.30, -0.40), mat2(0.30, 0.50, 0.50, 0.30)});
            model.sigma_eps = table4_covariances();
            break;
        }
        case Dgp::PowerPvar2: {
            model.spec = PvarSpec::unconstrained(4, 2, 2);
            const auto phi1 = dgp1_phi();
            const std::vector<Matrix> phi2 = {diag2(0.30, 0.20), diag2(0.20, -0.30),
                                              diag2(-0.30, 0.20), diag2(-0.30, -0.20)};
            for (int nu = 0; nu < 4; ++nu) model.phi.push_back({phi1[nu], phi2[nu]});
            model.sigma_eps.assign(4, Matrix::Identity(2, 2));
            break;
        }
    }
    model.validate();
    return model;
}

PvarModel dgp_catalog(const std::string& name) {
    if (name == "dgp1") return dgp_catalog(Dgp::Dgp1);
    if (name == "dgp2") return dgp_catalog(Dgp::Dgp2);
    if (name == "dgp3") return dgp_catalog(Dgp::Dgp3);
    if (name == "power-pvar2") return dgp_catalog(Dgp::PowerPvar2);
    throw UnknownDgp("unknown DGP: " + name);
}

std::string dgp_name(Dgp which) {
    switch (which) {
        case Dgp::Dgp1: return "dgp1";
        case Dgp::Dgp2: return "dgp2";
        case Dgp::Dgp3: return "dgp3";
        case Dgp::PowerPvar2: return "power-pvar2";
    }
    return "?";
}

std::string test_name(TestKind kind) {
    switch (kind) {
        case TestKind::Q1: return "Q1";
        case TestKind::Q2: return "Q2";
        case TestKind::Q3: return "Q3";
    }
    return "?";
}

const PvarModel& ExperimentConfig::model() const {
    static thread_local PvarModel cached;
    if (custom_model.has_value()) return *custom_model;
    if (!dgp.has_value()) throw Error("experiment config names no model");
    cached = dgp_catalog(*dgp);
    return cached;
}

void ExperimentConfig::validate() const {
    if (replications < 1) throw Error("replications must be >= 1");
    if (years_list.empty() || lags.empty() || tests.empty() || alphas.empty())
        throw Error("years, lags, tests and alphas must be nonempty");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw Error("alphas must lie in (0,1)");
    if (fitted_order < 0) throw Error("fitted order must be nonnegative");
    model().validate();
}

static RejectionTable run_experiment(const ExperimentConfig& cfg, bool power) {
    cfg.validate();
    const PvarModel model = cfg.model();
    if (power && cfg.fitted_order >= model.spec.max_order())
        throw Error("power experiments must underfit the generating order");
    if (!power && cfg.fitted_order != model.spec.max_order())
        throw Error("size experiments fit the true order");

    RejectionTable table;
    table.replications = cfg.replications;

    for (int years : cfg.years_list) {
        std::vector<RepOutcome> outcomes(cfg.replications);
        std::atomic<int> next{0};
        const int workers = std::min(worker_count(cfg), cfg.replications);
        auto worker = [&]() {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= cfg.replications) return;
                outcomes[r] = run_replication(cfg, model, years, r, power);
            }
        };
        std::vector<std::thread> pool;
        for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        int failed = 0;
        for (const auto& o : outcomes)
            if (o.failed) ++failed;
        table.failures += failed;
        if (failed * 20 > cfg.replications)
            throw Error("more than 5% of replications failed");

        for (TestKind test : cfg.tests) {
            for (int m : cfg.lags) {
                std::vector<int> scopes;
                for (int nu = 1; nu <= model.spec.seasons; ++nu) scopes.push_back(nu);
                if (cfg.include_global) scopes.push_back(0);
                for (int scope : scopes) {
                    for (double alpha : cfg.alphas) {
                        int rejections = 0, valid = 0;
                        for (const auto& o : outcomes) {
                            if (o.failed) continue;
                            const auto it = o.p.find({test, m, scope});
                            if (it == o.p.end() || std::isnan(it->second)) continue;
                            ++valid;
                            if (it->second < alpha) ++rejections;
                        }
                        if (valid == 0) continue;
                        table.cells[{test, years, m, scope, alpha}] =
                            make_cell(rejections, valid);
                    }
                }
            }
        }
    }
    return table;
}

RejectionTable run_size(const ExperimentConfig& config) { return run_experiment(config, false); }

RejectionTable run_power(const ExperimentConfig& config) { return run_experiment(config, true); }

}  // namespace pvar
