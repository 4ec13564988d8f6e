#include "pvar/serialize.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pvar {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Json matrix_rows(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_rows(const Json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = j.at(i).at(jj).get<double>();
    return m;
}

// Row-major flat layout used by the model schema.
Json matrix_flat(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

Matrix matrix_from_flat(const Json& j, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<Eigen::Index>(j.size()) != rows * cols)
        throw ParseError("flat matrix has wrong length");
    Matrix m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = j.at(k++).get<double>();
    return m;
}

Json vector_flat(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_flat(const Json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

double normal_two_sided_p(double estimate, double se) {
    if (!(se > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    boost::math::normal normal;
    const double t = std::abs(estimate / se);
    return 2.0 * boost::math::cdf(boost::math::complement(normal, t));
}

Json pvalues_from(const std::vector<Vector>& beta, const std::vector<Vector>& se) {
    Json out = Json::object();
    for (std::size_t nu = 0; nu < beta.size(); ++nu) {
        if (nu >= se.size() || se[nu].size() != beta[nu].size()) continue;
        Json arr = Json::array();
        for (Eigen::Index i = 0; i < beta[nu].size(); ++i)
            arr.push_back(normal_two_sided_p(beta[nu](i), se[nu](i)));
        out[std::to_string(nu + 1)] = std::move(arr);
    }
    return out;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

}  // namespace

Json spec_to_json(const PvarSpec& spec) {
    Json j;
    j["s"] = spec.seasons;
    j["d"] = spec.dim;
    j["p"] = spec.order;
    if (spec.constrained()) {
        Json cons = Json::object();
        for (int nu = 1; nu <= spec.seasons; ++nu) {
            if (!spec.constraints[nu - 1].has_value()) continue;
            const auto& c = *spec.constraints[nu - 1];
            cons[std::to_string(nu)] = {{"R", matrix_rows(c.R)}, {"b", vector_flat(c.b)}};
        }
        j["constraints"] = std::move(cons);
    }
    return j;
}

PvarSpec spec_from_json(const Json& j) {
    PvarSpec spec;
    spec.seasons = j.at("s").get<int>();
    spec.dim = j.at("d").get<int>();
    spec.order = j.at("p").get<std::vector<int>>();
    if (j.contains("constraints") && !j.at("constraints").is_null()) {
        spec.constraints.assign(spec.seasons, std::nullopt);
        for (const auto& [key, val] : j.at("constraints").items()) {
            const int nu = std::stoi(key);
            SeasonConstraint c;
            c.R = matrix_from_rows(val.at("R"));
            c.b = vector_from_flat(val.at("b"));
            spec.constraints[nu - 1] = std::move(c);
        }
    }
    spec.validate();
    return spec;
}

Json model_to_json(const PvarModel& model) {
    Json j = spec_to_json(model.spec);
    Json phi = Json::object();
    for (int nu = 1; nu <= model.spec.seasons; ++nu) {
        Json mats = Json::array();
        for (int k = 1; k <= model.spec.order[nu - 1]; ++k)
            mats.push_back(matrix_flat(model.coeff(nu, k)));
        phi[std::to_string(nu)] = std::move(mats);
    }
    j["phi"] = std::move(phi);
    Json sigma = Json::object();
    Json mu = Json::object();
    for (int nu = 1; nu <= model.spec.seasons; ++nu) {
        sigma[std::to_string(nu)] = matrix_flat(model.sigma_eps[nu - 1]);
        mu[std::to_string(nu)] = vector_flat(
            model.mu.empty() ? Vector(Vector::Zero(model.spec.dim)) : model.mu[nu - 1]);
    }
    j["sigma_eps"] = std::move(sigma);
    j["mu"] = std::move(mu);
    return j;
}

PvarModel model_from_json(const Json& j) {
    PvarModel model;
    model.spec = spec_from_json(j);
    const int d = model.spec.dim;
    model.phi.resize(model.spec.seasons);
    for (int nu = 1; nu <= model.spec.seasons; ++nu) {
        const Json& mats = j.at("phi").at(std::to_string(nu));
        for (int k = 1; k <= model.spec.order[nu - 1]; ++k)
            model.phi[nu - 1].push_back(matrix_from_flat(mats.at(k - 1), d, d));
        model.sigma_eps.push_back(
            matrix_from_flat(j.at("sigma_eps").at(std::to_string(nu)), d, d));
    }
    if (j.contains("mu") && !j.at("mu").is_null()) {
        for (int nu = 1; nu <= model.spec.seasons; ++nu)
            model.mu.push_back(vector_from_flat(j.at("mu").at(std::to_string(nu))));
    }
    model.validate();
    return model;
}

Json fit_to_json(const FitResult& fit, const SeriesData& data,
                 const std::vector<Vector>& mu_hat, bool demeaned) {
    Json j;
    j["spec"] = spec_to_json(fit.spec);
    j["mode"] = fit.mode == FitMode::Constrained ? "constrained" : "unconstrained";
    j["years"] = fit.years;

    Json beta = Json::object(), xi = Json::object();
    for (int nu = 1; nu <= fit.spec.seasons; ++nu) {
        beta[std::to_string(nu)] = vector_flat(fit.beta[nu - 1]);
        if (fit.mode == FitMode::Constrained) xi[std::to_string(nu)] = vector_flat(fit.xi[nu - 1]);
    }
    j["beta"] = std::move(beta);
    if (fit.mode == FitMode::Constrained) j["xi"] = std::move(xi);

    Json se_s = Json::object(), se_w = Json::object();
    for (int nu = 1; nu <= fit.spec.seasons; ++nu) {
        if (!fit.se_strong.empty()) se_s[std::to_string(nu)] = vector_flat(fit.se_strong[nu - 1]);
        if (!fit.se_weak.empty()) se_w[std::to_string(nu)] = vector_flat(fit.se_weak[nu - 1]);
    }
    if (!fit.se_strong.empty()) {
        j["se_strong"] = std::move(se_s);
        j["pval_strong"] = pvalues_from(fit.beta, fit.se_strong);
    }
    if (!fit.se_weak.empty()) {
        j["se_weak"] = std::move(se_w);
        j["pval_weak"] = pvalues_from(fit.beta, fit.se_weak);
    }

    Json st = Json::object(), sh = Json::object(), om = Json::object();
    for (int nu = 1; nu <= fit.spec.seasons; ++nu) {
        st[std::to_string(nu)] = matrix_rows(fit.sigma_tilde[nu - 1]);
        sh[std::to_string(nu)] = matrix_rows(fit.sigma_hat[nu - 1]);
        om[std::to_string(nu)] = matrix_rows(fit.omega_hat[nu - 1]);
    }
    j["sigma_tilde"] = std::move(st);
    j["sigma_hat"] = std::move(sh);
    j["omega_hat"] = std::move(om);

    Json mu = Json::object();
    for (std::size_t nu = 0; nu < mu_hat.size(); ++nu)
        mu[std::to_string(nu + 1)] = vector_flat(mu_hat[nu]);
    j["mu_hat"] = std::move(mu);
    j["demeaned"] = demeaned;

    j["series"] = {{"s", data.seasons()}, {"values", matrix_rows(data.values())}};
    return j;
}

FitDocument fit_from_json(const Json& j) {
    FitDocument doc;
    const PvarSpec spec = spec_from_json(j.at("spec"));
    doc.data = SeriesData(matrix_from_rows(j.at("series").at("values")),
                          j.at("series").at("s").get<int>());

    // Rebuild the result from beta: regressors, residuals and the covariance
    // estimators are exact functions of (series, beta).
    FitResult fit;
    fit.spec = spec;
    fit.mode = j.at("mode").get<std::string>() == "constrained" ? FitMode::Constrained
                                                                : FitMode::Unconstrained;
    fit.years = doc.data.years();
    fit.regressors = build_regressors(doc.data, spec);
    fit.beta.resize(spec.seasons);
    for (int nu = 1; nu <= spec.seasons; ++nu)
        fit.beta[nu - 1] = vector_from_flat(j.at("beta").at(std::to_string(nu)));
    if (fit.mode == FitMode::Constrained && j.contains("xi")) {
        fit.xi.resize(spec.seasons);
        for (int nu = 1; nu <= spec.seasons; ++nu)
            fit.xi[nu - 1] = vector_from_flat(j.at("xi").at(std::to_string(nu)));
    }

    const int s = spec.seasons;
    const int d = spec.dim;
    const int N = fit.years;
    Matrix resid = Matrix::Zero(d, doc.data.length());
    fit.sigma_tilde.assign(s, Matrix());
    fit.sigma_hat.assign(s, Matrix());
    fit.omega_hat.assign(s, Matrix());
    for (int nu = 1; nu <= s; ++nu) {
        const int p = spec.order[nu - 1];
        const Matrix& X = fit.regressors.X[nu - 1];
        const Matrix& Z = fit.regressors.Z[nu - 1];
        Matrix E = Z;
        if (p > 0) {
            const Matrix B = Eigen::Map<const Matrix>(fit.beta[nu - 1].data(), d, d * p);
            E -= B * X;
        }
        for (int n = 0; n < N; ++n) {
            const int t = flat_index(n, nu, s);
            if (t > p) resid.col(t - 1) = E.col(n);
        }
        fit.sigma_tilde[nu - 1] = (E * E.transpose()) / static_cast<double>(N - d * p);
        fit.omega_hat[nu - 1] =
            p > 0 ? Matrix((X * X.transpose()) / static_cast<double>(N)) : Matrix(0, 0);
    }
    fit.residuals = SeriesData(std::move(resid), s);
    for (int nu = 1; nu <= s; ++nu) {
        Matrix acc = Matrix::Zero(d, d);
        for (int n = 0; n < N; ++n) {
            const auto e = fit.residuals.col(n, nu);
            acc += e * e.transpose();
        }
        fit.sigma_hat[nu - 1] = acc / static_cast<double>(N);
    }

    if (j.contains("se_strong")) {
        fit.se_strong.resize(s);
        for (int nu = 1; nu <= s; ++nu)
            fit.se_strong[nu - 1] = vector_from_flat(j.at("se_strong").at(std::to_string(nu)));
    }
    if (j.contains("se_weak")) {
        fit.se_weak.resize(s);
        for (int nu = 1; nu <= s; ++nu)
            fit.se_weak[nu - 1] = vector_from_flat(j.at("se_weak").at(std::to_string(nu)));
    }

    if (j.contains("mu_hat")) {
        for (int nu = 1; nu <= s; ++nu) {
            const auto key = std::to_string(nu);
            if (j.at("mu_hat").contains(key))
                doc.mu_hat.push_back(vector_from_flat(j.at("mu_hat").at(key)));
        }
    }
    if (j.contains("demeaned")) doc.demeaned = j.at("demeaned").get<bool>();
    doc.fit = std::move(fit);
    return doc;
}

namespace {

Json season_report_to_json(const SeasonReport& r) {
    Json j;
    j["season"] = r.season;
    j["q"] = r.q;
    j["q_star"] = r.q_star;
    if (r.df_strong.has_value()) {
        j["df_strong"] = *r.df_strong;
        j["p_strong"] = *r.p_strong;
        j["p_strong_star"] = *r.p_strong_star;
    } else {
        j["df_strong"] = nullptr;
    }
    j["weights"] = vector_flat(r.weights);
    j["p_weak"] = r.p_weak;
    j["p_weak_star"] = r.p_weak_star;
    j["clipped_eigenvalues"] = r.clipped_eigenvalues;
    return j;
}

std::string mode_name(CovMode mode) {
    switch (mode) {
        case CovMode::StrongU: return "strong-unconstrained";
        case CovMode::StrongR: return "strong-constrained";
        case CovMode::WeakU: return "weak-unconstrained";
        case CovMode::WeakR: return "weak-constrained";
    }
    return "?";
}

}  // namespace

Json report_to_json(const PortmanteauReport& report) {
    Json j;
    j["max_lag"] = report.max_lag;
    j["mode"] = mode_name(report.mode);
    j["years"] = report.years;
    Json seasons = Json::array();
    for (const auto& r : report.seasons) seasons.push_back(season_report_to_json(r));
    j["seasons"] = std::move(seasons);
    if (report.global.has_value()) {
        Json g;
        g["q"] = report.global->q;
        g["q_star"] = report.global->q_star;
        if (report.global->df_strong.has_value()) {
            g["df_strong"] = *report.global->df_strong;
            g["p_strong"] = *report.global->p_strong;
            g["p_strong_star"] = *report.global->p_strong_star;
        } else {
            g["df_strong"] = nullptr;
        }
        g["weights"] = vector_flat(report.global->weights);
        g["p_weak"] = report.global->p_weak;
        g["p_weak_star"] = report.global->p_weak_star;
        g["clipped_eigenvalues"] = report.global->clipped_eigenvalues;
        j["global"] = std::move(g);
    }
    if (!report.band_halfwidth.empty()) {
        Json bands = Json::object();
        for (std::size_t nu = 0; nu < report.band_halfwidth.size(); ++nu)
            bands[std::to_string(nu + 1)] = vector_flat(report.band_halfwidth[nu]);
        j["bands"] = {{"alpha", report.band_alpha}, {"halfwidth", std::move(bands)}};
    }
    return j;
}

void report_to_csv(const PortmanteauReport& report, std::ostream& out) {
    out << "scope,max_lag,q,q_star,df_strong,p_strong,p_strong_star,p_weak,p_weak_star,"
           "n_clipped_eigenvalues\n";
    auto emit = [&](const std::string& scope, double q, double q_star,
                    const std::optional<int>& df, const std::optional<double>& ps,
                    const std::optional<double>& pss, double pw, double pws, int clipped) {
        out << scope << ',' << report.max_lag << ',' << fmt17(q) << ',' << fmt17(q_star) << ',';
        if (df.has_value())
            out << *df << ',' << fmt17(*ps) << ',' << fmt17(*pss) << ',';
        else
            out << "n.a.,n.a.,n.a.,";
        out << fmt17(pw) << ',' << fmt17(pws) << ',' << clipped << '\n';
    };
    for (const auto& r : report.seasons)
        emit(std::to_string(r.season), r.q, r.q_star, r.df_strong, r.p_strong,
             r.p_strong_star, r.p_weak, r.p_weak_star, r.clipped_eigenvalues);
    if (report.global.has_value())
        emit("global", report.global->q, report.global->q_star, report.global->df_strong,
             report.global->p_strong, report.global->p_strong_star, report.global->p_weak,
             report.global->p_weak_star, report.global->clipped_eigenvalues);
}

void bands_to_csv(const PortmanteauReport& report, const LagCovSet& lagcov,
                  std::ostream& out) {
    out << "season,lag,entry,r,lower,upper\n";
    const int d = lagcov.dim;
    for (std::size_t nu = 0; nu < report.band_halfwidth.size(); ++nu) {
        const Vector& half = report.band_halfwidth[nu];
        const Vector& r = lagcov.r_vec[nu];
        for (Eigen::Index idx = 0; idx < r.size(); ++idx) {
            const int lag = static_cast<int>(idx) / (d * d) + 1;
            const int entry = static_cast<int>(idx) % (d * d);
            out << (nu + 1) << ',' << lag << ',' << entry << ',' << fmt17(r(idx)) << ','
                << fmt17(-half(idx)) << ',' << fmt17(half(idx)) << '\n';
        }
    }
}

Json rejection_to_json(const RejectionTable& table) {
    Json rows = Json::array();
    for (const auto& [key, cell] : table.cells) {
        Json row;
        row["test"] = test_name(key.test);
        row["years"] = key.years;
        row["max_lag"] = key.max_lag;
        row["scope"] = key.season == 0 ? Json("global") : Json(key.season);
        row["alpha"] = key.alpha;
        row["rejections"] = cell.rejections;
        row["valid"] = cell.valid;
        row["frequency"] = cell.frequency;
        row["wilson_low"] = cell.wilson_low;
        row["wilson_high"] = cell.wilson_high;
        rows.push_back(std::move(row));
    }
    Json j;
    j["cells"] = std::move(rows);
    j["replications"] = table.replications;
    j["failures"] = table.failures;
    return j;
}

void rejection_to_csv(const RejectionTable& table, std::ostream& out,
                      const std::string& label) {
    out << "test,years,max_lag,scope,alpha,rejections,valid,frequency,wilson_low,"
           "wilson_high";
    if (!label.empty()) out << ",label";
    out << '\n';
    for (const auto& [key, cell] : table.cells) {
        out << test_name(key.test) << ',' << key.years << ',' << key.max_lag << ','
            << (key.season == 0 ? std::string("global") : std::to_string(key.season)) << ','
            << fmt17(key.alpha) << ',' << cell.rejections << ',' << cell.valid << ','
            << fmt17(cell.frequency) << ',' << fmt17(cell.wilson_low) << ','
            << fmt17(cell.wilson_high);
        if (!label.empty()) out << ',' << csv_quote(label);
        out << '\n';
    }
}

Json experiment_to_json(const ExperimentConfig& config) {
    Json j;
    if (config.dgp.has_value()) j["dgp"] = dgp_name(*config.dgp);
    if (config.custom_model.has_value()) j["model"] = model_to_json(*config.custom_model);
    j["noise"] = config.noise == NoiseKind::WeakProduct ? "weak" : "strong";
    j["years"] = config.years_list;
    j["replications"] = config.replications;
    j["lags"] = config.lags;
    Json tests = Json::array();
    for (TestKind t : config.tests) tests.push_back(test_name(t));
    j["tests"] = std::move(tests);
    j["alphas"] = config.alphas;
    j["fitted_order"] = config.fitted_order;
    if (config.fit_constrained.has_value()) j["fit_constrained"] = *config.fit_constrained;
    j["seed"] = config.seed;
    j["workers"] = config.workers;
    j["burn_in_years"] = config.burn_in_years;
    j["include_global"] = config.include_global;
    Json lrv;
    lrv["method"] =
        config.lrv.method == LrvConfig::Method::HacBartlett ? "hac" : "var-spectral";
    lrv["max_order"] = config.lrv.max_order;
    if (config.lrv.order.has_value()) lrv["order"] = *config.lrv.order;
    lrv["ridge"] = config.lrv.ridge;
    if (config.lrv.bandwidth.has_value()) lrv["bandwidth"] = *config.lrv.bandwidth;
    j["lrv"] = std::move(lrv);
    return j;
}

ExperimentConfig experiment_from_json(const Json& j) {
    ExperimentConfig cfg;
    if (j.contains("dgp")) {
        const std::string name = j.at("dgp").get<std::string>();
        if (name == "dgp1")
            cfg.dgp = Dgp::Dgp1;
        else if (name == "dgp2")
            cfg.dgp = Dgp::Dgp2;
        else if (name == "dgp3")
            cfg.dgp = Dgp::Dgp3;
        else if (name == "power-pvar2")
            cfg.dgp = Dgp::PowerPvar2;
        else
            throw UnknownDgp("unknown DGP: " + name);
    }
    if (j.contains("model")) cfg.custom_model = model_from_json(j.at("model"));
    if (j.contains("noise"))
        cfg.noise = j.at("noise").get<std::string>() == "weak" ? NoiseKind::WeakProduct
                                                               : NoiseKind::StrongGaussian;
    if (j.contains("years")) cfg.years_list = j.at("years").get<std::vector<int>>();
    if (j.contains("replications")) cfg.replications = j.at("replications").get<int>();
    if (j.contains("lags")) cfg.lags = j.at("lags").get<std::vector<int>>();
    if (j.contains("tests")) {
        cfg.tests.clear();
        for (const auto& t : j.at("tests")) {
            const std::string name = t.get<std::string>();
            if (name == "Q1")
                cfg.tests.push_back(TestKind::Q1);
            else if (name == "Q2")
                cfg.tests.push_back(TestKind::Q2);
            else if (name == "Q3")
                cfg.tests.push_back(TestKind::Q3);
            else
                throw ParseError("unknown test: " + name);
        }
    }
    if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("fitted_order")) cfg.fitted_order = j.at("fitted_order").get<int>();
    if (j.contains("fit_constrained"))
        cfg.fit_constrained = j.at("fit_constrained").get<bool>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("burn_in_years")) cfg.burn_in_years = j.at("burn_in_years").get<int>();
    if (j.contains("include_global")) cfg.include_global = j.at("include_global").get<bool>();
    if (j.contains("lrv")) {
        const Json& lrv = j.at("lrv");
        if (lrv.contains("method"))
            cfg.lrv.method = lrv.at("method").get<std::string>() == "hac"
                                 ? LrvConfig::Method::HacBartlett
                                 : LrvConfig::Method::VarSpectral;
        if (lrv.contains("max_order")) cfg.lrv.max_order = lrv.at("max_order").get<int>();
        if (lrv.contains("order") && !lrv.at("order").is_null())
            cfg.lrv.order = lrv.at("order").get<int>();
        if (lrv.contains("ridge")) cfg.lrv.ridge = lrv.at("ridge").get<double>();
        if (lrv.contains("bandwidth") && !lrv.at("bandwidth").is_null())
            cfg.lrv.bandwidth = lrv.at("bandwidth").get<int>();
    }
    return cfg;
}

void matrix_to_csv(const Matrix& values, const std::vector<std::string>& columns,
                   std::ostream& out) {
    const int d = static_cast<int>(values.rows());
    for (int i = 0; i < d; ++i) {
        if (i) out << ',';
        out << csv_quote(i < static_cast<int>(columns.size()) ? columns[i]
                                                              : "y" + std::to_string(i + 1));
    }
    out << '\n';
    for (Eigen::Index t = 0; t < values.cols(); ++t) {
        for (int i = 0; i < d; ++i) {
            if (i) out << ',';
            out << fmt17(values(i, t));
        }
        out << '\n';
    }
}

void series_to_csv(const SeriesData& data, const std::vector<std::string>& columns,
                   std::ostream& out) {
    matrix_to_csv(data.values(), columns, out);
}

namespace {

std::vector<std::string> parse_csv_record(std::istream& in, bool& eof, long line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (;;) {
        const int ci = in.get();
        if (ci == EOF) {
            eof = true;
            if (quoted) throw ParseError("unterminated quote at line " + std::to_string(line));
            if (any || !field.empty()) fields.push_back(field);
            return fields;
        }
        const char c = static_cast<char>(ci);
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            fields.push_back(field);
            return fields;
        } else if (c == '\r') {
            // swallow; a following \n ends the record
        } else {
            field += c;
        }
    }
}

}  // namespace

Matrix csv_to_matrix(std::istream& in, const std::vector<std::string>& columns,
                     std::vector<std::string>* header_out) {
    bool eof = false;
    long line = 1;
    const std::vector<std::string> header = parse_csv_record(in, eof, line);
    if (header.empty()) throw ParseError("missing header row");
    if (header_out) *header_out = header;

    std::vector<int> selected;
    if (columns.empty()) {
        for (int i = 0; i < static_cast<int>(header.size()); ++i) selected.push_back(i);
    } else {
        for (const auto& name : columns) {
            const auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw ParseError("column not found: " + name);
            selected.push_back(static_cast<int>(it - header.begin()));
        }
    }

    std::vector<std::vector<double>> rows;
    while (!eof) {
        ++line;
        const std::vector<std::string> record = parse_csv_record(in, eof, line);
        if (record.empty()) continue;
        if (record.size() == 1 && record[0].empty()) continue;
        if (record.size() != header.size())
            throw ParseError("wrong field count at line " + std::to_string(line));
        std::vector<double> row;
        row.reserve(selected.size());
        for (int idx : selected) {
            const std::string& cell = record[idx];
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw ParseError("non-numeric value '" + cell + "' in column " +
                                 header[idx] + " at line " + std::to_string(line));
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }

    Matrix out(static_cast<Eigen::Index>(selected.size()),
               static_cast<Eigen::Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < selected.size(); ++i)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[t][i];
    return out;
}

}  // namespace pvar
