#include "pvar/diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "pvar/detail/linalg.hpp"
#include "pvar/quadform.hpp"

namespace pvar {

using detail::kron;
using detail::kron_vec;

namespace {

Vector residual_at(const SeriesData& residuals, int t) {
    if (t < 1) return Vector::Zero(residuals.dim());
    return residuals.col(t);
}

// Stack of eps_{t-1}, ..., eps_{t-M}, presample values zero.
Vector lagged_stack(const SeriesData& residuals, int t, int max_lag) {
    const int d = residuals.dim();
    Vector out(d * max_lag);
    for (int l = 1; l <= max_lag; ++l) out.segment((l - 1) * d, d) = residual_at(residuals, t - l);
    return out;
}

// A_hat_nu(l) = (1/N) sum_n X_n(nu) eps_{ns+nu-l}^T collected over l = 1..M.
Matrix a_hat(const FitResult& fit, int season, int max_lag) {
    const int s = fit.spec.seasons;
    const int d = fit.spec.dim;
    const int p = fit.spec.order[season - 1];
    const int N = fit.years;
    const Matrix& X = fit.regressors.X[season - 1];

    Matrix out = Matrix::Zero(d * p, max_lag * d);
    for (int n = 0; n < N; ++n) {
        const int t = flat_index(n, season, s);
        for (int l = 1; l <= max_lag; ++l)
            out.middleCols((l - 1) * d, d) +=
                X.col(n) * residual_at(fit.residuals, t - l).transpose();
    }
    return out / static_cast<double>(N);
}

// J_M(nu)^{-1/2} = blockdiag_h(Sigma_hat(nu-h)^{-1/2}) kron Sigma_hat(nu)^{-1/2}.
Matrix j_inv_sqrt(const FitResult& fit, int season, int max_lag) {
    const int d = fit.spec.dim;
    Matrix own;
    if (!detail::try_sym_inv_sqrt(sigma_hat_lagged(fit.residuals, season, 0), own))
        throw SingularJ(season);
    Matrix blocks = Matrix::Zero(max_lag * d, max_lag * d);
    for (int h = 1; h <= max_lag; ++h) {
        Matrix inv_sqrt;
        if (!detail::try_sym_inv_sqrt(sigma_hat_lagged(fit.residuals, season, h), inv_sqrt))
            throw SingularJ(season);
        blocks.block((h - 1) * d, (h - 1) * d, d, d) = inv_sqrt;
    }
    return kron(blocks, own);
}

// The score process whose long-run variance is Xi: W1 stacked over W2.
// Unconstrained W1 = Omega^{-1} X_n kron eps; constrained W1 = H (X_n kron eps).
Matrix build_w(const FitResult& fit, int season, int max_lag, bool constrained) {
    const int s = fit.spec.seasons;
    const int d = fit.spec.dim;
    const int p = fit.spec.order[season - 1];
    const int N = fit.years;
    const Matrix& X = fit.regressors.X[season - 1];

    Matrix transform;  // maps X_n kron eps to W1
    int q1 = 0;
    if (p > 0) {
        if (constrained) {
            const auto& c = *fit.spec.constraints[season - 1];
            Matrix sig_inv;
            if (!detail::try_sym_inverse(fit.sigma_tilde[season - 1], sig_inv))
                throw SingularGlsSystem(season);
            Matrix bracket;
            if (!detail::try_sym_inverse(
                    Matrix(c.R.transpose() * kron(fit.omega_hat[season - 1], sig_inv) * c.R),
                    bracket))
                throw SingularGlsSystem(season);
            transform = bracket * c.R.transpose() *
                        kron(Matrix::Identity(d * p, d * p), sig_inv);
            q1 = static_cast<int>(c.R.cols());
        } else {
            Matrix omega_inv;
            if (!detail::try_sym_inverse(fit.omega_hat[season - 1], omega_inv))
                throw SingularDesign(season, std::numeric_limits<double>::infinity());
            transform = kron(omega_inv, Matrix::Identity(d, d));
            q1 = d * d * p;
        }
    }

    Matrix W(q1 + max_lag * d * d, N);
    for (int n = 0; n < N; ++n) {
        const int t = flat_index(n, season, s);
        const Vector eps = residual_at(fit.residuals, t);
        if (q1 > 0) W.block(0, n, q1, 1) = transform * kron_vec(X.col(n), eps);
        W.block(q1, n, max_lag * d * d, 1) = kron_vec(lagged_stack(fit.residuals, t, max_lag), eps);
    }
    return W;
}

// [Upsilon | I] (or [Upsilon R | I]) mapping Xi to Delta.
Matrix assembly_matrix(const FitResult& fit, int season, int max_lag, bool constrained) {
    const int d = fit.spec.dim;
    const int p = fit.spec.order[season - 1];
    const int md2 = max_lag * d * d;
    if (p == 0) return Matrix::Identity(md2, md2);

    Matrix ups = upsilon_hat(fit, season, max_lag);
    if (constrained) ups = Matrix(ups * fit.spec.constraints[season - 1]->R);
    Matrix out(md2, ups.cols() + md2);
    out.leftCols(ups.cols()) = ups;
    out.rightCols(md2) = Matrix::Identity(md2, md2);
    return out;
}

Matrix strong_delta(const FitResult& fit, int season, int max_lag, bool constrained) {
    const int s = fit.spec.seasons;
    const int d = fit.spec.dim;
    const int p = fit.spec.order[season - 1];

    // V = blockdiag_h(Sigma_hat(nu-h)) kron Sigma_hat(nu).
    Matrix blocks = Matrix::Zero(max_lag * d, max_lag * d);
    for (int h = 1; h <= max_lag; ++h)
        blocks.block((h - 1) * d, (h - 1) * d, d, d) = sigma_hat_lagged(fit.residuals, season, h);
    const Matrix v = kron(blocks, sigma_hat_lagged(fit.residuals, season, 0));
    if (p == 0) return v;

    const Matrix a = a_hat(fit, season, max_lag);
    if (!constrained) {
        Matrix omega_inv;
        if (!detail::try_sym_inverse(fit.omega_hat[season - 1], omega_inv))
            throw SingularDesign(season, std::numeric_limits<double>::infinity());
        return v - kron(Matrix(a.transpose() * omega_inv * a),
                        sigma_hat_lagged(fit.residuals, season, 0));
    }
    const auto& c = *fit.spec.constraints[season - 1];
    Matrix sig_inv;
    if (!detail::try_sym_inverse(fit.sigma_tilde[season - 1], sig_inv))
        throw SingularGlsSystem(season);
    Matrix bracket;
    if (!detail::try_sym_inverse(
            Matrix(c.R.transpose() * kron(fit.omega_hat[season - 1], sig_inv) * c.R), bracket))
        throw SingularGlsSystem(season);
    const Matrix ai = kron(a, Matrix::Identity(d, d));  // d^2 p x M d^2
    const Matrix proj = ai.transpose() * c.R * bracket * c.R.transpose() * ai;
    return v - proj;
}

std::optional<int> strong_df(const PvarSpec& spec, int season, int max_lag) {
    const int d = spec.dim;
    const bool constrained = !spec.constraints.empty() &&
                             spec.constraints[season - 1].has_value();
    int df;
    if (constrained) {
        df = d * d * max_lag - static_cast<int>(spec.constraints[season - 1]->R.cols());
    } else {
        if (max_lag <= spec.order[season - 1]) return std::nullopt;
        df = d * d * (max_lag - spec.order[season - 1]);
    }
    if (df <= 0) return std::nullopt;
    return df;
}

}  // namespace

Matrix LagCovSet::cov(int season, int h) const {
    if (h >= 0) return C[season - 1][h];
    // C(h; nu) = C(-h; nu-h)^T for h < 0, so the source season is nu + |h|.
    const int nu = wrap_season(season - h, seasons);
    return C[nu - 1][-h].transpose();
}

LagCovSet lag_covariances(const SeriesData& residuals, int max_lag) {
    if (max_lag < 1) throw Error("max lag must be >= 1");
    const int s = residuals.seasons();
    const int d = residuals.dim();
    const int N = residuals.years();
    if (N <= max_lag) throw InsufficientSample("need more years than lags");

    LagCovSet out;
    out.max_lag = max_lag;
    out.seasons = s;
    out.dim = d;
    out.years = N;
    out.C.assign(s, std::vector<Matrix>(max_lag + 1));
    out.D.assign(s, Vector());
    out.c_vec.assign(s, Vector(d * d * max_lag));
    out.r_vec.assign(s, Vector(d * d * max_lag));

    for (int nu = 1; nu <= s; ++nu) {
        for (int h = 0; h <= max_lag; ++h) {
            Matrix acc = Matrix::Zero(d, d);
            for (int n = h; n < N; ++n) {
                const int t = flat_index(n, nu, s);
                acc += residuals.col(t) * residual_at(residuals, t - h).transpose();
            }
            out.C[nu - 1][h] = acc / static_cast<double>(N);
        }
        Vector diag = out.C[nu - 1][0].diagonal();
        for (int i = 0; i < d; ++i)
            if (diag(i) <= 0.0) throw DegenerateVariance(nu, i + 1);
        out.D[nu - 1] = diag.cwiseSqrt();
    }
    for (int nu = 1; nu <= s; ++nu) {
        for (int h = 1; h <= max_lag; ++h) {
            const Matrix& ch = out.C[nu - 1][h];
            const Vector& d_own = out.D[nu - 1];
            const Vector& d_lag = out.D[wrap_season(nu - h, s) - 1];
            const Matrix rh = d_own.cwiseInverse().asDiagonal() * ch *
                              d_lag.cwiseInverse().asDiagonal();
            out.c_vec[nu - 1].segment((h - 1) * d * d, d * d) =
                Eigen::Map<const Vector>(ch.data(), d * d);
            out.r_vec[nu - 1].segment((h - 1) * d * d, d * d) =
                Eigen::Map<const Vector>(rh.data(), d * d);
        }
    }
    return out;
}

Matrix upsilon_hat(const FitResult& fit, int season, int max_lag) {
    const int s = fit.spec.seasons;
    const int d = fit.spec.dim;
    const int p = fit.spec.order[season - 1];
    if (p < 1) throw Error("upsilon requires p(nu) >= 1");
    const int N = fit.years;
    const Matrix& X = fit.regressors.X[season - 1];

    // (1/N) sum_n stack(eps lags) X_n^T, then the kron with I_d carried out once.
    Matrix S = Matrix::Zero(max_lag * d, d * p);
    for (int n = 0; n < N; ++n) {
        const int t = flat_index(n, season, s);
        S += lagged_stack(fit.residuals, t, max_lag) * X.col(n).transpose();
    }
    S /= static_cast<double>(N);
    return -kron(S, Matrix::Identity(d, d));
}

Matrix sigma_hat_lagged(const SeriesData& residuals, int season, int lag) {
    const int s = residuals.seasons();
    const int d = residuals.dim();
    const int N = residuals.years();
    Matrix acc = Matrix::Zero(d, d);
    for (int n = 0; n < N; ++n) {
        const int t = flat_index(n, season, s) - lag;
        const Vector e = residual_at(residuals, t);
        acc += e * e.transpose();
    }
    return acc / static_cast<double>(N);
}

AsymptoticCov asymptotic_cov(const FitResult& fit, int max_lag, CovMode mode,
                             const LrvConfig& lrv_cfg, bool global) {
    const PvarSpec& spec = fit.spec;
    const int s = spec.seasons;
    const int d = spec.dim;
    const int md2 = max_lag * d * d;
    const bool constrained = (mode == CovMode::StrongR || mode == CovMode::WeakR);
    const bool weak = (mode == CovMode::WeakU || mode == CovMode::WeakR);
    if (constrained && !spec.constrained())
        throw MissingConstraints("constrained covariance mode without constraints");

    AsymptoticCov out;
    out.mode = mode;
    out.max_lag = max_lag;
    out.delta.resize(s);
    out.nabla.resize(s);
    out.eigenvalues.resize(s);
    out.clipped.assign(s, 0);

    LrvConfig cfg = lrv_cfg;
    std::vector<Matrix> assembly(s);

    if (!weak) {
        for (int nu = 1; nu <= s; ++nu)
            out.delta[nu - 1] = strong_delta(fit, nu, max_lag, constrained);
    } else if (!global) {
        for (int nu = 1; nu <= s; ++nu) {
            const Matrix w = build_w(fit, nu, max_lag, constrained);
            const Matrix xi = long_run_variance(w, cfg);
            const Matrix t = assembly_matrix(fit, nu, max_lag, constrained);
            out.delta[nu - 1] = t * xi * t.transpose();
        }
    } else {
        // One year-indexed process stacked over all seasons; its joint LRV holds
        // every cross-season block. The stacked dimension grows quickly, so the
        // auxiliary VAR order defaults to 1 here.
        if (!cfg.order.has_value() && cfg.method == LrvConfig::Method::VarSpectral)
            cfg.order = 1;
        std::vector<Matrix> parts(s);
        std::vector<int> offsets(s + 1, 0);
        for (int nu = 1; nu <= s; ++nu) {
            parts[nu - 1] = build_w(fit, nu, max_lag, constrained);
            offsets[nu] = offsets[nu - 1] + static_cast<int>(parts[nu - 1].rows());
        }
        Matrix w(offsets[s], fit.years);
        for (int nu = 1; nu <= s; ++nu)
            w.middleRows(offsets[nu - 1], parts[nu - 1].rows()) = parts[nu - 1];
        const Matrix xi = long_run_variance(w, cfg);

        Matrix t_all = Matrix::Zero(s * md2, offsets[s]);
        for (int nu = 1; nu <= s; ++nu) {
            const Matrix t = assembly_matrix(fit, nu, max_lag, constrained);
            t_all.block((nu - 1) * md2, offsets[nu - 1], md2, t.cols()) = t;
        }
        const Matrix delta_g = t_all * xi * t_all.transpose();
        for (int nu = 1; nu <= s; ++nu)
            out.delta[nu - 1] = delta_g.block((nu - 1) * md2, (nu - 1) * md2, md2, md2);
        out.delta_global = delta_g;
    }

    std::vector<Matrix> jis(s);
    for (int nu = 1; nu <= s; ++nu) {
        jis[nu - 1] = j_inv_sqrt(fit, nu, max_lag);
        out.nabla[nu - 1] = jis[nu - 1] * out.delta[nu - 1] * jis[nu - 1];
        out.eigenvalues[nu - 1] =
            detail::clipped_eigenvalues(out.nabla[nu - 1], &out.clipped[nu - 1]);
    }

    if (global) {
        if (!out.delta_global.has_value()) {
            // Strong modes: independence zeroes the cross-season blocks.
            Matrix delta_g = Matrix::Zero(s * md2, s * md2);
            for (int nu = 1; nu <= s; ++nu)
                delta_g.block((nu - 1) * md2, (nu - 1) * md2, md2, md2) = out.delta[nu - 1];
            out.delta_global = std::move(delta_g);
        }
        Matrix jg = Matrix::Zero(s * md2, s * md2);
        for (int nu = 1; nu <= s; ++nu)
            jg.block((nu - 1) * md2, (nu - 1) * md2, md2, md2) = jis[nu - 1];
        out.nabla_global = jg * (*out.delta_global) * jg;
        out.eigenvalues_global =
            detail::clipped_eigenvalues(*out.nabla_global, &out.clipped_global);
    }
    return out;
}

double correction_factor(int lag, int season, int years, int seasons) {
    if (lag < 1 || season < 1 || season > seasons)
        throw InvalidFactor("lag/season out of range");
    if (lag % seasons == 0) {
        const double denom = years - lag / seasons;
        if (denom <= 0.0) throw InvalidFactor("nonpositive denominator");
        return (years + 2.0) / denom;
    }
    const double denom = years - (lag - season + seasons) / seasons;
    if (denom <= 0.0) throw InvalidFactor("nonpositive denominator");
    return years / denom;
}

PortmanteauStats portmanteau(const LagCovSet& lagcov, int max_lag, bool corrected) {
    if (max_lag < 1 || max_lag > lagcov.max_lag)
        throw Error("max lag out of range for the lag covariance set");
    const int s = lagcov.seasons;
    const int N = lagcov.years;

    std::vector<Matrix> c0_inv(s);
    for (int nu = 1; nu <= s; ++nu)
        if (!detail::try_sym_inverse(lagcov.C[nu - 1][0], c0_inv[nu - 1]))
            throw SingularC0(nu);

    PortmanteauStats out;
    out.q.assign(s, 0.0);
    for (int nu = 1; nu <= s; ++nu) {
        double q = 0.0;
        for (int l = 1; l <= max_lag; ++l) {
            const Matrix& cl = lagcov.C[nu - 1][l];
            const int lag_season = wrap_season(nu - l, s);
            const double term =
                (cl.transpose() * c0_inv[nu - 1] * cl * c0_inv[lag_season - 1]).trace();
            const double factor = corrected ? correction_factor(l, nu, N, s) : 1.0;
            q += factor * term;
        }
        out.q[nu - 1] = N * q;
        out.q_global += out.q[nu - 1];
    }
    return out;
}

SeasonReport p_values(double q, double q_star, int season, const AsymptoticCov& acov,
                      const PvarSpec& spec, int max_lag) {
    SeasonReport rep;
    rep.season = season;
    rep.q = q;
    rep.q_star = q_star;
    rep.df_strong = strong_df(spec, season, max_lag);
    if (rep.df_strong.has_value()) {
        rep.p_strong = chi_squared_survival(*rep.df_strong, q);
        rep.p_strong_star = chi_squared_survival(*rep.df_strong, q_star);
    }
    rep.weights = acov.eigenvalues[season - 1];
    rep.clipped_eigenvalues = acov.clipped[season - 1];
    const WeightedChiSq dist(rep.weights);
    rep.p_weak = survival(dist, q).value;
    rep.p_weak_star = survival(dist, q_star).value;
    return rep;
}

GlobalReport p_values_global(double q, double q_star, const AsymptoticCov& acov,
                             const PvarSpec& spec, int max_lag) {
    if (!acov.eigenvalues_global.has_value())
        throw Error("global eigenvalues unavailable; run asymptotic_cov with global=true");
    GlobalReport rep;
    rep.q = q;
    rep.q_star = q_star;
    int df = 0;
    bool applicable = true;
    for (int nu = 1; nu <= spec.seasons; ++nu) {
        const auto part = strong_df(spec, nu, max_lag);
        if (!part.has_value()) {
            applicable = false;
            break;
        }
        df += *part;
    }
    if (applicable && df > 0) {
        rep.df_strong = df;
        rep.p_strong = chi_squared_survival(df, q);
        rep.p_strong_star = chi_squared_survival(df, q_star);
    }
    rep.weights = *acov.eigenvalues_global;
    rep.clipped_eigenvalues = acov.clipped_global;
    const WeightedChiSq dist(rep.weights);
    rep.p_weak = survival(dist, q).value;
    rep.p_weak_star = survival(dist, q_star).value;
    return rep;
}

double chi_squared_survival(int df, double x) {
    boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::cdf(boost::math::complement(dist, std::max(x, 0.0)));
}

double normal_quantile(double one_minus_alpha) {
    boost::math::normal normal;
    return boost::math::quantile(normal, one_minus_alpha);
}

std::vector<Vector> confidence_bands(const AsymptoticCov& acov, int years, double alpha) {
    const double u = normal_quantile(1.0 - alpha);
    std::vector<Vector> out(acov.nabla.size());
    for (std::size_t i = 0; i < acov.nabla.size(); ++i) {
        const Vector diag = acov.nabla[i].diagonal().cwiseMax(0.0);
        out[i] = u * diag.cwiseSqrt() / std::sqrt(static_cast<double>(years));
    }
    return out;
}

PortmanteauReport diagnose(const FitResult& fit, int max_lag, CovMode mode,
                           const LrvConfig& lrv_cfg, bool global,
                           std::optional<double> band_alpha) {
    const LagCovSet lagcov = lag_covariances(fit.residuals, max_lag);
    const PortmanteauStats plain = portmanteau(lagcov, max_lag, false);
    const PortmanteauStats corrected = portmanteau(lagcov, max_lag, true);
    const AsymptoticCov acov = asymptotic_cov(fit, max_lag, mode, lrv_cfg, global);

    PortmanteauReport report;
    report.max_lag = max_lag;
    report.mode = mode;
    report.years = fit.years;
    for (int nu = 1; nu <= fit.spec.seasons; ++nu)
        report.seasons.push_back(
            p_values(plain.q[nu - 1], corrected.q[nu - 1], nu, acov, fit.spec, max_lag));
    if (global)
        report.global =
            p_values_global(plain.q_global, corrected.q_global, acov, fit.spec, max_lag);
    if (band_alpha.has_value()) {
        report.band_alpha = *band_alpha;
        report.band_halfwidth = confidence_bands(acov, fit.years, *band_alpha / 2.0);
    }
    return report;
}

}  // namespace pvar
