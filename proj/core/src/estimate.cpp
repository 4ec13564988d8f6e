#include "pvar/estimate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "pvar/detail/linalg.hpp"

namespace pvar {

using detail::kron;
using detail::kron_vec;
using detail::sym_condition;

namespace {

Matrix sym_inverse(const Matrix& g, int season) {
    Matrix out;
    if (!detail::try_sym_inverse(g, out)) throw SingularGlsSystem(season);
    return out;
}

// Residuals, covariance estimators and omega for the given per-season coefficients.
void finalize_fit(FitResult& fit, const SeriesData& data) {
    const PvarSpec& spec = fit.spec;
    const int s = spec.seasons;
    const int d = spec.dim;
    const int N = fit.years;

    Matrix resid = Matrix::Zero(d, data.length());
    fit.sigma_tilde.assign(s, Matrix());
    fit.sigma_hat.assign(s, Matrix());
    fit.omega_hat.assign(s, Matrix());

    for (int nu = 1; nu <= s; ++nu) {
        const int p = spec.order[nu - 1];
        const Matrix& X = fit.regressors.X[nu - 1];
        const Matrix& Z = fit.regressors.Z[nu - 1];
        Matrix B(d, d * p);
        if (p > 0)
            B = Eigen::Map<const Matrix>(fit.beta[nu - 1].data(), d, d * p);

        // Raw residual matrix Z - B X feeds sigma_tilde; the stored residuals follow
        // the convention eps_hat = 0 for ns+nu <= p(nu).
        Matrix E = Z;
        if (p > 0) E -= B * X;
        for (int n = 0; n < N; ++n) {
            const int t = flat_index(n, nu, s);
            if (t > p) resid.col(t - 1) = E.col(n);
        }

        const int denom = N - d * p;
        if (denom <= 0) throw InsufficientSample("N - d p(nu) must be positive");
        fit.sigma_tilde[nu - 1] = (E * E.transpose()) / static_cast<double>(denom);
        fit.omega_hat[nu - 1] = p > 0 ? Matrix((X * X.transpose()) / static_cast<double>(N))
                                      : Matrix(0, 0);
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
}

std::vector<Vector> strong_standard_errors(const FitResult& fit) {
    const PvarSpec& spec = fit.spec;
    const int d = spec.dim;
    std::vector<Vector> se(spec.seasons);
    for (int nu = 1; nu <= spec.seasons; ++nu) {
        const int p = spec.order[nu - 1];
        if (p == 0) {
            se[nu - 1] = Vector();
            continue;
        }
        const Matrix& omega = fit.omega_hat[nu - 1];
        const Matrix& sig = fit.sigma_tilde[nu - 1];
        if (fit.mode == FitMode::Unconstrained) {
            const Matrix omega_inv = sym_inverse(omega, nu);
            Vector diag(d * d * p);
            for (int j = 0; j < d * p; ++j)
                for (int i = 0; i < d; ++i) diag(j * d + i) = omega_inv(j, j) * sig(i, i);
            se[nu - 1] = (diag / static_cast<double>(fit.years)).cwiseSqrt();
        } else {
            const auto& c = *spec.constraints[nu - 1];
            const Matrix sig_inv = sym_inverse(sig, nu);
            const Matrix theta_xi = sym_inverse(
                Matrix(c.R.transpose() * kron(omega, sig_inv) * c.R), nu);
            const Matrix theta_beta = c.R * theta_xi * c.R.transpose();
            se[nu - 1] =
                (theta_beta.diagonal() / static_cast<double>(fit.years)).cwiseSqrt();
        }
    }
    return se;
}

}  // namespace

RegressorBlocks build_regressors(const SeriesData& data, const PvarSpec& spec, bool demean) {
    spec.validate();
    if (data.dim() != spec.dim || data.seasons() != spec.seasons)
        throw DimensionMismatch("data shape does not match the spec");

    const SeriesData series = demean ? data.demeaned() : data;
    const int s = spec.seasons;
    const int d = spec.dim;
    const int N = series.years();

    RegressorBlocks blocks;
    blocks.X.resize(s);
    blocks.Z.resize(s);
    blocks.valid.resize(s);
    for (int nu = 1; nu <= s; ++nu) {
        const int p = spec.order[nu - 1];
        Matrix X = Matrix::Zero(d * p, N);
        Matrix Z(d, N);
        std::vector<bool> valid(N, true);
        for (int n = 0; n < N; ++n) {
            const int t = flat_index(n, nu, s);
            Z.col(n) = series.col(t);
            for (int k = 1; k <= p; ++k) {
                if (t - k >= 1)
                    X.block((k - 1) * d, n, d, 1) = series.col(t - k);
                else
                    valid[n] = false;
            }
        }
        blocks.X[nu - 1] = std::move(X);
        blocks.Z[nu - 1] = std::move(Z);
        blocks.valid[nu - 1] = std::move(valid);
    }
    return blocks;
}

Matrix FitResult::coeff(int season, int k) const {
    const int d = spec.dim;
    return Eigen::Map<const Matrix>(beta[season - 1].data() + (k - 1) * d * d, d, d);
}

PvarModel FitResult::to_model(std::vector<Vector> mu) const {
    PvarModel model;
    model.spec = spec;
    model.phi.resize(spec.seasons);
    for (int nu = 1; nu <= spec.seasons; ++nu)
        for (int k = 1; k <= spec.order[nu - 1]; ++k)
            model.phi[nu - 1].push_back(coeff(nu, k));
    model.sigma_eps = sigma_tilde;
    model.mu = std::move(mu);
    return model;
}

FitResult fit_ols(const SeriesData& data, const PvarSpec& spec, const FitOptions& opts) {
    FitResult fit;
    fit.spec = spec;
    fit.mode = FitMode::Unconstrained;
    fit.years = data.years();
    fit.regressors = build_regressors(data, spec);
    fit.beta.resize(spec.seasons);

    const int d = spec.dim;
    for (int nu = 1; nu <= spec.seasons; ++nu) {
        const int p = spec.order[nu - 1];
        if (p == 0) {
            fit.beta[nu - 1] = Vector();
            continue;
        }
        Matrix X = fit.regressors.X[nu - 1];
        Matrix Z = fit.regressors.Z[nu - 1];
        if (opts.drop_first_year) {
            const auto& valid = fit.regressors.valid[nu - 1];
            int count = 0;
            for (bool v : valid) count += v;
            Matrix Xv(X.rows(), count), Zv(Z.rows(), count);
            int j = 0;
            for (int n = 0; n < static_cast<int>(valid.size()); ++n)
                if (valid[n]) {
                    Xv.col(j) = X.col(n);
                    Zv.col(j) = Z.col(n);
                    ++j;
                }
            X = std::move(Xv);
            Z = std::move(Zv);
        }

        const Matrix G = X * X.transpose();
        const double cond = sym_condition(G);
        if (!(cond < opts.singular_threshold)) throw SingularDesign(nu, cond);

        // B_hat = Z X^T G^{-1} through a pivoted solve.
        Eigen::LDLT<Matrix> ldlt(G);
        const Matrix Bt = ldlt.solve(X * Z.transpose());  // (dp x d)
        const Matrix B = Bt.transpose();
        fit.beta[nu - 1] = Eigen::Map<const Vector>(B.data(), d * d * p);
    }

    finalize_fit(fit, data);
    fit.se_strong = strong_standard_errors(fit);
    return fit;
}

FitResult fit_constrained(const SeriesData& data, const PvarSpec& spec,
                          const FitOptions& opts) {
    spec.validate();
    for (int nu = 1; nu <= spec.seasons; ++nu)
        if (spec.constraints.empty() || !spec.constraints[nu - 1].has_value())
            throw MissingConstraints("constraints must be present for every season");

    // Stage 1: unconstrained OLS provides Sigma_tilde.
    PvarSpec free_spec = spec;
    free_spec.constraints.clear();
    FitResult stage1 = fit_ols(data, free_spec, opts);

    FitResult fit;
    fit.spec = spec;
    fit.mode = FitMode::Constrained;
    fit.years = data.years();
    fit.regressors = stage1.regressors;
    fit.beta.resize(spec.seasons);
    fit.xi.resize(spec.seasons);

    const int d = spec.dim;
    for (int nu = 1; nu <= spec.seasons; ++nu) {
        const int p = spec.order[nu - 1];
        const auto& c = *spec.constraints[nu - 1];
        if (p == 0) {
            fit.beta[nu - 1] = Vector();
            fit.xi[nu - 1] = Vector();
            continue;
        }
        Matrix X = fit.regressors.X[nu - 1];
        Matrix Z = fit.regressors.Z[nu - 1];
        if (opts.drop_first_year) {
            const auto& valid = fit.regressors.valid[nu - 1];
            int count = 0;
            for (bool v : valid) count += v;
            Matrix Xv(X.rows(), count), Zv(Z.rows(), count);
            int j = 0;
            for (int n = 0; n < static_cast<int>(valid.size()); ++n)
                if (valid[n]) {
                    Xv.col(j) = X.col(n);
                    Zv.col(j) = Z.col(n);
                    ++j;
                }
            X = std::move(Xv);
            Z = std::move(Zv);
        }

        Eigen::LLT<Matrix> llt(stage1.sigma_tilde[nu - 1]);
        if (llt.info() != Eigen::Success)
            throw SingularGlsSystem(nu);
        const Matrix sig_inv = llt.solve(Matrix::Identity(d, d));

        // xi = [R^T (X X^T kron S^{-1}) R]^{-1} R^T (X kron S^{-1}) [z - (X^T kron I) b],
        // with (X kron S^{-1}) vec(W) = vec(S^{-1} W X^T) and W = Z - B_b X.
        const Matrix G = X * X.transpose();
        const Matrix lhs = c.R.transpose() * kron(G, sig_inv) * c.R;
        if (!(sym_condition(lhs) < opts.singular_threshold)) throw SingularGlsSystem(nu);

        const Matrix Bb = Eigen::Map<const Matrix>(c.b.data(), d, d * p);
        const Matrix W = Z - Bb * X;
        const Matrix SWXt = sig_inv * W * X.transpose();  // d x dp
        const Vector rhs =
            c.R.transpose() * Eigen::Map<const Vector>(SWXt.data(), d * d * p);

        Eigen::LDLT<Matrix> ldlt(lhs);
        fit.xi[nu - 1] = ldlt.solve(rhs);
        fit.beta[nu - 1] = c.R * fit.xi[nu - 1] + c.b;
    }

    finalize_fit(fit, data);
    fit.se_strong = strong_standard_errors(fit);
    return fit;
}

std::vector<Vector> standard_errors(const FitResult& fit, SeMode mode,
                                    const LrvConfig& lrv_cfg) {
    if (mode == SeMode::Strong) return strong_standard_errors(fit);

    const PvarSpec& spec = fit.spec;
    const int s = spec.seasons;
    const int d = spec.dim;
    const int N = fit.years;
    std::vector<Vector> se(s);
    for (int nu = 1; nu <= s; ++nu) {
        const int p = spec.order[nu - 1];
        if (p == 0) {
            se[nu - 1] = Vector();
            continue;
        }
        // Long-run variance of the score process X_n(nu) kron eps_hat_{ns+nu}.
        Matrix W(d * d * p, N);
        const Matrix& X = fit.regressors.X[nu - 1];
        for (int n = 0; n < N; ++n)
            W.col(n) = kron_vec(X.col(n), fit.residuals.col(n, nu));
        const Matrix psi = long_run_variance(W, lrv_cfg);

        Matrix theta_beta;
        if (fit.mode == FitMode::Unconstrained) {
            const Matrix omega_inv = sym_inverse(fit.omega_hat[nu - 1], nu);
            const Matrix oi = kron(omega_inv, Matrix::Identity(d, d));
            theta_beta = oi * psi * oi.transpose();
        } else {
            const auto& c = *spec.constraints[nu - 1];
            const Matrix sig_inv = sym_inverse(fit.sigma_tilde[nu - 1], nu);
            const Matrix bracket = sym_inverse(
                Matrix(c.R.transpose() * kron(fit.omega_hat[nu - 1], sig_inv) * c.R), nu);
            const Matrix H = bracket * c.R.transpose() *
                             kron(Matrix::Identity(d * p, d * p), sig_inv);
            const Matrix theta_xi = H * psi * H.transpose();
            theta_beta = c.R * theta_xi * c.R.transpose();
        }
        se[nu - 1] =
            (theta_beta.diagonal().cwiseMax(0.0) / static_cast<double>(N)).cwiseSqrt();
    }
    return se;
}

}  // namespace pvar
