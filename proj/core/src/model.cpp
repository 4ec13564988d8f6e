#include "pvar/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

namespace pvar {

namespace {

// Phi_k(nu) extended by zero outside 1 <= k <= p(nu).
Matrix coeff_or_zero(const PvarModel& model, int season, int k) {
    const int d = model.spec.dim;
    if (k < 1 || k > model.spec.order[season - 1]) return Matrix::Zero(d, d);
    return model.coeff(season, k);
}

std::vector<Matrix> cholesky_factors(const PvarModel& model) {
    std::vector<Matrix> lower;
    lower.reserve(model.spec.seasons);
    for (int nu = 1; nu <= model.spec.seasons; ++nu) {
        Eigen::LLT<Matrix> llt(model.sigma_eps[nu - 1]);
        if (llt.info() != Eigen::Success)
            throw CholeskyFailure("innovation covariance at season " + std::to_string(nu) +
                                  " is not positive definite");
        lower.push_back(llt.matrixL());
    }
    return lower;
}

}  // namespace

CompanionForm companion_form(const PvarModel& model) {
    model.validate();
    const int s = model.spec.seasons;
    const int d = model.spec.dim;
    const int pmax = model.spec.max_order();
    const int pstar = (pmax + s - 1) / s;

    CompanionForm out;
    out.phi0 = Matrix::Identity(d * s, d * s);
    // Row block i holds the equation of season s - i + 1; the year-n stacked vector
    // orders seasons s, s-1, ..., 1.
    for (int i = 1; i <= s; ++i) {
        const int season = s - i + 1;
        for (int j = i + 1; j <= s; ++j)
            out.phi0.block((i - 1) * d, (j - 1) * d, d, d) =
                -coeff_or_zero(model, season, j - i);
    }
    for (int k = 1; k <= pstar; ++k) {
        Matrix phik = Matrix::Zero(d * s, d * s);
        for (int i = 1; i <= s; ++i) {
            const int season = s - i + 1;
            for (int j = 1; j <= s; ++j)
                phik.block((i - 1) * d, (j - 1) * d, d, d) =
                    coeff_or_zero(model, season, k * s + j - i);
        }
        out.phi.push_back(std::move(phik));
    }
    return out;
}

CausalityCheck is_causal(const PvarModel& model, double tol) {
    const CompanionForm cf = companion_form(model);
    const int ds = static_cast<int>(cf.phi0.rows());
    const int pstar = static_cast<int>(cf.phi.size());
    if (pstar == 0) return {true, 0.0};

    // Phi0* is unit triangular, hence always invertible.
    Eigen::PartialPivLU<Matrix> lu(cf.phi0);
    Matrix big = Matrix::Zero(ds * pstar, ds * pstar);
    for (int k = 0; k < pstar; ++k)
        big.block(0, k * ds, ds, ds) = lu.solve(cf.phi[k]);
    for (int k = 1; k < pstar; ++k)
        big.block(k * ds, (k - 1) * ds, ds, ds) = Matrix::Identity(ds, ds);

    Eigen::EigenSolver<Matrix> es(big, false);
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    return {radius < 1.0 - tol, radius};
}

MaCoefficients ma_infinity(const PvarModel& model, int max_lag) {
    const auto check = is_causal(model);
    if (!check.causal) throw NotCausal(check.spectral_radius);
    const int s = model.spec.seasons;
    const int d = model.spec.dim;

    MaCoefficients ma;
    ma.f.assign(s, std::vector<Matrix>(max_lag + 1, Matrix::Zero(d, d)));
    for (int nu = 1; nu <= s; ++nu) ma.f[nu - 1][0] = Matrix::Identity(d, d);
    for (int i = 1; i <= max_lag; ++i) {
        for (int nu = 1; nu <= s; ++nu) {
            Matrix fi = Matrix::Zero(d, d);
            const int kmax = std::min(i, model.spec.order[nu - 1]);
            for (int k = 1; k <= kmax; ++k)
                fi += model.coeff(nu, k) * ma.f[wrap_season(nu - k, s) - 1][i - k];
            ma.f[nu - 1][i] = std::move(fi);
        }
    }
    return ma;
}

Matrix noise_series(const PvarModel& model, int years, NoiseKind kind, std::mt19937_64& rng) {
    const int s = model.spec.seasons;
    const int d = model.spec.dim;
    const int n = years * s;
    const auto lower = cholesky_factors(model);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix eps(d, n);
    if (kind == NoiseKind::StrongGaussian) {
        Vector eta(d);
        for (int t = 1; t <= n; ++t) {
            for (int i = 0; i < d; ++i) eta(i) = normal(rng);
            eps.col(t - 1) = lower[season_of(t, s) - 1] * eta;
        }
    } else {
        // Two presample eta draws feed the triple products at t = 1 and t = 2.
        Vector prev2(d), prev1(d), cur(d), g(d);
        for (int i = 0; i < d; ++i) prev2(i) = normal(rng);
        for (int i = 0; i < d; ++i) prev1(i) = normal(rng);
        for (int t = 1; t <= n; ++t) {
            for (int i = 0; i < d; ++i) cur(i) = normal(rng);
            g = cur.cwiseProduct(prev1).cwiseProduct(prev2);
            eps.col(t - 1) = lower[season_of(t, s) - 1] * g;
            prev2.swap(prev1);
            prev1.swap(cur);
        }
    }
    return eps;
}

Matrix filter_recursion(const PvarModel& model, const Matrix& eps) {
    const int s = model.spec.seasons;
    const int d = model.spec.dim;
    const int n = static_cast<int>(eps.cols());
    if (eps.rows() != d) throw DimensionMismatch("noise dimension does not match the model");

    Matrix x = Matrix::Zero(d, n);
    for (int t = 1; t <= n; ++t) {
        const int nu = season_of(t, s);
        Vector acc = eps.col(t - 1);
        for (int k = 1; k <= model.spec.order[nu - 1]; ++k)
            if (t - k >= 1) acc += model.coeff(nu, k) * x.col(t - k - 1);
        x.col(t - 1) = acc;
    }
    return x;
}

SeriesData simulate(const PvarModel& model, int years, NoiseKind kind, int burn_in_years,
                    std::uint64_t seed) {
    if (years < 1) throw Error("years must be >= 1");
    if (burn_in_years < 0) throw Error("burn-in must be nonnegative");
    const auto check = is_causal(model);
    if (!check.causal) throw NotCausal(check.spectral_radius);

    const int s = model.spec.seasons;
    const int d = model.spec.dim;
    std::mt19937_64 rng(seed);
    const Matrix eps = noise_series(model, burn_in_years + years, kind, rng);
    const Matrix x = filter_recursion(model, eps);

    Matrix out = x.rightCols(years * s);
    if (!model.mu.empty()) {
        for (int n = 0; n < years; ++n)
            for (int nu = 1; nu <= s; ++nu)
                out.col(flat_index(n, nu, s) - 1) += model.mu[nu - 1];
    }
    return SeriesData(std::move(out), s);
}

Matrix forecast(const PvarModel& model, const SeriesData& history, int horizon) {
    model.validate();
    if (horizon < 1) throw Error("horizon must be >= 1");
    const int s = model.spec.seasons;
    const int d = model.spec.dim;
    const int n = history.length();
    if (history.dim() != d) throw DimensionMismatch("history dimension does not match");
    if (n < model.spec.max_order())
        throw InsufficientHistory("history shorter than the maximal order");

    auto mean_of = [&](int t) -> Vector {
        if (model.mu.empty()) return Vector::Zero(d);
        return model.mu[season_of(t, s) - 1];
    };

    Matrix fc(d, horizon);
    // Demeaned lag lookup across the observed/forecast boundary.
    auto lag_value = [&](int t) -> Vector {
        if (t <= 0) return Vector::Zero(d);
        if (t <= n) return history.col(t) - mean_of(t);
        return fc.col(t - n - 1) - mean_of(t);
    };
    for (int h = 1; h <= horizon; ++h) {
        const int t = n + h;
        const int nu = season_of(t, s);
        Vector acc = Vector::Zero(d);
        for (int k = 1; k <= model.spec.order[nu - 1]; ++k) acc += model.coeff(nu, k) * lag_value(t - k);
        fc.col(h - 1) = acc + mean_of(t);
    }
    return fc;
}

}  // namespace pvar
