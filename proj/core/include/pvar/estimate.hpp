#pragma once

#include <vector>

#include "pvar/lrv.hpp"
#include "pvar/types.hpp"

namespace pvar {

/// Per-season design blocks Z(nu) = B(nu) X(nu) + E(nu).
struct RegressorBlocks {
    /// X[nu-1]: dp(nu) x N, column n = (Y_{ns+nu-1}^T, ..., Y_{ns+nu-p(nu)}^T)^T,
    /// presample values zero.
    std::vector<Matrix> X;
    /// Z[nu-1]: d x N, column n = Y_{ns+nu}.
    std::vector<Matrix> Z;
    /// valid[nu-1][n] is true iff column n involves only observed lags.
    std::vector<std::vector<bool>> valid;
};

/// Builds the regressor blocks; demean subtracts per-season sample means first.
/// Throws DimensionMismatch.
RegressorBlocks build_regressors(const SeriesData& data, const PvarSpec& spec,
                                 bool demean = false);

enum class FitMode { Unconstrained, Constrained };

struct FitOptions {
    /// Exclude columns that reference presample values from the normal equations
    /// (for p(nu) <= s this is exactly the year-0 columns).
    bool drop_first_year = false;
    /// Condition-number threshold for declaring a design singular.
    double singular_threshold = 1e12;
};

struct FitResult {
    PvarSpec spec;
    FitMode mode = FitMode::Unconstrained;
    int years = 0;

    std::vector<Vector> beta;  ///< [season-1], length d^2 p(nu)
    std::vector<Vector> xi;    ///< constrained mode only, length K(nu)

    /// Residuals with the convention eps_hat = 0 for ns+nu <= p(nu).
    SeriesData residuals;

    std::vector<Matrix> sigma_tilde;  ///< divisor N - d p(nu)
    std::vector<Matrix> sigma_hat;    ///< divisor N
    std::vector<Matrix> omega_hat;    ///< X X^T / N

    std::vector<Vector> se_strong;  ///< filled by fit_*
    std::vector<Vector> se_weak;    ///< filled on demand by standard_errors

    RegressorBlocks regressors;

    /// Phi_k(nu) reshaped from beta(nu).
    Matrix coeff(int season, int k) const;
    /// Model with the fitted coefficients; innovation covariance sigma_tilde.
    PvarModel to_model(std::vector<Vector> mu = {}) const;
};

/// Per-season OLS through the normal equations (pivoted solve, no explicit inverse).
/// Throws SingularDesign.
FitResult fit_ols(const SeriesData& data, const PvarSpec& spec, const FitOptions& opts = {});

/// Two-step feasible GLS under the linear constraints of the spec: OLS first stage
/// for Sigma_tilde, then the constrained estimator; beta = R xi + b exactly.
/// Throws MissingConstraints, SingularDesign, SingularGlsSystem.
FitResult fit_constrained(const SeriesData& data, const PvarSpec& spec,
                          const FitOptions& opts = {});

enum class SeMode { Strong, Weak };

/// Per-coefficient standard errors of beta(nu).
/// Strong: sqrt(diag(Omega^{-1} kron Sigma_tilde)/N) (constrained analogue through R).
/// Weak:   sandwich with the long-run variance of X_n(nu) kron eps_hat.
std::vector<Vector> standard_errors(const FitResult& fit, SeMode mode,
                                    const LrvConfig& lrv_cfg = {});

}  // namespace pvar
