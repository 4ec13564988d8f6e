#pragma once

#include <optional>

#include "pvar/types.hpp"

namespace pvar {

/// Long-run variance estimator configuration.
struct LrvConfig {
    enum class Method { VarSpectral, HacBartlett };

    Method method = Method::VarSpectral;
    /// Maximum auxiliary VAR order scanned by AIC.
    int max_order = 5;
    /// Fixed order overriding AIC selection; 0 reduces to the sample covariance.
    std::optional<int> order;
    /// Relative ridge coefficient; the effective ridge is this times the mean
    /// diagonal of the regressor Gram matrix.
    double ridge = 1e-6;
    /// HAC bandwidth; defaults to floor(4 (n/100)^{2/9}).
    std::optional<int> bandwidth;
};

/// VAR spectral estimator: fit W_n = sum A_i W_{n-i} + u_n by ridge-regularized least
/// squares, order selected by AIC in {1..max_order}; returns A(1)^{-1} Su A(1)^{-T},
/// symmetrized and eigenvalue-clipped at zero. W is q x n, demeaned internally.
/// Throws InsufficientSample, NearSingularA1.
Matrix var_spectral_lrv(const Matrix& w, const LrvConfig& cfg = {});

/// Bartlett-kernel HAC estimator Gamma0 + sum w_h (Gamma_h + Gamma_h^T),
/// w_h = 1 - h/(b+1), on the demeaned series; eigenvalue-clipped at zero.
Matrix hac_lrv(const Matrix& w, const LrvConfig& cfg = {});

/// Dispatch on cfg.method; a NearSingularA1 failure of the VAR spectral estimator
/// falls back to HAC.
Matrix long_run_variance(const Matrix& w, const LrvConfig& cfg = {});

int default_hac_bandwidth(int n);

}  // namespace pvar
