#pragma once

#include <optional>
#include <vector>

#include "pvar/estimate.hpp"
#include "pvar/lrv.hpp"
#include "pvar/types.hpp"

namespace pvar {

/// Residual autocovariances C(h; nu), h = 0..M, and the stacked
/// autocovariance/autocorrelation vectors of Eq.-style definitions:
/// C(h; nu) = N^{-1} sum_{n=h}^{N-1} e_{ns+nu} e_{ns+nu-h}^T.
struct LagCovSet {
    int max_lag = 0;
    int seasons = 0;
    int dim = 0;
    int years = 0;

    std::vector<std::vector<Matrix>> C;  ///< [season-1][h]
    std::vector<Vector> D;               ///< sqrt of diag of C(0; nu)
    std::vector<Vector> c_vec;           ///< stacked vec C(h; nu), h = 1..M
    std::vector<Vector> r_vec;           ///< stacked autocorrelations

    /// Signed-lag accessor: C(-h; nu) = C(h; nu-h)^T with season wrap.
    Matrix cov(int season, int h) const;
};

/// Throws DegenerateVariance, InsufficientSample (requires years > M >= 1).
LagCovSet lag_covariances(const SeriesData& residuals, int max_lag);

/// Empirical Upsilon_M(nu) = -(1/N) sum_n {stack(eps_{ns+nu-1..ns+nu-M}) kron X_n^T kron I_d},
/// d^2 M x d^2 p(nu); lagged residuals with nonpositive flat index are zero.
Matrix upsilon_hat(const FitResult& fit, int season, int max_lag);

/// (1/N) sum_n eps_{ns+nu-h} eps_{ns+nu-h}^T resolved through the flat index
/// (presample terms contribute zero).
Matrix sigma_hat_lagged(const SeriesData& residuals, int season, int lag);

enum class CovMode { StrongU, StrongR, WeakU, WeakR };

/// Asymptotic covariance of residual autocovariances (Delta) and autocorrelations
/// (Nabla), per season and optionally global, with eigenvalues clipped at zero.
struct AsymptoticCov {
    CovMode mode = CovMode::StrongU;
    int max_lag = 0;

    std::vector<Matrix> delta;        ///< [season-1], d^2 M x d^2 M
    std::vector<Matrix> nabla;        ///< J^{-1/2} Delta J^{-1/2}
    std::vector<Vector> eigenvalues;  ///< sorted descending, clipped at 0
    std::vector<int> clipped;         ///< negative eigenvalues clipped per season

    std::optional<Matrix> delta_global;
    std::optional<Matrix> nabla_global;
    std::optional<Vector> eigenvalues_global;
    int clipped_global = 0;
};

/// Strong modes use the closed-form reductions (V - A^T Omega^{-1} A kron Sigma and
/// the constrained analogue); weak modes estimate the joint long-run variance of the
/// stacked score process W and assemble Delta = [Upsilon | I] Xi [Upsilon | I]^T.
/// With global = true, the year-indexed W across all seasons is one process whose
/// LRV yields every cross-season block (VAR order forced to 1 unless cfg.order set).
/// Throws SingularJ; propagates lrv errors (VAR spectral falls back to HAC).
AsymptoticCov asymptotic_cov(const FitResult& fit, int max_lag, CovMode mode,
                             const LrvConfig& lrv_cfg = {}, bool global = false);

/// Ljung-Box-McLeod factor: (N+2)/(N - l/s) if l = 0 mod s,
/// N/(N - floor((l-nu+s)/s)) otherwise. Throws InvalidFactor.
double correction_factor(int lag, int season, int years, int seasons);

struct PortmanteauStats {
    std::vector<double> q;  ///< per season
    double q_global = 0.0;  ///< sum over seasons
};

/// Q_M(nu) = N sum_l tr(C^T(l;nu) C^{-1}(0;nu) C(l;nu) C^{-1}(0;nu-l)), lags 1..max_lag;
/// corrected multiplies each lag term by the correction factor. Throws SingularC0.
PortmanteauStats portmanteau(const LagCovSet& lagcov, int max_lag, bool corrected);

struct SeasonReport {
    int season = 0;
    double q = 0.0;
    double q_star = 0.0;
    std::optional<int> df_strong;  ///< absent when not applicable
    std::optional<double> p_strong, p_strong_star;
    Vector weights;  ///< eigenvalues feeding the weighted chi-squared law
    double p_weak = 0.0, p_weak_star = 0.0;
    int clipped_eigenvalues = 0;
};

struct GlobalReport {
    double q = 0.0;
    double q_star = 0.0;
    std::optional<int> df_strong;
    std::optional<double> p_strong, p_strong_star;
    Vector weights;
    double p_weak = 0.0, p_weak_star = 0.0;
    int clipped_eigenvalues = 0;
};

struct PortmanteauReport {
    int max_lag = 0;
    CovMode mode = CovMode::StrongU;
    int years = 0;
    std::vector<SeasonReport> seasons;
    std::optional<GlobalReport> global;
    /// Per-season half-widths of the residual autocorrelation band, length d^2 M.
    std::vector<Vector> band_halfwidth;
    double band_alpha = 0.0;
};

/// Strong chi-squared p-values (absent when M <= p(nu), or when d^2 M - K(nu) <= 0
/// under constraints) and weighted chi-squared p-values through Imhof's integral.
SeasonReport p_values(double q, double q_star, int season, const AsymptoticCov& acov,
                      const PvarSpec& spec, int max_lag);
GlobalReport p_values_global(double q, double q_star, const AsymptoticCov& acov,
                             const PvarSpec& spec, int max_lag);

/// Half-widths u_alpha sqrt(Nabla(h,h)) / sqrt(N); pass alpha/2 for a 1-alpha band.
std::vector<Vector> confidence_bands(const AsymptoticCov& acov, int years, double alpha);

/// P(chi2_df > x).
double chi_squared_survival(int df, double x);
/// 1 - alpha quantile of the standard normal.
double normal_quantile(double one_minus_alpha);

/// Convenience composition: lag covariances, statistics, asymptotic covariance,
/// p-values, and optional bands in one report.
PortmanteauReport diagnose(const FitResult& fit, int max_lag, CovMode mode,
                           const LrvConfig& lrv_cfg = {}, bool global = false,
                           std::optional<double> band_alpha = {});

}  // namespace pvar
