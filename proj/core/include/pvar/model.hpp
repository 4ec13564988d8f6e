#pragma once

#include <cstdint>
#include <random>

#include "pvar/types.hpp"

namespace pvar {

/// Stacked year-indexed VAR form Phi0* Y*_n = sum_k Phik* Y*_{n-k} + eps*_n,
/// with Y*_n = (Y_{ns+s}^T, ..., Y_{ns+1}^T)^T and p* = ceil(max p(nu) / s).
struct CompanionForm {
    Matrix phi0;              ///< ds x ds, unit upper triangular in d x d blocks
    std::vector<Matrix> phi;  ///< p* matrices, each ds x ds
};

CompanionForm companion_form(const PvarModel& model);

struct CausalityCheck {
    bool causal;
    double spectral_radius;
};

/// Checks the causality condition via the spectral radius of the companion matrix
/// of the VAR(p*) in B_k = (Phi0*)^{-1} Phik*. Causal iff radius < 1 - tol.
CausalityCheck is_causal(const PvarModel& model, double tol = 1e-8);

/// F_i(nu) by the recursion F_i(nu) = sum_{k<=min(i,p(nu))} Phi_k(nu) F_{i-k}(nu-k),
/// seasons wrapped modulo s; F_0(nu) = I. Throws NotCausal.
MaCoefficients ma_infinity(const PvarModel& model, int max_lag);

enum class NoiseKind { StrongGaussian, WeakProduct };

/// Innovation series eps_t for t = 1..years*s, drawn from a caller-owned RNG.
///
/// StrongGaussian: eps_t = M_nu^T eta_t, eta_t iid N(0, I_d), M_nu^T M_nu = Sigma_eps(nu).
/// WeakProduct:    the componentwise triple product eta_{i,t} eta_{i,t-1} eta_{i,t-2}
///                 mixed by M_nu^T; the two presample eta draws are taken from rng first.
Matrix noise_series(const PvarModel& model, int years, NoiseKind kind, std::mt19937_64& rng);

/// Runs the zero-mean recursion over the columns of eps (zero presample values).
Matrix filter_recursion(const PvarModel& model, const Matrix& eps);

/// Simulates burn_in_years + years, discards the burn-in, adds mu(nu).
/// Deterministic given seed. Throws NotCausal, CholeskyFailure.
SeriesData simulate(const PvarModel& model, int years, NoiseKind kind, int burn_in_years,
                    std::uint64_t seed);

/// Recursive plug-in forecasts, d x horizon. Observed history is used for lags at or
/// before the end of `history`, prior forecasts otherwise. Throws InsufficientHistory.
Matrix forecast(const PvarModel& model, const SeriesData& history, int horizon);

}  // namespace pvar
