#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pvar/errors.hpp"

namespace pvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Maps an arbitrary season offset onto {1..s}.
inline int wrap_season(int season, int seasons) {
    int r = (season - 1) % seasons;
    if (r < 0) r += seasons;
    return r + 1;
}

/// 1-based flat time index of (year, season), year 0-based, season in {1..s}.
inline int flat_index(int year, int season, int seasons) { return year * seasons + season; }

inline int season_of(int t, int seasons) { return (t - 1) % seasons + 1; }
inline int year_of(int t, int seasons) { return (t - 1) / seasons; }

/// Linear restriction beta(nu) = R xi + b on the stacked coefficient vector of one season.
struct SeasonConstraint {
    Matrix R;  ///< d^2 p(nu) x K, full column rank
    Vector b;  ///< d^2 p(nu)
};

/// Model skeleton: season count, dimension, per-season AR orders, optional constraints.
struct PvarSpec {
    int seasons = 1;
    int dim = 1;
    std::vector<int> order;  ///< p(nu), size seasons
    std::vector<std::optional<SeasonConstraint>> constraints;  ///< empty or size seasons

    int max_order() const;
    /// Number of stacked coefficients d^2 p(nu) for one season.
    int coeff_count(int season) const { return dim * dim * order[season - 1]; }
    bool constrained() const;
    /// Throws Error on an ill-formed spec (bad sizes, rank-deficient R).
    void validate() const;

    static PvarSpec unconstrained(int seasons, int dim, int order);
    static PvarSpec unconstrained(int seasons, int dim, std::vector<int> order);
};

/// A concrete PVAR parameterization on top of a PvarSpec.
///
/// The recursion applies to the demeaned process: with X_t = Y_t - mu(season(t)),
///   X_{ns+nu} = sum_k Phi_k(nu) X_{ns+nu-k} + eps_{ns+nu}.
struct PvarModel {
    PvarSpec spec;
    std::vector<std::vector<Matrix>> phi;  ///< [season-1][k-1], each d x d
    std::vector<Matrix> sigma_eps;         ///< [season-1], d x d SPD
    std::vector<Vector> mu;                ///< [season-1], length d (defaults to zero)

    const Matrix& coeff(int season, int k) const { return phi[season - 1][k - 1]; }
    void validate() const;
};

/// d-dimensional series of n = N*s observations with dual flat/(year, season) indexing.
class SeriesData {
public:
    SeriesData() = default;
    SeriesData(Matrix values, int seasons);

    int dim() const { return static_cast<int>(values_.rows()); }
    int seasons() const { return seasons_; }
    int years() const { return seasons_ == 0 ? 0 : static_cast<int>(values_.cols()) / seasons_; }
    int length() const { return static_cast<int>(values_.cols()); }

    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }

    /// Column by flat time t in {1..n}.
    Matrix::ConstColXpr col(int t) const { return values_.col(t - 1); }
    /// Column by (year 0..N-1, season 1..s).
    Matrix::ConstColXpr col(int year, int season) const {
        return values_.col(flat_index(year, season, seasons_) - 1);
    }

    /// Per-season sample means, one length-d vector per season.
    std::vector<Vector> seasonal_means() const;
    /// Copy with per-season sample means removed.
    SeriesData demeaned() const;

private:
    Matrix values_;  // d x n
    int seasons_ = 0;
};

/// Causal MA(infinity) coefficients F_i(nu), i = 0..max_lag.
struct MaCoefficients {
    std::vector<std::vector<Matrix>> f;  ///< [season-1][i]
    const Matrix& at(int season, int lag) const { return f[season - 1][lag]; }
    int max_lag() const { return static_cast<int>(f.front().size()) - 1; }
};

}  // namespace pvar
