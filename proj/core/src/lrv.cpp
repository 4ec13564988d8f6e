#include "pvar/lrv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "pvar/detail/linalg.hpp"

namespace pvar {

namespace {

Matrix demean_rows(const Matrix& w) {
    Matrix out = w;
    const Vector mean = w.rowwise().mean();
    out.colwise() -= mean;
    return out;
}

struct VarFit {
    Matrix a_sum;     // sum of A_i
    Matrix sigma_u;   // residual covariance
    double log_det = 0.0;
};

// Fit VAR(r) on columns [start, n) of the demeaned series by ridge-regularized
// least squares; start >= r.
VarFit fit_var(const Matrix& w, int r, int start, double ridge_rel) {
    const int q = static_cast<int>(w.rows());
    const int n = static_cast<int>(w.cols());
    const int T = n - start;

    VarFit out;
    if (r == 0) {
        out.a_sum = Matrix::Zero(q, q);
        out.sigma_u = (w.rightCols(T) * w.rightCols(T).transpose()) / static_cast<double>(T);
    } else {
        Matrix X(q * r, T);
        for (int t = 0; t < T; ++t)
            for (int i = 1; i <= r; ++i)
                X.block((i - 1) * q, t, q, 1) = w.col(start + t - i);
        const Matrix Y = w.rightCols(T);

        Matrix G = X * X.transpose();
        const double scale = G.diagonal().mean();
        G.diagonal().array() += ridge_rel * std::max(scale, 1e-300);

        Eigen::LDLT<Matrix> ldlt(G);
        if (ldlt.info() != Eigen::Success)
            throw InsufficientSample("auxiliary VAR normal equations are not solvable");
        const Matrix At = ldlt.solve(X * Y.transpose());  // (qr x q)
        const Matrix A = At.transpose();                  // q x qr

        const Matrix U = Y - A * X;
        out.sigma_u = (U * U.transpose()) / static_cast<double>(T);
        out.a_sum = Matrix::Zero(q, q);
        for (int i = 0; i < r; ++i) out.a_sum += A.middleCols(i * q, q);
    }
    Eigen::PartialPivLU<Matrix> lu(out.sigma_u);
    double log_det = 0.0;
    const auto& lu_mat = lu.matrixLU();
    bool bad = false;
    for (int i = 0; i < q; ++i) {
        const double piv = std::abs(lu_mat(i, i));
        if (piv <= 0.0) bad = true;
        log_det += std::log(std::max(piv, 1e-300));
    }
    out.log_det = bad ? -std::numeric_limits<double>::infinity() : log_det;
    return out;
}

}  // namespace

int default_hac_bandwidth(int n) {
    return static_cast<int>(std::floor(4.0 * std::pow(n / 100.0, 2.0 / 9.0)));
}

Matrix var_spectral_lrv(const Matrix& w, const LrvConfig& cfg) {
    const int q = static_cast<int>(w.rows());
    const int n = static_cast<int>(w.cols());
    if (q < 1 || n < 2) throw InsufficientSample("need a q >= 1 series of length >= 2");

    const Matrix wd = demean_rows(w);

    int r = 0;
    if (cfg.order.has_value()) {
        r = *cfg.order;
        if (r < 0) throw Error("fixed VAR order must be nonnegative");
        if (n <= q * r + 1) throw InsufficientSample("sample too short for the VAR order");
    } else {
        if (cfg.max_order < 1) throw Error("max_order must be >= 1");
        if (n <= q * cfg.max_order + 1)
            throw InsufficientSample("sample too short for the VAR order scan");
        // Order selection on the common sample so AIC values are comparable.
        double best = std::numeric_limits<double>::infinity();
        r = 1;
        for (int cand = 1; cand <= cfg.max_order; ++cand) {
            const VarFit f = fit_var(wd, cand, cfg.max_order, cfg.ridge);
            const double aic = f.log_det + 2.0 * cand * q * q / static_cast<double>(n);
            if (aic < best - 1e-12) {  // ties break toward smaller order
                best = aic;
                r = cand;
            }
        }
    }

    const VarFit f = fit_var(wd, r, r, cfg.ridge);
    if (r == 0) return detail::clip_psd(f.sigma_u);

    const Matrix a1 = Matrix::Identity(q, q) - f.a_sum;
    Eigen::PartialPivLU<Matrix> lu(a1);
    if (lu.rcond() < 1e-10) throw NearSingularA1("A(1) is numerically singular");
    const Matrix t1 = lu.solve(f.sigma_u);
    const Matrix xi = lu.solve(t1.transpose()).transpose();
    return detail::clip_psd(xi);
}

Matrix hac_lrv(const Matrix& w, const LrvConfig& cfg) {
    const int n = static_cast<int>(w.cols());
    if (w.rows() < 1 || n < 2) throw InsufficientSample("need a q >= 1 series of length >= 2");
    const int b = cfg.bandwidth.value_or(default_hac_bandwidth(n));
    if (b < 0) throw Error("bandwidth must be nonnegative");
    if (n <= b + 1) throw InsufficientSample("sample too short for the bandwidth");

    const Matrix wd = demean_rows(w);
    Matrix xi = (wd * wd.transpose()) / static_cast<double>(n);
    for (int h = 1; h <= b; ++h) {
        const double weight = 1.0 - static_cast<double>(h) / (b + 1);
        const Matrix gamma =
            (wd.rightCols(n - h) * wd.leftCols(n - h).transpose()) / static_cast<double>(n);
        xi += weight * (gamma + gamma.transpose());
    }
    return detail::clip_psd(xi);
}

Matrix long_run_variance(const Matrix& w, const LrvConfig& cfg) {
    if (cfg.method == LrvConfig::Method::HacBartlett) return hac_lrv(w, cfg);
    try {
        return var_spectral_lrv(w, cfg);
    } catch (const NearSingularA1&) {
        return hac_lrv(w, cfg);
    }
}

}  // namespace pvar
