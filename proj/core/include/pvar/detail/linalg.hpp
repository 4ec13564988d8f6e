#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <limits>

#include "pvar/types.hpp"

namespace pvar::detail {

inline Vector kron_vec(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Condition estimate of a symmetric PSD matrix (inf when not PD).
inline double sym_condition(const Matrix& g) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

/// Symmetric inverse through Cholesky; returns false on failure.
inline bool try_sym_inverse(const Matrix& g, Matrix& out) {
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) return false;
    out = llt.solve(Matrix::Identity(g.rows(), g.cols()));
    return true;
}

/// Symmetric inverse square root; returns false when not positive definite.
inline bool try_sym_inv_sqrt(const Matrix& g, Matrix& out) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0) return false;
    out = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose();
    return true;
}

/// Symmetrize and clip eigenvalues at zero; reports how many were negative.
inline Matrix clip_psd(const Matrix& g, int* clipped = nullptr) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
    Vector ev = es.eigenvalues();
    int count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) < 0.0) {
            ev(i) = 0.0;
            ++count;
        }
    if (clipped) *clipped = count;
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Eigenvalues of the symmetrized matrix, sorted descending, clipped at zero.
inline Vector clipped_eigenvalues(const Matrix& g, int* clipped = nullptr) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()),
                                             Eigen::EigenvaluesOnly);
    Vector ev = es.eigenvalues();
    int count = 0;
    Vector out(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        double v = ev(ev.size() - 1 - i);  // descending
        if (v < 0.0) {
            v = 0.0;
            ++count;
        }
        out(i) = v;
    }
    if (clipped) *clipped = count;
    return out;
}

}  // namespace pvar::detail
