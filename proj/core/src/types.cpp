#include "pvar/types.hpp"

#include <Eigen/QR>
#include <algorithm>

namespace pvar {

int PvarSpec::max_order() const {
    return order.empty() ? 0 : *std::max_element(order.begin(), order.end());
}

bool PvarSpec::constrained() const {
    for (const auto& c : constraints)
        if (c.has_value()) return true;
    return false;
}

void PvarSpec::validate() const {
    if (seasons < 1) throw Error("season count must be >= 1");
    if (dim < 1) throw Error("series dimension must be >= 1");
    if (static_cast<int>(order.size()) != seasons)
        throw Error("order vector must have one entry per season");
    for (int p : order)
        if (p < 0) throw Error("autoregressive orders must be nonnegative");
    if (!constraints.empty() && static_cast<int>(constraints.size()) != seasons)
        throw Error("constraints must be empty or have one entry per season");
    for (int nu = 1; nu <= seasons; ++nu) {
        if (constraints.empty() || !constraints[nu - 1].has_value()) continue;
        const auto& c = *constraints[nu - 1];
        const int rows = coeff_count(nu);
        if (c.R.rows() != rows || c.b.size() != rows)
            throw Error("constraint shapes do not match d^2 p(nu) at season " +
                        std::to_string(nu));
        if (c.R.cols() < 1 || c.R.cols() > rows)
            throw Error("constraint rank K(nu) must satisfy 1 <= K <= d^2 p(nu)");
        Eigen::ColPivHouseholderQR<Matrix> qr(c.R);
        if (qr.rank() != c.R.cols())
            throw Error("constraint matrix R is rank deficient at season " +
                        std::to_string(nu));
    }
}

PvarSpec PvarSpec::unconstrained(int seasons, int dim, int order) {
    return unconstrained(seasons, dim, std::vector<int>(seasons, order));
}

PvarSpec PvarSpec::unconstrained(int seasons, int dim, std::vector<int> order) {
    PvarSpec spec;
    spec.seasons = seasons;
    spec.dim = dim;
    spec.order = std::move(order);
    spec.validate();
    return spec;
}

void PvarModel::validate() const {
    spec.validate();
    const int s = spec.seasons;
    const int d = spec.dim;
    if (static_cast<int>(phi.size()) != s || static_cast<int>(sigma_eps.size()) != s)
        throw Error("coefficient storage must have one entry per season");
    if (!mu.empty() && static_cast<int>(mu.size()) != s)
        throw Error("mu must be empty or have one entry per season");
    for (int nu = 1; nu <= s; ++nu) {
        if (static_cast<int>(phi[nu - 1].size()) != spec.order[nu - 1])
            throw Error("coefficient count does not match the order at season " +
                        std::to_string(nu));
        for (const auto& m : phi[nu - 1])
            if (m.rows() != d || m.cols() != d)
                throw Error("coefficient matrices must be d x d");
        const Matrix& sig = sigma_eps[nu - 1];
        if (sig.rows() != d || sig.cols() != d)
            throw Error("innovation covariance must be d x d");
        if ((sig - sig.transpose()).cwiseAbs().maxCoeff() > 1e-10)
            throw Error("innovation covariance not symmetric at season " +
                        std::to_string(nu));
        Eigen::SelfAdjointEigenSolver<Matrix> es(sig);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw Error("innovation covariance not positive definite at season " +
                        std::to_string(nu));
        if (!mu.empty() && mu[nu - 1].size() != d)
            throw Error("mu entries must have length d");
    }
}

SeriesData::SeriesData(Matrix values, int seasons) : values_(std::move(values)), seasons_(seasons) {
    if (seasons_ < 1) throw Error("season count must be >= 1");
    if (values_.cols() % seasons_ != 0)
        throw Error("series length must be an exact multiple of the season count");
}

std::vector<Vector> SeriesData::seasonal_means() const {
    const int N = years();
    std::vector<Vector> mu(seasons_, Vector::Zero(dim()));
    for (int nu = 1; nu <= seasons_; ++nu) {
        for (int n = 0; n < N; ++n) mu[nu - 1] += col(n, nu);
        if (N > 0) mu[nu - 1] /= static_cast<double>(N);
    }
    return mu;
}

SeriesData SeriesData::demeaned() const {
    const auto mu = seasonal_means();
    Matrix out = values_;
    const int N = years();
    for (int nu = 1; nu <= seasons_; ++nu)
        for (int n = 0; n < N; ++n)
            out.col(flat_index(n, nu, seasons_) - 1) -= mu[nu - 1];
    return SeriesData(std::move(out), seasons_);
}

}  // namespace pvar
