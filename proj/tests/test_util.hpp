#pragma once

#include <random>

#include "pvar/model.hpp"
#include "pvar/types.hpp"

namespace pvar::testutil {

inline Matrix mat2(double a11, double a12, double a21, double a22) {
    Matrix m(2, 2);
    m << a11, a12, a21, a22;
    return m;
}

/// Random causal PVAR with entries scaled down until the companion radius clears 0.95.
inline PvarModel random_causal_model(int seasons, int dim, int order, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 0.4);
    PvarModel model;
    model.spec = PvarSpec::unconstrained(seasons, dim, order);
    model.phi.resize(seasons);
    for (int nu = 0; nu < seasons; ++nu) {
        for (int k = 0; k < order; ++k) {
            Matrix phi(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) phi(i, j) = normal(rng);
            model.phi[nu].push_back(phi);
        }
        Matrix sigma = Matrix::Identity(dim, dim);
        model.sigma_eps.push_back(sigma);
    }
    for (int tries = 0; tries < 60; ++tries) {
        if (is_causal(model).spectral_radius < 0.95) break;
        for (auto& season : model.phi)
            for (auto& phi : season) phi *= 0.8;
    }
    return model;
}

inline PvarModel scalar_ar1(double coeff, double sigma2 = 1.0) {
    PvarModel model;
    model.spec = PvarSpec::unconstrained(1, 1, 1);
    model.phi = {{Matrix::Constant(1, 1, coeff)}};
    model.sigma_eps = {Matrix::Constant(1, 1, sigma2)};
    return model;
}

}  // namespace pvar::testutil
