#pragma once

#include <cstdint>

#include "pvar/types.hpp"

namespace pvar {

/// Distribution of sum_i xi_i Z_i^2 with Z_i iid standard normal and xi_i >= 0.
///
/// Construction clips negative weights to zero and drops weights below
/// 1e-12 times the largest weight. Throws EmptyWeights if nothing remains.
class WeightedChiSq {
public:
    explicit WeightedChiSq(const Vector& weights);

    const Vector& weights() const { return weights_; }
    /// Number of input weights that were negative and clipped.
    int clipped_count() const { return clipped_; }
    double sum() const { return weights_.sum(); }

private:
    Vector weights_;
    int clipped_ = 0;
};

struct TailProbability {
    double value = 0.0;
    /// False if the adaptive quadrature hit the panel cap before reaching tol;
    /// value then holds the best estimate.
    bool converged = true;
};

/// P(sum xi_i Z_i^2 > x) by numerical inversion of the characteristic function
/// (Imhof's integral), absolute tolerance tol, result clamped to [0,1].
TailProbability survival(const WeightedChiSq& dist, double x, double tol = 1e-6);

/// Monte Carlo estimate of the same tail probability; deterministic given seed.
double mc_survival(const WeightedChiSq& dist, double x, std::int64_t nsamples,
                   std::uint64_t seed);

}  // namespace pvar
