#include "pvar/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace pvar {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gauss-Kronrod 15-point rule with the embedded 7-point Gauss rule on [-1, 1].
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct ImhofIntegrand {
    const Vector& weights;
    double x;

    double operator()(double u) const {
        if (u <= 0.0) return 0.5 * (weights.sum() - x);
        double theta = -0.5 * x * u;
        double log_rho = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            const double a = weights(i) * u;
            theta += 0.5 * std::atan(a);
            log_rho += 0.25 * std::log1p(a * a);
        }
        return std::sin(theta) * std::exp(-log_rho) / u;
    }
};

struct PanelEstimate {
    double value;
    double error;
};

template <typename F>
PanelEstimate gauss_kronrod(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double kronrod = 0.0, gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double node = kKronrodNodes[i];
        const double fv =
            (i == 7) ? f(c) : f(c - h * node) + f(c + h * node);
        kronrod += kKronrodWeights[i] * fv;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fv;
    }
    return {kronrod * h, std::abs(kronrod - gauss) * h};
}

// Truncation point: the unconditional envelope bound is combined with an
// integration-by-parts bound that exploits the sin oscillation for x > 0.
double truncation_point(const Vector& weights, double x, double tol) {
    const int m = static_cast<int>(weights.size());
    const double k = 0.5 * m;
    double log_prod_sqrt = 0.0;
    for (int i = 0; i < m; ++i) log_prod_sqrt += 0.5 * std::log(weights(i));

    // (pi k U^k prod sqrt(xi))^{-1} <= tol  =>  U from the log form.
    const double log_u_abs =
        (-std::log(kPi * k) - log_prod_sqrt - std::log(tol)) / k;
    const double u_abs = std::exp(std::min(log_u_abs, 600.0));
    double u = u_abs;

    if (x > 0.0) {
        // Past the point where the arctan terms decay, theta' <= -x/4 and the
        // oscillatory tail is bounded by 8 g(U) / (pi x).
        double u_osc = 1.0;
        for (int iter = 0; iter < 80; ++iter) {
            double slope = 0.0, log_rho = 0.0;
            for (int i = 0; i < m; ++i) {
                const double a = weights(i) * u_osc;
                slope += 0.5 * weights(i) / (1.0 + a * a);
                log_rho += 0.25 * std::log1p(a * a);
            }
            const double g = std::exp(-log_rho) / u_osc;
            if (slope <= 0.25 * x && 8.0 * g / (kPi * x) <= tol) break;
            u_osc *= 2.0;
            if (u_osc >= u_abs) break;
        }
        u = std::min(u_abs, u_osc);
    }
    return std::max(u, 1e-3);
}

}  // namespace

WeightedChiSq::WeightedChiSq(const Vector& weights) {
    if (weights.size() == 0) throw EmptyWeights("no weights given");
    Vector cleaned = weights;
    for (Eigen::Index i = 0; i < cleaned.size(); ++i)
        if (cleaned(i) < 0.0) {
            cleaned(i) = 0.0;
            ++clipped_;
        }
    const double top = cleaned.maxCoeff();
    if (top <= 0.0) throw EmptyWeights("all weights are nonpositive");
    const double floor = 1e-12 * top;
    std::vector<double> kept;
    kept.reserve(cleaned.size());
    for (Eigen::Index i = 0; i < cleaned.size(); ++i)
        if (cleaned(i) >= floor) kept.push_back(cleaned(i));
    weights_ = Eigen::Map<const Vector>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

TailProbability survival(const WeightedChiSq& dist, double x, double tol) {
    if (!(tol > 0.0)) throw Error("tolerance must be positive");
    if (x <= 0.0) return {1.0, true};

    const Vector& w = dist.weights();
    const ImhofIntegrand f{w, x};
    const double upper = truncation_point(w, x, 0.5 * tol);

    // Adaptive bisection with a fixed Gauss-Kronrod rule per panel; panels that
    // fail their share of the error budget are split, up to the panel cap.
    constexpr int kMaxPanels = 10000;
    struct Panel {
        double a, b;
    };
    std::vector<Panel> stack;
    const int initial = 32;
    stack.reserve(256);
    for (int i = initial - 1; i >= 0; --i)
        stack.push_back({upper * i / initial, upper * (i + 1) / initial});

    const double budget = 0.5 * tol;
    double total = 0.0;
    int panels = 0;
    bool converged = true;
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const PanelEstimate est = gauss_kronrod(f, p.a, p.b);
        const double share = budget * (p.b - p.a) / upper;
        if (est.error <= share || panels >= kMaxPanels) {
            if (est.error > share) converged = false;
            total += est.value;
            ++panels;
        } else {
            const double mid = 0.5 * (p.a + p.b);
            stack.push_back({mid, p.b});
            stack.push_back({p.a, mid});
        }
    }

    double prob = 0.5 + total / kPi;
    prob = std::clamp(prob, 0.0, 1.0);
    return {prob, converged};
}

double mc_survival(const WeightedChiSq& dist, double x, std::int64_t nsamples,
                   std::uint64_t seed) {
    if (nsamples < 1) throw Error("nsamples must be >= 1");
    const Vector& w = dist.weights();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::int64_t hits = 0;
    for (std::int64_t k = 0; k < nsamples; ++k) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double z = normal(rng);
            sum += w(i) * z * z;
        }
        if (sum > x) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(nsamples);
}

}  // namespace pvar
