#pragma once

#include <stdexcept>
#include <string>

namespace pvar {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The autoregressive polynomial has a root on or inside the unit disk.
class NotCausal : public Error {
public:
    explicit NotCausal(double spectral_radius)
        : Error("model is not causal (companion spectral radius " +
                std::to_string(spectral_radius) + ")"),
          spectral_radius(spectral_radius) {}
    double spectral_radius;
};

class CholeskyFailure : public Error {
public:
    using Error::Error;
};

class SingularDesign : public Error {
public:
    SingularDesign(int season, double condition)
        : Error("singular design matrix at season " + std::to_string(season) +
                " (condition estimate " + std::to_string(condition) + ")"),
          season(season),
          condition(condition) {}
    int season;
    double condition;
};

class SingularGlsSystem : public Error {
public:
    explicit SingularGlsSystem(int season)
        : Error("singular GLS system at season " + std::to_string(season)), season(season) {}
    int season;
};

class MissingConstraints : public Error {
public:
    using Error::Error;
};

class InsufficientHistory : public Error {
public:
    using Error::Error;
};

class InsufficientSample : public Error {
public:
    using Error::Error;
};

/// A(1) = I - sum A_i of the auxiliary VAR is numerically singular.
class NearSingularA1 : public Error {
public:
    using Error::Error;
};

class DegenerateVariance : public Error {
public:
    DegenerateVariance(int season, int component)
        : Error("nonpositive residual variance at season " + std::to_string(season) +
                ", component " + std::to_string(component)),
          season(season),
          component(component) {}
    int season;
    int component;
};

class SingularC0 : public Error {
public:
    explicit SingularC0(int season)
        : Error("singular lag-0 autocovariance at season " + std::to_string(season)),
          season(season) {}
    int season;
};

class SingularJ : public Error {
public:
    explicit SingularJ(int season)
        : Error("singular J block at season " + std::to_string(season)), season(season) {}
    int season;
};

class InvalidFactor : public Error {
public:
    using Error::Error;
};

class EmptyWeights : public Error {
public:
    using Error::Error;
};

class UnknownDgp : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace pvar
