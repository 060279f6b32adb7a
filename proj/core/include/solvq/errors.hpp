#pragma once

#include <stdexcept>
#include <string>

namespace solvq {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Lie-algebraic checks that need an involution were handed an algebra without one.
struct MissingInvolution : Error {
    using Error::Error;
};

// A sampled rank decision had no clear singular-value gap (ratio < 10).
struct RankAmbiguous : Error {
    using Error::Error;
};

// Grid data does not decay below the windowing threshold at the domain boundary,
// so spectral resampling would alias; enlarge the domain or shrink the data.
struct BoundaryMassError : Error {
    using Error::Error;
};

struct WrongSpaceTag : Error {
    using Error::Error;
};

struct GridMismatch : Error {
    using Error::Error;
};

// Quadrature work estimate exceeds the configured ceiling.
struct CostLimit : Error {
    using Error::Error;
};

// Borel resummation cutoffs were too tight for the requested Taylor match.
struct ScheduleTooAggressive : Error {
    using Error::Error;
};

struct NotSkewsymmetric : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace solvq
