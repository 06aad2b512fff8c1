// errors.hpp
//
// Exception hierarchy shared by all modules.  Every category maps to a
// distinct CLI exit code (see cli.cpp / README).

#pragma once

#include <stdexcept>
#include <string>

namespace cesplan {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (bad CSV cell, bad config line, bad MPS section...).
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input that violates a documented precondition
// (negative load, horizon not a multiple of 24, sigma_lo >= sigma_hi, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Feeder graph is not a rooted radial tree (cycle, disconnected node,
// duplicate line, unknown node reference).
struct TopologyError : Error {
    using Error::Error;
};

// A numeric argument is outside the mathematical domain of an operation
// (roulette draw outside [0,1), non-positive price scale, k larger than
// the number of distinct scenario vectors, ...).
struct DomainError : Error {
    using Error::Error;
};

// Model assembly failed (empty candidate set, mismatched dimensions, ...).
struct BuildError : Error {
    using Error::Error;
};

// A planning stage or evaluation solve ended without a usable solution.
struct SolveFailure : Error {
    using Error::Error;
};

}  // namespace cesplan
