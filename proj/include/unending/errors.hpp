#pragma once

#include <stdexcept>
#include <string>

namespace unending {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed distribution, parameters out of range, bad grid.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// lambda <= mu: every bidder eventually wins for free, there is no threshold.
class ThresholdUndefined : public Error {
public:
    using Error::Error;
};

/// The requested chain is transient or null-recurrent.
class NonErgodic : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class GridTooCoarse : public Error {
public:
    using Error::Error;
};

/// Simulation pool grew past the configured cap.
class MemoryBudget : public Error {
public:
    using Error::Error;
};

}  // namespace unending
