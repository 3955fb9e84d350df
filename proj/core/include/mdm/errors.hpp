#pragma once

#include <stdexcept>
#include <string>

namespace mdm {

/// Base class for all library errors. Messages are prefixed with the
/// subsystem name so a driver can report where a run died.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A matrix does not have the shape or finiteness the caller declared.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A pseudo-inverse or linear solve hit a rank deficiency it cannot recover from.
class RankError : public Error {
public:
    RankError(const std::string& msg, int time_index, int achieved_rank)
        : Error(msg), k(time_index), rank(achieved_rank) {}
    int k;
    int rank;
};

/// Requested data (measurement/control window) is not available.
class DataError : public Error {
public:
    using Error::Error;
};

/// A matrix required to be positive semi-definite is not.
class NotPsdError : public Error {
public:
    using Error::Error;
};

} // namespace mdm
