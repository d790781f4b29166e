#pragma once

#include <stdexcept>
#include <string>

namespace fes {

/// Bad input data: malformed files, shape mismatches, failed validation.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while executing a graph or a campaign.
class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public DataError {
public:
    using DataError::DataError;
};

} // namespace fes
