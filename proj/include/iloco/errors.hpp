#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace iloco {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad inputs: files, configs, spec fields. CLI maps these to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

class MissingTargetError : public DataError {
public:
    using DataError::DataError;
};

class NonNumericColumnError : public DataError {
public:
    using DataError::DataError;
};

class EmptyDataError : public DataError {
public:
    using DataError::DataError;
};

class NonBinaryLabelsError : public DataError {
public:
    using DataError::DataError;
};

class TooFewRowsError : public DataError {
public:
    using DataError::DataError;
};

class InvalidSpecError : public DataError {
public:
    using DataError::DataError;
};

class ConfigError : public DataError {
public:
    using DataError::DataError;
};

// Failures while estimating. CLI maps these to exit code 3.
class EstimatorError : public Error {
public:
    using Error::Error;
};

class OrderUnsupportedError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

class DegenerateSubsampleError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

class ClippedModelUnsupportedError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

// No minipatch qualifies for a masked-average query. Carries the query and
// both the observed and the expected qualifying-patch counts so the caller
// can tell whether raising B would help.
class InsufficientCoverageError : public EstimatorError {
public:
    InsufficientCoverageError(std::size_t row, std::vector<int> excluded,
                              std::size_t qualifying, double expected);

    std::size_t row() const { return row_; }
    const std::vector<int>& excluded() const { return excluded_; }
    std::size_t qualifying() const { return qualifying_; }
    double expected() const { return expected_; }

private:
    static std::string format(std::size_t row, const std::vector<int>& excluded,
                              std::size_t qualifying, double expected);

    std::size_t row_;
    std::vector<int> excluded_;
    std::size_t qualifying_;
    double expected_;
};

}  // namespace iloco
