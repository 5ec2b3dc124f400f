#pragma once

#include <stdexcept>
#include <string>

namespace srg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: shapes, class sets, file contents, configuration values.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyClass : public ValidationError {
public:
    explicit EmptyClass(int class_id)
        : ValidationError("class " + std::to_string(class_id) + " has no samples"), class_id(class_id) {}
    int class_id;
};

class ClassOrderMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ZeroColumn : public ValidationError {
public:
    ZeroColumn(int class_id, std::string space)
        : ValidationError("zero-norm column for class " + std::to_string(class_id) + " in space '" + space + "'"),
          class_id(class_id),
          space(std::move(space)) {}
    int class_id;
    std::string space;
};

class EmptyCandidateSet : public ValidationError {
public:
    EmptyCandidateSet() : ValidationError("candidate set is empty") {}
};

class MissingPrototype : public ValidationError {
public:
    explicit MissingPrototype(int class_id)
        : ValidationError("no prototype for class " + std::to_string(class_id)), class_id(class_id) {}
    int class_id;
};

class ManifestMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonSquare : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TooFewClasses : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical breakdown: NaN/Inf appearing mid-computation.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// The unseen block of (I - A) is singular or too badly conditioned to solve.
class SingularBlock : public Error {
public:
    explicit SingularBlock(double condition_estimate)
        : Error("unseen block of (I - A) is singular (condition estimate " + std::to_string(condition_estimate) + ")"),
          condition_estimate(condition_estimate) {}
    double condition_estimate;
};

class EigenFailure : public Error {
public:
    using Error::Error;
};

class ConditioningFailure : public Error {
public:
    using Error::Error;
};

}  // namespace srg
