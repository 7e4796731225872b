#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgbsde {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPartition : public Error {
public:
    using Error::Error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class InvalidParameters : public Error {
public:
    using Error::Error;
};

/// A coefficient returned a non-finite value during simulation.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(std::size_t path, std::size_t node, const std::string& what)
        : Error("non-finite value at path " + std::to_string(path) + ", node " +
                std::to_string(node) + ": " + what),
          path_(path), node_(node) {}

    std::size_t path() const noexcept { return path_; }
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t path_;
    std::size_t node_;
};

class AssumptionLevelTooLow : public Error {
public:
    using Error::Error;
};

class SingularFlow : public Error {
public:
    SingularFlow(std::size_t path, std::size_t node, double condition)
        : Error("flow matrix near singular at path " + std::to_string(path) + ", node " +
                std::to_string(node) + " (condition " + std::to_string(condition) + ")"),
          path_(path), node_(node) {}

    std::size_t path() const noexcept { return path_; }
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t path_;
    std::size_t node_;
};

/// Errors tied to one backward time step.
class StepError : public Error {
public:
    StepError(std::size_t step, const std::string& what)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class DegenerateRegression : public StepError {
public:
    using StepError::StepError;
};

class PicardDivergence : public StepError {
public:
    using StepError::StepError;
};

/// The backward solver only accepts drivers that are globally Lipschitz in (y, z).
class RejectedModel : public Error {
public:
    using Error::Error;
};

class DomainTooSmall : public Error {
public:
    using Error::Error;
};

class QuadratureUnstable : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class InvalidPoints : public Error {
public:
    using Error::Error;
};

class EnsembleFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace qgbsde
