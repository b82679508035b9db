#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hiermap {

/// Hyperparameter outside its box, nonpositive index, or similar precondition failure.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A requested family/parameter combination that is not implemented (e.g. Matern with nu = 0.7).
class UnsupportedParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Factorization or arithmetic failure that cannot be recovered locally.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An objective returned a non-finite value; carries the offending point.
class EvaluationError : public NumericalError {
public:
    EvaluationError(const std::string& what, std::vector<double> theta)
        : NumericalError(what), theta_(std::move(theta)) {}

    const std::vector<double>& theta() const noexcept { return theta_; }

private:
    std::vector<double> theta_;
};

/// File could not be read or written; the message carries the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hiermap
