#pragma once

#include <stdexcept>
#include <string>

namespace cma {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed arguments: non-finite samples, mismatched grids, bad parameters.
class InputError : public Error {
public:
    using Error::Error;
};

// Regularization guarantees (lower bound, Hessian bound) failed.
class ContractError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    enum class Kind { compatibility, positivity, iteration_cap, singular_metric, krylov };

    SolverError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class ConfigError : public Error {
public:
    ConfigError(int line, int column, const std::string& msg)
        : Error(format(line, column, msg)), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(int line, int column, const std::string& msg) {
        if (line <= 0) return "config: " + msg;
        return "config:" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg;
    }
    int line_;
    int column_;
};

}  // namespace cma
