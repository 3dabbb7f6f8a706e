#pragma once

#include <stdexcept>
#include <string>

namespace dimpim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument values (negative variance, dimension mismatch, ...).
struct DomainError : Error {
    using Error::Error;
};

// Raised by guarded SPD solves; carries the offending condition number.
struct SingularMatrixError : Error {
    double condition_number;
    SingularMatrixError(const std::string& msg, double cond)
        : Error(msg), condition_number(cond) {}
};

// Iterative fit failed to reach its convergence criterion.
struct ConvergenceError : Error {
    using Error::Error;
};

// Config-file parse/validation failure; line is 1-based, 0 if not tied to a line.
struct ConfigError : Error {
    int line;
    explicit ConfigError(const std::string& msg, int line_no = 0)
        : Error(msg), line(line_no) {}
};

}  // namespace dimpim
