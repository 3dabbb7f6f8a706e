#pragma once

#include <Eigen/Dense>
#include <string>

namespace dimpim {

// Condition number (ratio of extreme eigenvalues) of a symmetric matrix.
double spd_condition(const Eigen::MatrixXd& a);

// Solve a * x = b for symmetric positive-definite a.  Throws
// SingularMatrixError (message includes the condition number and `context`)
// if a is not numerically SPD or its condition number exceeds 1e12.
Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const std::string& context);

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& context);

// Neumaier-compensated accumulation of `term` into `sum` (elementwise),
// with per-entry compensation carried in `comp`.  Call finish_compensated
// (sum += comp) once all terms are in.
void compensated_add(Eigen::MatrixXd& sum, Eigen::MatrixXd& comp,
                     const Eigen::MatrixXd& term);
void finish_compensated(Eigen::MatrixXd& sum, const Eigen::MatrixXd& comp);

}  // namespace dimpim
